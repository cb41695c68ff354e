#include "segzero/rewards.hpp"

#include <algorithm>
#include <cctype>

namespace segzero::rewards {

std::string_view to_string(AccuracyMode m) { return m == AccuracyMode::Hard ? "hard" : "soft"; }

std::optional<AccuracyMode> parse_accuracy_mode(std::string_view s) {
  if (s == "hard") return AccuracyMode::Hard;
  if (s == "soft") return AccuracyMode::Soft;
  return std::nullopt;
}

std::string_view to_string(PointGate g) {
  return g == PointGate::PredictedBox ? "predicted" : "ground_truth";
}

std::optional<PointGate> parse_point_gate(std::string_view s) {
  if (s == "predicted") return PointGate::PredictedBox;
  if (s == "ground_truth") return PointGate::GroundTruthBox;
  return std::nullopt;
}

void RewardConfig::validate() const {
  if (!(iou_threshold > 0.0) || !(bbox_l1_threshold > 0.0) || !(point_l1_threshold > 0.0)) {
    throw Error("reward thresholds must be positive");
  }
  if (!(iou_threshold < 1.0)) throw Error("iou_threshold must be below 1");
  if (image_size != kFrameSize) {
    throw Error("reward image_size must match the dataset frame (" +
                std::to_string(kFrameSize) + ")");
  }
}

double thinking_format_reward(const parser::ParsedResponse& r) {
  if (!r.structure_valid || !r.think) return 0.0;
  const bool has_content = std::any_of(r.think->begin(), r.think->end(), [](unsigned char c) {
    return !std::isspace(c);
  });
  return has_content ? 1.0 : 0.0;
}

double seg_format_reward(const std::optional<std::string>& answer, parser::FormatMode mode) {
  if (!answer) return 0.0;
  return parser::parse_answer(*answer, mode).ok() ? 1.0 : 0.0;
}

double bbox_iou_reward(const geometry::BBox& pred, const geometry::BBox& gt,
                       const RewardConfig& cfg) {
  const double iou = geometry::bbox_iou(pred, gt);
  if (cfg.accuracy_mode == AccuracyMode::Soft) return iou;
  return iou > cfg.iou_threshold ? 1.0 : 0.0;
}

namespace {

double soft_distance_reward(double distance, double image_size) {
  return std::max(0.0, 1.0 - distance / image_size);
}

}  // namespace

double bbox_l1_reward(const geometry::BBox& pred, const geometry::BBox& gt,
                      const RewardConfig& cfg) {
  const double d = geometry::bbox_l1(pred, gt);
  if (cfg.accuracy_mode == AccuracyMode::Soft) return soft_distance_reward(d, cfg.image_size);
  return d < cfg.bbox_l1_threshold ? 1.0 : 0.0;
}

double point_l1_reward(const geometry::Point& pred_p1, const geometry::Point& pred_p2,
                       const geometry::BBox& gate_box, const geometry::Point& gt_p1,
                       const geometry::Point& gt_p2, const RewardConfig& cfg) {
  if (!geometry::point_in_bbox(pred_p1, gate_box) || !geometry::point_in_bbox(pred_p2, gate_box)) {
    return 0.0;
  }
  const double d = std::min({geometry::point_l1(pred_p1, gt_p1), geometry::point_l1(pred_p1, gt_p2),
                             geometry::point_l1(pred_p2, gt_p1), geometry::point_l1(pred_p2, gt_p2)});
  if (cfg.accuracy_mode == AccuracyMode::Soft) return soft_distance_reward(d, cfg.image_size);
  return d < cfg.point_l1_threshold ? 1.0 : 0.0;
}

RewardVector score(std::string_view response, const geometry::BBox& gt_bbox,
                   const geometry::Point& gt_p1, const geometry::Point& gt_p2,
                   const RewardConfig& cfg) {
  const parser::Extraction e = parser::extract_prompt(response, cfg.format_mode);
  RewardVector v;
  v.thinking_format = thinking_format_reward(e.response);
  v.seg_format = seg_format_reward(e.response.answer, cfg.format_mode);
  if (e.prompt) {
    const auto& p = *e.prompt;
    v.bbox_iou = bbox_iou_reward(p.bbox, gt_bbox, cfg);
    v.bbox_l1 = bbox_l1_reward(p.bbox, gt_bbox, cfg);
    const auto& gate = cfg.point_gate == PointGate::PredictedBox ? p.bbox : gt_bbox;
    v.point_l1 = point_l1_reward(p.p1, p.p2, gate, gt_p1, gt_p2, cfg);
  }
  v.total = v.thinking_format + v.seg_format + v.bbox_iou + v.bbox_l1 + v.point_l1;
  return v;
}

RewardVector score(std::string_view response, const dataprep::GroundTruthRecord& gt,
                   const RewardConfig& cfg) {
  return score(response, gt.gt_bbox, gt.gt_p1, gt.gt_p2, cfg);
}

}  // namespace segzero::rewards
