#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "segzero/dataprep.hpp"
#include "segzero/geometry.hpp"
#include "segzero/parser.hpp"

namespace segzero::rewards {

enum class AccuracyMode { Hard, Soft };
enum class PointGate { PredictedBox, GroundTruthBox };

std::string_view to_string(AccuracyMode m);
std::optional<AccuracyMode> parse_accuracy_mode(std::string_view s);
std::string_view to_string(PointGate g);
std::optional<PointGate> parse_point_gate(std::string_view s);

struct RewardConfig {
  parser::FormatMode format_mode = parser::FormatMode::Strict;
  AccuracyMode accuracy_mode = AccuracyMode::Hard;
  double iou_threshold = 0.5;
  double bbox_l1_threshold = 10.0;
  double point_l1_threshold = 100.0;
  double image_size = kFrameSize;
  PointGate point_gate = PointGate::PredictedBox;

  void validate() const;
};

struct RewardVector {
  double thinking_format = 0.0;
  double seg_format = 0.0;
  double bbox_iou = 0.0;
  double bbox_l1 = 0.0;
  double point_l1 = 0.0;
  double total = 0.0;

  friend bool operator==(const RewardVector&, const RewardVector&) = default;
};

double thinking_format_reward(const parser::ParsedResponse& r);
double seg_format_reward(const std::optional<std::string>& answer, parser::FormatMode mode);

/// Hard: 1 iff IoU > threshold. Soft: the IoU itself.
double bbox_iou_reward(const geometry::BBox& pred, const geometry::BBox& gt,
                       const RewardConfig& cfg);
/// Hard: 1 iff L1 < threshold. Soft: max(0, 1 - L1 / image_size).
double bbox_l1_reward(const geometry::BBox& pred, const geometry::BBox& gt,
                      const RewardConfig& cfg);
/// Zero unless both predicted points lie in the gating box; otherwise scored on the
/// minimum L1 over the four predicted/ground-truth pairings.
double point_l1_reward(const geometry::Point& pred_p1, const geometry::Point& pred_p2,
                       const geometry::BBox& gate_box, const geometry::Point& gt_p1,
                       const geometry::Point& gt_p2, const RewardConfig& cfg);

RewardVector score(std::string_view response, const geometry::BBox& gt_bbox,
                   const geometry::Point& gt_p1, const geometry::Point& gt_p2,
                   const RewardConfig& cfg);
RewardVector score(std::string_view response, const dataprep::GroundTruthRecord& gt,
                   const RewardConfig& cfg);

}  // namespace segzero::rewards
