#include "segzero/eval.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "segzero/image.hpp"
#include "segzero/task.hpp"

namespace segzero::eval {

using nlohmann::json;

namespace {

void check_pairs(std::span<const MaskPair> pairs) {
  if (pairs.empty()) throw EmptyEvalSet();
  for (const auto& p : pairs) {
    if (p.pred->width() != p.gt->width() || p.pred->height() != p.gt->height()) {
      throw DimensionMismatch(p.pred->width(), p.pred->height(), p.gt->width(), p.gt->height());
    }
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

json rewards_json(const rewards::RewardVector& v) {
  return {{"thinking_format", v.thinking_format}, {"seg_format", v.seg_format},
          {"bbox_iou", v.bbox_iou},               {"bbox_l1", v.bbox_l1},
          {"point_l1", v.point_l1},               {"total", v.total}};
}

rewards::RewardVector rewards_from(const json& j) {
  rewards::RewardVector v;
  v.thinking_format = j.at("thinking_format").get<double>();
  v.seg_format = j.at("seg_format").get<double>();
  v.bbox_iou = j.at("bbox_iou").get<double>();
  v.bbox_l1 = j.at("bbox_l1").get<double>();
  v.point_l1 = j.at("point_l1").get<double>();
  v.total = j.at("total").get<double>();
  return v;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

double giou(std::span<const MaskPair> pairs) {
  check_pairs(pairs);
  double sum = 0.0;
  for (const auto& p : pairs) sum += geometry::mask_iou(*p.pred, *p.gt);
  return sum / static_cast<double>(pairs.size());
}

double ciou(std::span<const MaskPair> pairs) {
  check_pairs(pairs);
  std::uint64_t inter = 0;
  std::uint64_t uni = 0;
  for (const auto& p : pairs) {
    inter += p.pred->intersection_count(*p.gt);
    uni += p.pred->union_count(*p.gt);
  }
  // Matches mask_iou, which scores two empty masks as identical.
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

PolicySource::PolicySource(const policy::PolicyNet& net, std::vector<double> params)
    : net_(net), params_(std::move(params)) {}

PolicySource::PolicySource(const policy::PolicyNet& net, std::vector<double> params,
                           double temperature, std::uint64_t seed)
    : net_(net), params_(std::move(params)), temperature_(temperature), seed_(seed) {
  if (!(temperature > 0.0)) throw Error("sampling temperature must be positive");
}

std::string PolicySource::respond(const dataprep::GroundTruthRecord&,
                                  const policy::Context& ctx) {
  if (temperature_ == 0.0) return net_.greedy(params_, ctx).text;
  const std::uint64_t seed = seed_ ^ (0x9e3779b97f4a7c15ULL * ++calls_);
  return net_.sample(params_, ctx, temperature_, seed).text;
}

std::string PolicySource::name() const {
  return temperature_ == 0.0 ? "policy-greedy" : "policy-sampled(T=" + fixed(temperature_, 3) + ")";
}

std::string OracleSource::respond(const dataprep::GroundTruthRecord& record,
                                  const policy::Context&) {
  return parser::canonical_response(record.query_text, {record.gt_bbox, record.gt_p1, record.gt_p2});
}

EvalReport run_benchmark(std::span<const dataprep::GroundTruthRecord> records,
                         ResponseSource& source, const BenchmarkOptions& opt) {
  if (records.empty()) throw EmptyEvalSet();
  opt.reward.validate();
  opt.backend.validate();

  EvalReport report;
  report.dataset_id = opt.dataset_id;
  report.n = records.size();
  report.config = opt.config;
  report.config["source"] = source.name();
  report.config["backend"] = std::string(segmenter::to_string(opt.backend.kind));
  report.config["format_mode"] = std::string(parser::to_string(opt.reward.format_mode));

  std::uint64_t inter_sum = 0;
  std::uint64_t union_sum = 0;
  double iou_sum = 0.0;
  for (const auto& rec : records) {
    SampleResult s;
    s.id = rec.id;
    try {
      std::optional<synth::Scene> scene;
      if (rec.scene) scene = dataprep::render(*rec.scene);
      const policy::Context ctx = task::make_context(rec, scene ? &*scene : nullptr);
      const std::string response = source.respond(rec, ctx);
      s.rewards = rewards::score(response, rec, opt.reward);
      const auto extraction = parser::extract_prompt(response, opt.reward.format_mode);

      geometry::BinaryMask pred(rec.gt_mask.width(), rec.gt_mask.height());
      if (extraction.prompt) {
        if (!scene) throw Error("record has no scene to segment");
        const auto prompt = parser::normalize(*extraction.prompt);
        if (opt.backend.kind == segmenter::BackendKind::Synthetic) {
          pred = segmenter::segment_synthetic(*scene, prompt);
        } else {
          pred = segmenter::segment_remote(image::encode_png(image::render_rgb(*scene)), prompt,
                                           opt.backend);
        }
      }
      if (pred.width() != rec.gt_mask.width() || pred.height() != rec.gt_mask.height()) {
        throw DimensionMismatch(pred.width(), pred.height(), rec.gt_mask.width(),
                                rec.gt_mask.height());
      }
      s.intersection = pred.intersection_count(rec.gt_mask);
      s.union_ = pred.union_count(rec.gt_mask);
      s.iou = geometry::mask_iou(pred, rec.gt_mask);
    } catch (const segmenter::BackendError& e) {
      throw RecordError(rec.id, e.what(), true);
    } catch (const RecordError&) {
      throw;
    } catch (const Error& e) {
      throw RecordError(rec.id, e.what(), false);
    }
    iou_sum += s.iou;
    inter_sum += s.intersection;
    union_sum += s.union_;
    auto& m = report.reward_means;
    m.thinking_format += s.rewards.thinking_format;
    m.seg_format += s.rewards.seg_format;
    m.bbox_iou += s.rewards.bbox_iou;
    m.bbox_l1 += s.rewards.bbox_l1;
    m.point_l1 += s.rewards.point_l1;
    m.total += s.rewards.total;
    report.samples.push_back(std::move(s));
  }
  const double n = static_cast<double>(records.size());
  report.giou = iou_sum / n;
  report.ciou = union_sum == 0 ? 1.0 : static_cast<double>(inter_sum) / static_cast<double>(union_sum);
  auto& m = report.reward_means;
  for (double* v : {&m.thinking_format, &m.seg_format, &m.bbox_iou, &m.bbox_l1, &m.point_l1, &m.total}) {
    *v /= n;
  }
  return report;
}

std::string to_json(const EvalReport& r) {
  json samples = json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"id", s.id},
                       {"iou", s.iou},
                       {"intersection", s.intersection},
                       {"union", s.union_},
                       {"rewards", rewards_json(s.rewards)}});
  }
  const json j = {{"dataset_id", r.dataset_id},
                  {"n", r.n},
                  {"giou", r.giou},
                  {"ciou", r.ciou},
                  {"reward_means", rewards_json(r.reward_means)},
                  {"config", r.config},
                  {"samples", samples}};
  return j.dump(2);
}

EvalReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.giou = j.at("giou").get<double>();
    r.ciou = j.at("ciou").get<double>();
    r.reward_means = rewards_from(j.at("reward_means"));
    r.config = j.at("config").get<std::map<std::string, std::string>>();
    for (const auto& s : j.at("samples")) {
      SampleResult x;
      x.id = s.at("id").get<std::string>();
      x.iou = s.at("iou").get<double>();
      x.intersection = s.at("intersection").get<std::uint64_t>();
      x.union_ = s.at("union").get<std::uint64_t>();
      x.rewards = rewards_from(s.at("rewards"));
      r.samples.push_back(std::move(x));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed evaluation report: ") + e.what());
  }
}

void write_samples_csv(std::ostream& out, const EvalReport& r) {
  out << kSampleHeader << '\n';
  out << std::setprecision(17);
  for (const auto& s : r.samples) {
    const auto& v = s.rewards;
    out << csv_field(s.id) << ',' << s.iou << ',' << s.intersection << ',' << s.union_ << ','
        << v.thinking_format << ',' << v.seg_format << ',' << v.bbox_iou << ',' << v.bbox_l1
        << ',' << v.point_l1 << ',' << v.total << '\n';
  }
}

std::vector<SampleResult> read_samples_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSampleHeader) {
    throw Error("per-sample CSV has an unexpected header");
  }
  std::vector<SampleResult> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) throw Error("per-sample CSV line " + std::to_string(line_no) + ": 10 fields expected");
    try {
      SampleResult s;
      s.id = f[0];
      s.iou = std::stod(f[1]);
      s.intersection = std::stoull(f[2]);
      s.union_ = std::stoull(f[3]);
      s.rewards = {std::stod(f[4]), std::stod(f[5]), std::stod(f[6]),
                   std::stod(f[7]), std::stod(f[8]), std::stod(f[9])};
      out.push_back(std::move(s));
    } catch (const std::logic_error&) {
      throw Error("per-sample CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

void write_table(std::ostream& out, std::span<const EvalReport> reports) {
  const std::vector<std::string> head = {"dataset", "n",      "gIoU",    "cIoU",     "think",
                                         "format",  "bbox_iou", "bbox_l1", "point_l1", "total"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    const auto& m = r.reward_means;
    rows.push_back({r.dataset_id, std::to_string(r.n), fixed(r.giou), fixed(r.ciou),
                    fixed(m.thinking_format), fixed(m.seg_format), fixed(m.bbox_iou),
                    fixed(m.bbox_l1), fixed(m.point_l1), fixed(m.total)});
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    width[c] = head[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      if (c == 0) {
        out << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      } else {
        out << std::right << std::setw(static_cast<int>(width[c])) << row[c];
      }
    }
    out << '\n';
  };
  emit(head);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : rows) emit(row);
}

void write_report_files(const std::filesystem::path& dir, const EvalReport& r) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("report.json");
    f << to_json(r) << '\n';
  }
  {
    auto f = open("samples.csv");
    write_samples_csv(f, r);
  }
  {
    auto f = open("table.txt");
    write_table(f, std::span<const EvalReport>(&r, 1));
  }
}

}  // namespace segzero::eval
