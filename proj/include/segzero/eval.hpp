#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "segzero/dataprep.hpp"
#include "segzero/geometry.hpp"
#include "segzero/policy.hpp"
#include "segzero/rewards.hpp"
#include "segzero/segmenter.hpp"

namespace segzero::eval {

struct EmptyEvalSet : Error {
  EmptyEvalSet() : Error("evaluation set is empty") {}
};

/// A component failure while evaluating one record.
struct RecordError : Error {
  RecordError(std::string id, const std::string& what, bool backend)
      : Error("record '" + id + "': " + what), record_id(std::move(id)), backend(backend) {}
  std::string record_id;
  bool backend;  // raised by the segmentation backend
};

struct MaskPair {
  const geometry::BinaryMask* pred = nullptr;
  const geometry::BinaryMask* gt = nullptr;
};

/// Mean of the per-pair mask IoUs.
double giou(std::span<const MaskPair> pairs);
/// Summed intersections over summed unions; 1 when every union is empty, as mask_iou does.
double ciou(std::span<const MaskPair> pairs);

/// Produces one response text per record.
class ResponseSource {
 public:
  virtual ~ResponseSource() = default;
  virtual std::string respond(const dataprep::GroundTruthRecord& record,
                              const policy::Context& ctx) = 0;
  virtual std::string name() const = 0;
};

/// Greedy decoding of the policy, or sampling when temperature is set.
class PolicySource : public ResponseSource {
 public:
  PolicySource(const policy::PolicyNet& net, std::vector<double> params);
  PolicySource(const policy::PolicyNet& net, std::vector<double> params, double temperature,
               std::uint64_t seed);
  std::string respond(const dataprep::GroundTruthRecord& record,
                      const policy::Context& ctx) override;
  std::string name() const override;

 private:
  const policy::PolicyNet& net_;
  std::vector<double> params_;
  double temperature_ = 0.0;  // 0: greedy
  std::uint64_t seed_ = 0;
  std::uint64_t calls_ = 0;
};

/// The canonical response built from the ground truth, with the query as its reasoning.
class OracleSource : public ResponseSource {
 public:
  std::string respond(const dataprep::GroundTruthRecord& record,
                      const policy::Context& ctx) override;
  std::string name() const override { return "oracle"; }
};

class EmptySource : public ResponseSource {
 public:
  std::string respond(const dataprep::GroundTruthRecord&, const policy::Context&) override {
    return {};
  }
  std::string name() const override { return "empty"; }
};

struct SampleResult {
  std::string id;
  double iou = 0.0;
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
  rewards::RewardVector rewards;

  friend bool operator==(const SampleResult&, const SampleResult&) = default;
};

struct EvalReport {
  std::string dataset_id;
  std::size_t n = 0;
  double giou = 0.0;
  double ciou = 0.0;
  rewards::RewardVector reward_means;
  std::vector<SampleResult> samples;
  std::map<std::string, std::string> config;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct BenchmarkOptions {
  std::string dataset_id = "synth";
  rewards::RewardConfig reward;
  segmenter::SegBackend backend;
  std::map<std::string, std::string> config;  // copied into the report
};

/// For each record: response, prompt extraction, segmentation, accumulation. An answer that
/// yields no prompt scores an empty mask. Component failures surface as RecordError.
EvalReport run_benchmark(std::span<const dataprep::GroundTruthRecord> records,
                         ResponseSource& source, const BenchmarkOptions& opt);

std::string to_json(const EvalReport& r);
EvalReport report_from_json(const std::string& text);

inline constexpr std::string_view kSampleHeader =
    "id,iou,intersection,union,thinking_format,seg_format,bbox_iou,bbox_l1,point_l1,total";

void write_samples_csv(std::ostream& out, const EvalReport& r);
std::vector<SampleResult> read_samples_csv(std::istream& in);

/// Aligned text table: one row per dataset with gIoU, cIoU and reward means.
void write_table(std::ostream& out, std::span<const EvalReport> reports);

/// Writes report.json, samples.csv and table.txt into dir.
void write_report_files(const std::filesystem::path& dir, const EvalReport& r);

}  // namespace segzero::eval
