#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "segzero/config.hpp"
#include "segzero/dataprep.hpp"
#include "segzero/eval.hpp"
#include "segzero/grpo.hpp"
#include "segzero/policy.hpp"

namespace segzero::run {

/// The configured dataset file, or a generated synthetic set when the path is empty.
std::vector<dataprep::GroundTruthRecord> train_records(const config::RunConfig& cfg);
std::vector<dataprep::GroundTruthRecord> eval_records(const config::RunConfig& cfg);

policy::PolicyNet make_net(const config::RunConfig& cfg);
/// Rebuilds the network a checkpoint was trained with. Throws CheckpointError when the
/// shape is not one the segmentation task produces.
policy::PolicyNet make_net(const policy::Checkpoint& ckpt);

policy::Checkpoint initial_checkpoint(const config::RunConfig& cfg);

struct TrainHooks {
  std::function<void(const grpo::LogRow&, const grpo::TrainState&)> on_step;
  std::function<void(const grpo::TrainState&)> on_eval;
};

struct TrainResult {
  policy::Checkpoint checkpoint;
  std::vector<grpo::LogRow> log;
};

/// GRPO on the given records, scored by the configured rewards.
TrainResult train(const config::RunConfig& cfg,
                  std::span<const dataprep::GroundTruthRecord> records,
                  const TrainHooks& hooks = {});

/// Greedy (or sampled, when eval_temperature > 0) decoding of the checkpoint, segmented by
/// the configured backend.
eval::EvalReport evaluate(const config::RunConfig& cfg, const policy::Checkpoint& ckpt,
                          std::span<const dataprep::GroundTruthRecord> records,
                          const std::string& dataset_id);

}  // namespace segzero::run
