#include "segzero/run.hpp"

#include "segzero/task.hpp"

namespace segzero::run {

namespace {

std::vector<dataprep::GroundTruthRecord> records_for(const config::RunConfig& cfg,
                                                     const std::string& path, std::size_t n,
                                                     std::uint64_t seed) {
  if (!path.empty()) return dataprep::read_dataset(std::filesystem::path(path));
  return dataprep::make_synth_dataset(n, seed, cfg.min_objects, cfg.max_objects);
}

}  // namespace

std::vector<dataprep::GroundTruthRecord> train_records(const config::RunConfig& cfg) {
  return records_for(cfg, cfg.train_data, cfg.train_samples, cfg.data_seed);
}

std::vector<dataprep::GroundTruthRecord> eval_records(const config::RunConfig& cfg) {
  return records_for(cfg, cfg.eval_data, cfg.eval_samples, cfg.eval_data_seed);
}

policy::PolicyNet make_net(const config::RunConfig& cfg) {
  return task::make_policy(task::seg_shape(cfg.hidden, cfg.embed, cfg.max_len));
}

policy::PolicyNet make_net(const policy::Checkpoint& ckpt) {
  const auto& s = ckpt.shape;
  if (s != task::seg_shape(s.hidden, s.embed, s.max_len)) {
    throw policy::CheckpointError("checkpoint shape does not match the segmentation task");
  }
  auto net = task::make_policy(s);
  if (ckpt.params.size() != net.param_count()) {
    throw policy::CheckpointError("checkpoint has " + std::to_string(ckpt.params.size()) +
                                  " parameters, network expects " +
                                  std::to_string(net.param_count()));
  }
  return net;
}

policy::Checkpoint initial_checkpoint(const config::RunConfig& cfg) {
  const auto net = make_net(cfg);
  return {net.shape(), net.init(cfg.init_seed), cfg.init_seed, cfg.train.seed, 0};
}

TrainResult train(const config::RunConfig& cfg,
                  std::span<const dataprep::GroundTruthRecord> records,
                  const TrainHooks& hooks) {
  cfg.validate();
  if (records.empty()) throw config::ConfigError("training set is empty");
  const auto net = make_net(cfg);

  std::vector<policy::Context> contexts;
  contexts.reserve(records.size());
  for (const auto& r : records) contexts.push_back(task::make_context(r));

  std::vector<grpo::Input> inputs;
  inputs.reserve(records.size());
  const rewards::RewardConfig reward = cfg.reward;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto* rec = &records[i];
    inputs.push_back({rec->id, &contexts[i], [rec, reward](const policy::Rollout& ro) {
                        return rewards::score(ro.text, *rec, reward);
                      }});
  }

  auto state = grpo::initial_state(net.init(cfg.init_seed));
  grpo::TrainHooks gh{hooks.on_step, hooks.on_eval};
  TrainResult out;
  if (cfg.train.max_steps > 0) out.log = grpo::train(net, cfg.train, state, inputs, gh);
  out.checkpoint = {net.shape(), state.params, cfg.init_seed, cfg.train.seed, state.step};
  return out;
}

eval::EvalReport evaluate(const config::RunConfig& cfg, const policy::Checkpoint& ckpt,
                          std::span<const dataprep::GroundTruthRecord> records,
                          const std::string& dataset_id) {
  const auto net = make_net(ckpt);
  eval::PolicySource source = cfg.eval_temperature > 0.0
                                  ? eval::PolicySource(net, ckpt.params, cfg.eval_temperature,
                                                       cfg.eval_seed)
                                  : eval::PolicySource(net, ckpt.params);
  eval::BenchmarkOptions opt;
  opt.dataset_id = dataset_id;
  opt.reward = cfg.reward;
  opt.backend = cfg.backend;
  opt.config = cfg.to_map();
  opt.config["checkpoint_step"] = std::to_string(ckpt.step);
  return eval::run_benchmark(records, source, opt);
}

}  // namespace segzero::run
