#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segzero/policy.hpp"
#include "segzero/rewards.hpp"

namespace segzero::grpo {

struct NonFiniteLoss : Error {
  explicit NonFiniteLoss(std::string group_id)
      : Error("non-finite loss or gradient in group '" + group_id + "'"),
        group(std::move(group_id)) {}
  std::string group;
};

struct ConfigError : Error {
  using Error::Error;
};

enum class RatioLevel { Sequence, Token };

std::string_view to_string(RatioLevel r);
std::optional<RatioLevel> parse_ratio_level(std::string_view s);

struct TrainConfig {
  int group_size = 8;
  int batch_rollouts = 16;  // rollouts per step across all inputs
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double clip_eps = 0.2;
  double kl_beta = 0.04;
  double std_eps = 1e-4;
  double temperature = 1.0;
  double max_grad_norm = 0.0;  // 0: no clipping of the batch gradient
  long max_steps = 2000;
  long eval_every = 0;   // 0: evaluate only at the end
  long ref_refresh = 0;  // 0: the reference stays at the initial parameters
  RatioLevel ratio = RatioLevel::Sequence;
  std::uint64_t seed = 1;

  void validate() const;
  int inputs_per_step() const { return batch_rollouts / group_size; }
};

struct RolloutGroup {
  std::string input_id;
  std::vector<policy::Rollout> rollouts;
  std::vector<rewards::RewardVector> rewards;
  std::vector<double> advantages;
  std::vector<double> old_logp;  // sequence log-probs under the sampling parameters
  std::vector<double> ref_logp;  // sequence log-probs under the reference parameters
  std::vector<std::vector<double>> ref_token_logps;

  std::size_t size() const { return rollouts.size(); }
};

/// (r - mean) / (population std + std_eps). Requires at least two rewards.
std::vector<double> compute_advantages(std::span<const double> totals, double std_eps);

struct Objective {
  double loss = 0.0;
  double policy_term = 0.0;
  double kl = 0.0;
  std::vector<double> grad;
};

struct ObjectiveOptions {
  double clip_eps = 0.2;
  double kl_beta = 0.04;
  RatioLevel ratio = RatioLevel::Sequence;
  double temperature = 1.0;
};

/// Clipped surrogate plus KL penalty for one group, and its exact gradient. Throws
/// NonFiniteLoss naming the group when the loss or gradient is not finite.
Objective grpo_objective(const policy::PolicyNet& net, const policy::Context& ctx,
                         const RolloutGroup& group, std::span<const double> params,
                         const ObjectiveOptions& opt);

struct LogRow {
  long step = 0;
  double reward_total = 0.0;
  double reward_think = 0.0;
  double reward_format = 0.0;
  double reward_iou = 0.0;
  double reward_bbox_l1 = 0.0;
  double reward_point_l1 = 0.0;
  double len_mean = 0.0;
  double len_min = 0.0;
  double kl = 0.0;
  double loss = 0.0;

  friend bool operator==(const LogRow&, const LogRow&) = default;
};

inline constexpr std::string_view kLogHeader =
    "step,reward_total,reward_think,reward_format,reward_iou,reward_bbox_l1,reward_point_l1,"
    "len_mean,len_min,kl,loss";

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const LogRow& row);
void write_log(std::ostream& out, const std::vector<LogRow>& rows);
std::vector<LogRow> read_log(std::istream& in);

/// One training input: its conditioning and the reward function for its rollouts.
struct Input {
  std::string id;
  const policy::Context* context = nullptr;
  std::function<rewards::RewardVector(const policy::Rollout&)> score;
};

struct TrainState {
  std::vector<double> params;
  std::vector<double> ref_params;
  long step = 0;
};

TrainState initial_state(std::vector<double> params);

/// Samples one group per input, scores, normalizes, and applies one SGD step with weight
/// decay. The row describes the rollouts sampled before the update.
LogRow train_step(const policy::PolicyNet& net, const TrainConfig& cfg, TrainState& state,
                  std::span<const Input> batch, std::vector<RolloutGroup>* groups_out = nullptr);

struct TrainHooks {
  std::function<void(const LogRow&, const TrainState&)> on_step;
  /// Called after every eval_every steps and once after the last step.
  std::function<void(const TrainState&)> on_eval;
};

/// Cycles through `inputs` in per-epoch shuffled order for cfg.max_steps steps.
std::vector<LogRow> train(const policy::PolicyNet& net, const TrainConfig& cfg,
                          TrainState& state, std::span<const Input> inputs,
                          const TrainHooks& hooks = {});

}  // namespace segzero::grpo
