#include "segzero/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace segzero::grpo {

std::string_view to_string(RatioLevel r) { return r == RatioLevel::Token ? "token" : "sequence"; }

std::optional<RatioLevel> parse_ratio_level(std::string_view s) {
  if (s == "sequence") return RatioLevel::Sequence;
  if (s == "token") return RatioLevel::Token;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (group_size < 2) throw ConfigError("group_size must be at least 2");
  if (batch_rollouts < group_size || batch_rollouts % group_size != 0) {
    throw ConfigError("batch_rollouts must be a positive multiple of group_size");
  }
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("clip_eps must lie in (0, 1)");
  if (!(kl_beta >= 0.0)) throw ConfigError("kl_beta must be non-negative");
  if (!(std_eps > 0.0)) throw ConfigError("std_eps must be positive");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(max_grad_norm >= 0.0)) throw ConfigError("max_grad_norm must be non-negative");
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  if (eval_every < 0) throw ConfigError("eval_every must be non-negative");
  if (ref_refresh < 0) throw ConfigError("ref_refresh must be non-negative");
}

std::vector<double> compute_advantages(std::span<const double> totals, double std_eps) {
  if (totals.size() < 2) throw Error("a group needs at least two rewards");
  const double n = static_cast<double>(totals.size());
  const double mean = std::accumulate(totals.begin(), totals.end(), 0.0) / n;
  double var = 0.0;
  for (double r : totals) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> a(totals.size());
  for (std::size_t i = 0; i < totals.size(); ++i) a[i] = (totals[i] - mean) / (sd + std_eps);
  return a;
}

namespace {

// Surrogate term min(rho A, clip(rho) A) and its derivative with respect to log rho.
std::pair<double, double> clipped_term(double rho, double adv, double eps) {
  const double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps);
  const double unclipped_value = rho * adv;
  const double clipped_value = clipped * adv;
  if (unclipped_value <= clipped_value) return {unclipped_value, rho * adv};
  return {clipped_value, 0.0};
}

}  // namespace

Objective grpo_objective(const policy::PolicyNet& net, const policy::Context& ctx,
                         const RolloutGroup& group, std::span<const double> params,
                         const ObjectiveOptions& opt) {
  const std::size_t g = group.size();
  if (g < 2 || group.advantages.size() != g || group.old_logp.size() != g ||
      group.ref_token_logps.size() != g) {
    throw Error("rollout group '" + group.input_id + "' is incomplete");
  }
  Objective out;
  out.grad.assign(net.param_count(), 0.0);
  const double inv_g = 1.0 / static_cast<double>(g);
  for (std::size_t i = 0; i < g; ++i) {
    const auto& r = group.rollouts[i];
    const auto& ref = group.ref_token_logps[i];
    const double adv = group.advantages[i];
    double surrogate = 0.0;
    double kl = 0.0;
    auto weights = [&](std::span<const double> logps, std::span<double> w) {
      const std::size_t n = logps.size();
      if (n == 0) return;
      if (opt.ratio == RatioLevel::Sequence) {
        const double lp = std::accumulate(logps.begin(), logps.end(), 0.0);
        const double ref_lp = std::accumulate(ref.begin(), ref.end(), 0.0);
        const auto [value, dvalue] = clipped_term(std::exp(lp - group.old_logp[i]), adv,
                                                  opt.clip_eps);
        surrogate = value;
        kl = lp - ref_lp;
        std::fill(w.begin(), w.end(), inv_g * (-dvalue + opt.kl_beta));
      } else {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t) {
          const auto [value, dvalue] =
              clipped_term(std::exp(logps[t] - r.logps[t]), adv, opt.clip_eps);
          surrogate += value * inv_n;
          kl += (logps[t] - ref[t]) * inv_n;
          w[t] = inv_g * inv_n * (-dvalue + opt.kl_beta);
        }
      }
    };
    net.accumulate_grad(params, ctx, r.tokens, weights, out.grad, opt.temperature);
    out.policy_term -= inv_g * surrogate;
    out.kl += inv_g * kl;
  }
  out.loss = out.policy_term + opt.kl_beta * out.kl;
  const bool finite = std::isfinite(out.loss) &&
                      std::all_of(out.grad.begin(), out.grad.end(),
                                  [](double v) { return std::isfinite(v); });
  if (!finite) throw NonFiniteLoss(group.input_id);
  return out;
}

void write_log_header(std::ostream& out) { out << kLogHeader << '\n'; }

void write_log_row(std::ostream& out, const LogRow& r) {
  std::ostringstream line;
  line.precision(17);
  line << r.step << ',' << r.reward_total << ',' << r.reward_think << ',' << r.reward_format
       << ',' << r.reward_iou << ',' << r.reward_bbox_l1 << ',' << r.reward_point_l1 << ','
       << r.len_mean << ',' << r.len_min << ',' << r.kl << ',' << r.loss << '\n';
  out << line.str();
}

void write_log(std::ostream& out, const std::vector<LogRow>& rows) {
  write_log_header(out);
  for (const auto& r : rows) write_log_row(out, r);
}

std::vector<LogRow> read_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLogHeader) throw Error("unexpected training log header: " + line);
  std::vector<LogRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    std::istringstream s(line);
    LogRow r;
    char c = 0;
    s >> r.step >> c >> r.reward_total >> c >> r.reward_think >> c >> r.reward_format >> c >>
        r.reward_iou >> c >> r.reward_bbox_l1 >> c >> r.reward_point_l1 >> c >> r.len_mean >>
        c >> r.len_min >> c >> r.kl >> c >> r.loss;
    if (!s) throw Error("malformed training log row at line " + std::to_string(n));
    rows.push_back(r);
  }
  return rows;
}

TrainState initial_state(std::vector<double> params) {
  TrainState s;
  s.ref_params = params;
  s.params = std::move(params);
  return s;
}

namespace {

std::uint64_t rollout_seed(std::uint64_t seed, long step, std::size_t input, int sample) {
  const std::uint64_t stream = (static_cast<std::uint64_t>(step) << 24) ^
                               (static_cast<std::uint64_t>(input) << 8) ^
                               static_cast<std::uint64_t>(sample);
  return synth::seeded_rng(seed, stream)();
}

}  // namespace

LogRow train_step(const policy::PolicyNet& net, const TrainConfig& cfg, TrainState& state,
                  std::span<const Input> batch, std::vector<RolloutGroup>* groups_out) {
  if (batch.empty()) throw Error("training batch is empty");
  const bool same_ref = state.ref_params == state.params;
  std::vector<RolloutGroup> groups(batch.size());
  LogRow row;
  row.step = state.step;
  row.len_min = std::numeric_limits<double>::infinity();
  double n_rollouts = 0.0;

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Input& in = batch[b];
    RolloutGroup& grp = groups[b];
    grp.input_id = in.id;
    std::vector<double> totals;
    for (int k = 0; k < cfg.group_size; ++k) {
      policy::Rollout r = net.sample(state.params, *in.context, cfg.temperature,
                                     rollout_seed(cfg.seed, state.step, b, k));
      const rewards::RewardVector rv = in.score(r);
      grp.old_logp.push_back(r.logp());
      grp.ref_token_logps.push_back(
          same_ref ? r.logps
                   : net.token_log_probs(state.ref_params, *in.context, r.tokens,
                                         cfg.temperature));
      grp.ref_logp.push_back(std::accumulate(grp.ref_token_logps.back().begin(),
                                             grp.ref_token_logps.back().end(), 0.0));
      totals.push_back(rv.total);
      row.reward_total += rv.total;
      row.reward_think += rv.thinking_format;
      row.reward_format += rv.seg_format;
      row.reward_iou += rv.bbox_iou;
      row.reward_bbox_l1 += rv.bbox_l1;
      row.reward_point_l1 += rv.point_l1;
      row.len_mean += r.length;
      row.len_min = std::min(row.len_min, static_cast<double>(r.length));
      n_rollouts += 1.0;
      grp.rewards.push_back(rv);
      grp.rollouts.push_back(std::move(r));
    }
    grp.advantages = compute_advantages(totals, cfg.std_eps);
  }

  const ObjectiveOptions opt{cfg.clip_eps, cfg.kl_beta, cfg.ratio, cfg.temperature};
  std::vector<double> grad(net.param_count(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Objective obj = grpo_objective(net, *batch[b].context, groups[b], state.params, opt);
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += inv_b * obj.grad[j];
    row.loss += inv_b * obj.loss;
    row.kl += inv_b * obj.kl;
  }
  if (cfg.max_grad_norm > 0.0) {
    double sq = 0.0;
    for (double v : grad) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > cfg.max_grad_norm) {
      for (double& v : grad) v *= cfg.max_grad_norm / norm;
    }
  }
  for (std::size_t j = 0; j < grad.size(); ++j) {
    state.params[j] -= cfg.learning_rate * (grad[j] + cfg.weight_decay * state.params[j]);
  }
  ++state.step;
  if (cfg.ref_refresh > 0 && state.step % cfg.ref_refresh == 0) state.ref_params = state.params;

  row.reward_total /= n_rollouts;
  row.reward_think /= n_rollouts;
  row.reward_format /= n_rollouts;
  row.reward_iou /= n_rollouts;
  row.reward_bbox_l1 /= n_rollouts;
  row.reward_point_l1 /= n_rollouts;
  row.len_mean /= n_rollouts;
  if (groups_out) *groups_out = std::move(groups);
  return row;
}

std::vector<LogRow> train(const policy::PolicyNet& net, const TrainConfig& cfg,
                          TrainState& state, std::span<const Input> inputs,
                          const TrainHooks& hooks) {
  cfg.validate();
  if (inputs.empty() && cfg.max_steps > 0) throw Error("training set is empty");
  const std::size_t per_step = static_cast<std::size_t>(cfg.inputs_per_step());
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  std::uint64_t epoch = 0;
  auto next_index = [&]() {
    if (cursor == order.size()) {
      order.resize(inputs.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      auto rng = synth::seeded_rng(cfg.seed, 0xe90c00 + epoch++);
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    return order[cursor++];
  };

  std::vector<LogRow> log;
  bool evaluated = false;
  for (long s = 0; s < cfg.max_steps; ++s) {
    std::vector<Input> batch;
    for (std::size_t k = 0; k < per_step; ++k) batch.push_back(inputs[next_index()]);
    log.push_back(train_step(net, cfg, state, batch));
    evaluated = false;
    if (hooks.on_step) hooks.on_step(log.back(), state);
    if (cfg.eval_every > 0 && state.step % cfg.eval_every == 0 && hooks.on_eval) {
      hooks.on_eval(state);
      evaluated = true;
    }
  }
  if (!evaluated && hooks.on_eval) hooks.on_eval(state);
  return log;
}

}  // namespace segzero::grpo
