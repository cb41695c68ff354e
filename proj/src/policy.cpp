#include "segzero/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "json.hpp"
#include "segzero/vocabulary.hpp"

namespace segzero::policy {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using MutMatMap = Eigen::Map<RowMat>;
using MutVecMap = Eigen::Map<Eigen::VectorXd>;

struct Weights {
  Weights(const PolicyShape& s, const Layout& l, const double* p)
      : embedding(p + l.embedding, s.vocab + 1, s.embed),
        w_embed(p + l.w_embed, s.hidden, s.embed),
        w_context(p + l.w_context, s.hidden, s.context),
        w_cue(p + l.w_cue, s.hidden, s.cues),
        w_recur(p + l.w_recur, s.hidden, s.hidden),
        b_hidden(p + l.b_hidden, s.hidden),
        w_out(p + l.w_out, s.vocab, s.hidden),
        b_out(p + l.b_out, s.vocab),
        kernel(p + l.copy_kernel, 2 * s.copy_radius + 1),
        echo(p + l.echo_gain, s.echo ? 1 : 0) {}

  MatMap embedding, w_embed, w_context, w_cue, w_recur;
  VecMap b_hidden;
  MatMap w_out;
  VecMap b_out, kernel, echo;
};

struct Grads {
  Grads(const PolicyShape& s, const Layout& l, double* p)
      : embedding(p + l.embedding, s.vocab + 1, s.embed),
        w_embed(p + l.w_embed, s.hidden, s.embed),
        w_context(p + l.w_context, s.hidden, s.context),
        w_cue(p + l.w_cue, s.hidden, s.cues),
        w_recur(p + l.w_recur, s.hidden, s.hidden),
        b_hidden(p + l.b_hidden, s.hidden),
        w_out(p + l.w_out, s.vocab, s.hidden),
        b_out(p + l.b_out, s.vocab),
        kernel(p + l.copy_kernel, 2 * s.copy_radius + 1),
        echo(p + l.echo_gain, s.echo ? 1 : 0) {}

  MutMatMap embedding, w_embed, w_context, w_cue, w_recur;
  MutVecMap b_hidden;
  MutMatMap w_out;
  MutVecMap b_out, kernel, echo;
};

// Writes softmax(z) into p and returns log-sum-exp of z.
double softmax(const Eigen::VectorXd& z, Eigen::VectorXd& p) {
  const double m = z.maxCoeff();
  p = (z.array() - m).exp();
  const double s = p.sum();
  p /= s;
  return m + std::log(s);
}

}  // namespace

Layout::Layout(const PolicyShape& s) {
  std::size_t at = 0;
  auto take = [&at](std::size_t n) {
    const std::size_t here = at;
    at += n;
    return here;
  };
  const auto v = static_cast<std::size_t>(s.vocab);
  const auto d = static_cast<std::size_t>(s.embed);
  const auto h = static_cast<std::size_t>(s.hidden);
  embedding = take((v + 1) * d);
  w_embed = take(h * d);
  w_context = take(h * static_cast<std::size_t>(s.context));
  w_cue = take(h * static_cast<std::size_t>(s.cues));
  w_recur = take(h * h);
  b_hidden = take(h);
  w_out = take(v * h);
  b_out = take(v);
  copy_kernel = take(2 * static_cast<std::size_t>(s.copy_radius) + 1);
  echo_gain = take(s.echo ? 1 : 0);
  total = at;
}

double Rollout::logp() const { return std::accumulate(logps.begin(), logps.end(), 0.0); }

struct PolicyNet::Trace {
  std::vector<int> inputs;  // previous token per step; vocab denotes the start symbol
  std::vector<StepGuide> steps;
  Eigen::MatrixXd hidden;  // hidden x (n + 1); column 0 is the initial state
  Eigen::MatrixXd probs;   // vocab x n
  std::vector<double> logps;
};

PolicyNet::PolicyNet(PolicyShape shape, std::shared_ptr<const Guide> guide)
    : shape_(shape), layout_(shape), guide_(std::move(guide)) {
  if (shape_.vocab < 1 || shape_.embed < 1 || shape_.hidden < 1 || shape_.context < 0 ||
      shape_.cues < 0 || shape_.copy_radius < 0 || shape_.max_len < 1) {
    throw Error("invalid policy shape");
  }
  if (shape_.eos >= shape_.vocab) throw Error("end-of-sequence id outside vocabulary");
  if (guide_ && guide_->cue_count() != shape_.cues) {
    throw Error("guide cue count does not match policy shape");
  }
}

std::vector<double> PolicyNet::init(std::uint64_t seed, double scale) const {
  auto rng = synth::seeded_rng(seed, 0x1417);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> p(layout_.total);
  for (double& v : p) v = u(rng);
  return p;
}

void PolicyNet::check(std::span<const double> params, const Context& ctx) const {
  if (params.size() != layout_.total) throw Error("parameter vector has the wrong length");
  if (static_cast<int>(ctx.features.size()) != shape_.context) {
    throw Error("context has " + std::to_string(ctx.features.size()) + " features, expected " +
                std::to_string(shape_.context));
  }
}

void PolicyNet::check_tokens(std::span<const int> tokens) const {
  for (int t : tokens) {
    if (t < 0 || t >= shape_.vocab) throw UnknownToken(t);
  }
}

namespace {

// One recurrence step: fills the hidden state, the tempered logits `z` and their softmax `p`;
// returns log-sum-exp of `z`.
struct Stepper {
  const PolicyShape& shape;
  const Weights& w;
  const Eigen::VectorXd& ctx_proj;
  std::pair<int, int> band;

  double operator()(int input, const StepGuide& g, const Eigen::VectorXd& h_prev,
                    std::span<const double> prior, double temperature, Eigen::VectorXd& h,
                    Eigen::VectorXd& z, Eigen::VectorXd& p) const {
    Eigen::VectorXd u = ctx_proj + w.w_recur * h_prev;
    u.noalias() += w.w_embed * w.embedding.row(input).transpose();
    for (int c : g.cues) {
      if (c >= 0) u += w.w_cue.col(c);
    }
    h = u.array().tanh();
    z = w.b_out;
    z.noalias() += w.w_out * h;
    for (int v = 0; v < shape.vocab; ++v) z[v] += prior[v];
    if (g.copy >= 0) {
      for (int d = -shape.copy_radius; d <= shape.copy_radius; ++d) {
        const int t = g.copy + d;
        if (t >= band.first && t <= band.second) z[t] += w.kernel[d + shape.copy_radius];
      }
    }
    if (shape.echo) {
      for (int t : g.echo) {
        if (t >= 0) z[t] += w.echo[0];
      }
    }
    z /= temperature;
    return softmax(z, p);
  }
};

}  // namespace

void PolicyNet::forward(std::span<const double> params, const Context& ctx,
                        std::span<const int> tokens, double temperature, Trace& trace) const {
  const Weights w(shape_, layout_, params.data());
  const VecMap features(ctx.features.data(), shape_.context);
  const Eigen::VectorXd ctx_proj = w.w_context * features + w.b_hidden;
  const auto band = guide_ ? guide_->copy_band() : std::pair<int, int>{0, -1};
  const Stepper step{shape_, w, ctx_proj, band};
  const auto n = static_cast<int>(tokens.size());

  trace.inputs.assign(n, shape_.vocab);
  trace.steps.assign(n, StepGuide{});
  trace.hidden = Eigen::MatrixXd::Zero(shape_.hidden, n + 1);
  trace.probs.resize(shape_.vocab, n);
  trace.logps.assign(n, 0.0);

  std::unique_ptr<Cursor> cursor = guide_ ? guide_->start(ctx) : nullptr;
  std::vector<double> prior(shape_.vocab, 0.0);
  Eigen::VectorXd h(shape_.hidden), z(shape_.vocab), p(shape_.vocab);
  for (int t = 0; t < n; ++t) {
    if (t > 0) trace.inputs[t] = tokens[t - 1];
    std::fill(prior.begin(), prior.end(), 0.0);
    if (cursor) cursor->next(trace.steps[t], prior);
    const double lse = step(trace.inputs[t], trace.steps[t], trace.hidden.col(t), prior,
                            temperature, h, z, p);
    trace.hidden.col(t + 1) = h;
    trace.probs.col(t) = p;
    trace.logps[t] = z[tokens[t]] - lse;
    if (cursor) cursor->advance(tokens[t]);
  }
}

Rollout PolicyNet::decode(std::span<const double> params, const Context& ctx,
                          double temperature, std::uint64_t seed, bool argmax) const {
  check(params, ctx);
  if (!argmax && !(temperature > 0.0)) throw Error("temperature must be positive");
  const Weights w(shape_, layout_, params.data());
  const VecMap features(ctx.features.data(), shape_.context);
  const Eigen::VectorXd ctx_proj = w.w_context * features + w.b_hidden;
  const auto band = guide_ ? guide_->copy_band() : std::pair<int, int>{0, -1};
  const Stepper step{shape_, w, ctx_proj, band};

  auto rng = synth::seeded_rng(seed, 0x5a3b1e);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::unique_ptr<Cursor> cursor = guide_ ? guide_->start(ctx) : nullptr;
  std::vector<double> prior(shape_.vocab, 0.0);
  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(shape_.hidden);
  Eigen::VectorXd h(shape_.hidden), z(shape_.vocab), p(shape_.vocab);
  Rollout r;
  int input = shape_.vocab;
  const double temp = argmax ? 1.0 : temperature;
  for (int t = 0; t < shape_.max_len; ++t) {
    StepGuide g;
    std::fill(prior.begin(), prior.end(), 0.0);
    if (cursor) cursor->next(g, prior);
    const double lse = step(input, g, h_prev, prior, temp, h, z, p);
    int token = 0;
    if (argmax) {
      z.maxCoeff(&token);
    } else {
      const double u = unit(rng);
      double acc = 0.0;
      token = shape_.vocab - 1;
      for (int v = 0; v < shape_.vocab; ++v) {
        acc += p[v];
        if (u < acc) {
          token = v;
          break;
        }
      }
    }
    r.tokens.push_back(token);
    r.logps.push_back(z[token] - lse);
    if (token == shape_.eos) break;
    if (cursor) cursor->advance(token);
    input = token;
    h_prev = h;
  }
  r.length = static_cast<int>(r.tokens.size());
  if (!r.tokens.empty() && r.tokens.back() == shape_.eos) --r.length;
  if (shape_.vocab <= Vocabulary::size()) r.text = Vocabulary::decode(r.tokens);
  return r;
}

Rollout PolicyNet::sample(std::span<const double> params, const Context& ctx,
                          double temperature, std::uint64_t seed) const {
  return decode(params, ctx, temperature, seed, false);
}

Rollout PolicyNet::greedy(std::span<const double> params, const Context& ctx) const {
  return decode(params, ctx, 1.0, 0, true);
}

std::vector<double> PolicyNet::token_log_probs(std::span<const double> params,
                                               const Context& ctx, std::span<const int> tokens,
                                               double temperature) const {
  check(params, ctx);
  check_tokens(tokens);
  Trace trace;
  forward(params, ctx, tokens, temperature, trace);
  return trace.logps;
}

double PolicyNet::log_prob(std::span<const double> params, const Context& ctx,
                           std::span<const int> tokens, double temperature) const {
  const auto lp = token_log_probs(params, ctx, tokens, temperature);
  return std::accumulate(lp.begin(), lp.end(), 0.0);
}

std::vector<double> PolicyNet::accumulate_grad(std::span<const double> params,
                                               const Context& ctx, std::span<const int> tokens,
                                               std::span<const double> weights,
                                               std::span<double> grad,
                                               double temperature) const {
  if (weights.size() != tokens.size()) throw Error("one weight per token is required");
  return accumulate_grad(
      params, ctx, tokens,
      [weights](std::span<const double>, std::span<double> out) {
        std::copy(weights.begin(), weights.end(), out.begin());
      },
      grad, temperature);
}

std::vector<double> PolicyNet::accumulate_grad(std::span<const double> params,
                                               const Context& ctx, std::span<const int> tokens,
                                               const WeightFn& weight_fn,
                                               std::span<double> grad,
                                               double temperature) const {
  check(params, ctx);
  check_tokens(tokens);
  if (grad.size() != layout_.total) throw Error("gradient vector has the wrong length");
  Trace trace;
  forward(params, ctx, tokens, temperature, trace);
  std::vector<double> weights(tokens.size(), 0.0);
  weight_fn(trace.logps, weights);

  const Weights w(shape_, layout_, params.data());
  Grads g(shape_, layout_, grad.data());
  const auto band = guide_ ? guide_->copy_band() : std::pair<int, int>{0, -1};
  const int n = static_cast<int>(tokens.size());
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(shape_.hidden);
  Eigen::VectorXd dctx = Eigen::VectorXd::Zero(shape_.hidden);
  Eigen::VectorXd dz(shape_.vocab), dh(shape_.hidden), du(shape_.hidden);
  for (int t = n - 1; t >= 0; --t) {
    // d log softmax(z / T)[k] / dz = (onehot(k) - p) / T
    dz = -trace.probs.col(t);
    dz[tokens[t]] += 1.0;
    dz *= weights[t] / temperature;

    const auto h = trace.hidden.col(t + 1);
    const auto h_prev = trace.hidden.col(t);
    g.w_out.noalias() += dz * h.transpose();
    g.b_out += dz;
    const StepGuide& s = trace.steps[t];
    if (s.copy >= 0) {
      for (int d = -shape_.copy_radius; d <= shape_.copy_radius; ++d) {
        const int v = s.copy + d;
        if (v >= band.first && v <= band.second) g.kernel[d + shape_.copy_radius] += dz[v];
      }
    }
    if (shape_.echo) {
      for (int v : s.echo) {
        if (v >= 0) g.echo[0] += dz[v];
      }
    }
    dh = dh_next;
    dh.noalias() += w.w_out.transpose() * dz;
    du = dh.array() * (1.0 - h.array().square());
    g.w_recur.noalias() += du * h_prev.transpose();
    dh_next.noalias() = w.w_recur.transpose() * du;
    const int input = trace.inputs[t];
    g.w_embed.noalias() += du * w.embedding.row(input);
    g.embedding.row(input).noalias() += (w.w_embed.transpose() * du).transpose();
    for (int c : s.cues) {
      if (c >= 0) g.w_cue.col(c) += du;
    }
    dctx += du;
  }
  if (n > 0) {
    g.b_hidden += dctx;
    const VecMap features(ctx.features.data(), shape_.context);
    g.w_context.noalias() += dctx * features.transpose();
  }
  return trace.logps;
}

std::vector<double> PolicyNet::grad_log_prob(std::span<const double> params,
                                             const Context& ctx, std::span<const int> tokens,
                                             double temperature) const {
  std::vector<double> grad(layout_.total, 0.0);
  const std::vector<double> ones(tokens.size(), 1.0);
  accumulate_grad(params, ctx, tokens, ones, grad, temperature);
  return grad;
}

std::vector<double> PolicyNet::next_token_probs(std::span<const double> params,
                                                const Context& ctx, std::span<const int> prefix,
                                                double temperature) const {
  check(params, ctx);
  check_tokens(prefix);
  std::vector<int> tokens(prefix.begin(), prefix.end());
  tokens.push_back(0);
  Trace trace;
  forward(params, ctx, tokens, temperature, trace);
  const auto col = trace.probs.col(static_cast<Eigen::Index>(prefix.size()));
  return {col.data(), col.data() + col.size()};
}

namespace {

using nlohmann::json;

constexpr const char* kCheckpointFormat = "segzero-policy";
constexpr int kCheckpointVersion = 1;

json shape_json(const PolicyShape& s) {
  return {{"vocab", s.vocab},     {"embed", s.embed},
          {"context", s.context}, {"hidden", s.hidden},
          {"cues", s.cues},       {"copy_radius", s.copy_radius},
          {"echo", s.echo},
          {"max_len", s.max_len}, {"eos", s.eos}};
}

PolicyShape shape_from_json(const json& j) {
  PolicyShape s;
  s.vocab = j.at("vocab").get<int>();
  s.embed = j.at("embed").get<int>();
  s.context = j.at("context").get<int>();
  s.hidden = j.at("hidden").get<int>();
  s.cues = j.at("cues").get<int>();
  s.copy_radius = j.at("copy_radius").get<int>();
  s.echo = j.at("echo").get<bool>();
  s.max_len = j.at("max_len").get<int>();
  s.eos = j.at("eos").get<int>();
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const json j = {{"format", kCheckpointFormat},
                  {"version", kCheckpointVersion},
                  {"shape", shape_json(ckpt.shape)},
                  {"init_seed", ckpt.init_seed},
                  {"train_seed", ckpt.train_seed},
                  {"step", ckpt.step},
                  {"params", ckpt.params}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump() << '\n';
  if (!out) throw CheckpointError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw CheckpointError("not a policy checkpoint: " + path.string());
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version in " + path.string());
    }
    Checkpoint c;
    c.shape = shape_from_json(j.at("shape"));
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    c.train_seed = j.at("train_seed").get<std::uint64_t>();
    c.step = j.at("step").get<long>();
    c.params = j.at("params").get<std::vector<double>>();
    if (c.params.size() != Layout(c.shape).total) {
      throw CheckpointError("parameter count does not match shape in " + path.string());
    }
    return c;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace segzero::policy
