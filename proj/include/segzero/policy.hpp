#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "segzero/geometry.hpp"
#include "segzero/synth.hpp"

namespace segzero::policy {

struct UnknownToken : Error {
  explicit UnknownToken(int id) : Error("token id out of vocabulary: " + std::to_string(id)) {}
};

struct CheckpointError : Error {
  using Error::Error;
};

/// Conditioning input of one episode: a fixed-length feature vector for the network, plus
/// the scene objects a guide may consult.
struct Context {
  std::vector<double> features;
  std::vector<synth::ObjectView> objects;
};

/// Parameter-free inputs for the next step, derived from the prefix alone.
struct StepGuide {
  std::array<int, 2> cues{-1, -1};
  int copy = -1;  // token id the copy kernel is centred on, or -1
  std::array<int, 4> echo{-1, -1, -1, -1};  // tokens that receive the learned echo gain
};

/// Walks one sequence. next() describes the upcoming step and adds base logits into
/// `prior` (length = vocabulary size, zero-initialized by the caller).
class Cursor {
 public:
  virtual ~Cursor() = default;
  virtual void next(StepGuide& step, std::span<double> prior) = 0;
  virtual void advance(int token) = 0;
};

/// Supplies a frozen base distribution and step cues; never trained.
class Guide {
 public:
  virtual ~Guide() = default;
  virtual int cue_count() const = 0;
  /// Token ids [first, last] the copy kernel may touch.
  virtual std::pair<int, int> copy_band() const = 0;
  virtual std::unique_ptr<Cursor> start(const Context& ctx) const = 0;
};

struct PolicyShape {
  int vocab = 0;
  int embed = 16;
  int context = 0;
  int hidden = 64;
  int cues = 0;
  int copy_radius = 0;  // kernel spans 2 * radius + 1 offsets
  bool echo = false;    // one learned gain added to the tokens a guide marks for echoing
  int max_len = 96;
  int eos = 0;  // -1: sequences always run to max_len

  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

/// Offsets of every weight block inside the flat parameter vector.
struct Layout {
  explicit Layout(const PolicyShape& s);

  std::size_t embedding;   // (vocab + 1) x embed, last row is the start symbol
  std::size_t w_embed;     // hidden x embed
  std::size_t w_context;   // hidden x context
  std::size_t w_cue;       // hidden x cues
  std::size_t w_recur;     // hidden x hidden
  std::size_t b_hidden;    // hidden
  std::size_t w_out;       // vocab x hidden
  std::size_t b_out;       // vocab
  std::size_t copy_kernel; // 2 * copy_radius + 1
  std::size_t echo_gain;   // 1 when echo is enabled, else 0 entries
  std::size_t total;
};

struct Rollout {
  std::vector<int> tokens;
  std::vector<double> logps;  // per token, under the sampling temperature
  std::string text;
  int length = 0;  // tokens excluding a terminating end-of-sequence

  double logp() const;
};

class PolicyNet {
 public:
  explicit PolicyNet(PolicyShape shape, std::shared_ptr<const Guide> guide = nullptr);

  const PolicyShape& shape() const { return shape_; }
  const Layout& layout() const { return layout_; }
  std::size_t param_count() const { return layout_.total; }
  const Guide* guide() const { return guide_.get(); }

  /// Uniform in [-scale, scale], deterministic in seed.
  std::vector<double> init(std::uint64_t seed, double scale = 0.08) const;

  /// Ancestral sampling; temperature must be positive.
  Rollout sample(std::span<const double> params, const Context& ctx, double temperature,
                 std::uint64_t seed) const;
  /// Argmax decoding, ties to the lowest token id.
  Rollout greedy(std::span<const double> params, const Context& ctx) const;

  std::vector<double> token_log_probs(std::span<const double> params, const Context& ctx,
                                      std::span<const int> tokens,
                                      double temperature = 1.0) const;
  double log_prob(std::span<const double> params, const Context& ctx,
                  std::span<const int> tokens, double temperature = 1.0) const;

  /// Adds sum_t weights[t] * d log p(token_t | prefix) / d params into grad and returns the
  /// per-token log-probs. weights.size() must equal tokens.size().
  std::vector<double> accumulate_grad(std::span<const double> params, const Context& ctx,
                                      std::span<const int> tokens,
                                      std::span<const double> weights, std::span<double> grad,
                                      double temperature = 1.0) const;
  /// As above, with weights chosen from the token log-probs before backpropagation.
  using WeightFn = std::function<void(std::span<const double> logps, std::span<double> weights)>;
  std::vector<double> accumulate_grad(std::span<const double> params, const Context& ctx,
                                      std::span<const int> tokens, const WeightFn& weights,
                                      std::span<double> grad, double temperature = 1.0) const;
  std::vector<double> grad_log_prob(std::span<const double> params, const Context& ctx,
                                    std::span<const int> tokens,
                                    double temperature = 1.0) const;

  /// Next-token distribution after `prefix`.
  std::vector<double> next_token_probs(std::span<const double> params, const Context& ctx,
                                       std::span<const int> prefix,
                                       double temperature = 1.0) const;

 private:
  struct Trace;
  void check(std::span<const double> params, const Context& ctx) const;
  void check_tokens(std::span<const int> tokens) const;
  Rollout decode(std::span<const double> params, const Context& ctx, double temperature,
                 std::uint64_t seed, bool argmax) const;
  void forward(std::span<const double> params, const Context& ctx, std::span<const int> tokens,
               double temperature, Trace& trace) const;

  PolicyShape shape_;
  Layout layout_;
  std::shared_ptr<const Guide> guide_;
};

struct Checkpoint {
  PolicyShape shape;
  std::vector<double> params;
  std::uint64_t init_seed = 0;
  std::uint64_t train_seed = 0;
  long step = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace segzero::policy
