#pragma once

#include <optional>
#include <span>
#include <vector>

#include "segzero/policy.hpp"
#include "segzero/synth.hpp"

namespace segzero::policy {

/// Grammar positions of a response; the guide exposes them to the network as cues.
enum class Phase {
  Start,
  Think,
  AfterThink,
  AnswerStart,
  JsonKey,
  JsonAfterKey,
  JsonNumber,
  JsonAfterNumber,
  JsonAfterArray,
  JsonAfterObject,
  SoftBbox,
  SoftPoints,
  AfterAnswer,
  Junk,
  Done,
};

inline constexpr int kPhaseCount = 14;        // Done is never observed as a step input
inline constexpr int kSlotCueCount = 9;       // coordinate slots 0..7 plus "no slot left"
inline constexpr int kOverflowSlot = 8;

/// Attribute words mentioned in a reasoning block; later mentions override earlier ones.
struct Mentions {
  std::optional<synth::Shape> shape;
  std::optional<synth::Color> color;
  std::optional<synth::SizeRank> size;
  std::optional<synth::Relation> relation;

  void observe(int token);
  /// First object satisfying every mentioned attribute; nullopt when nothing was mentioned
  /// or no object qualifies.
  std::optional<int> resolve(const std::vector<synth::ObjectView>& objects) const;
};

/// Frozen base distribution over continuations at each grammar position. Probabilities are
/// mixed with a uniform floor and turned into additive logits.
struct PriorTable {
  double floor = 0.001;

  double start_think = 0.80, start_word = 0.10, start_answer = 0.06;  // rest: EOS
  // Inside the reasoning block: "the", unnamed query words, any word, and </think>, whose
  // share grows linearly from close_first to close_last with the fraction of query words
  // named so far. The word shares are rescaled to fill the remainder.
  double think_the = 0.30, think_query = 0.015, think_word = 0.30;
  double close_first = 0.10, close_last = 0.70;
  double after_think_answer = 0.92, after_think_word = 0.05;          // rest: EOS
  double answer_json = 0.50, answer_soft = 0.42, answer_points = 0.04;  // rest: </answer>
  double expected = 0.997;  // structural continuation the grammar expects next
  double number = 0.998;  // coordinate where a number is expected
  double soft_number = 0.998;
  double copy_mass = 0.5;  // share of coordinate mass near the focus object's value
  double copy_sigma = 1.0; // in bins
  double stop_after_answer = 0.20;  // rest: filler words
  double stop_in_junk = 0.04;
};

/// Guide for the segmentation response grammar. Cues: one phase one-hot and one
/// coordinate-slot one-hot. The copy target is the quantized coordinate of the object the
/// reasoning block singles out. Inside the reasoning block the prior favours words naming
/// the query's attributes (decoded from the first query-feature entries of the context)
/// that have not been said yet; the same words are marked for the policy's echo gain.
class SegGuide : public Guide {
 public:
  explicit SegGuide(PriorTable prior = {});

  int cue_count() const override { return kPhaseCount + kSlotCueCount; }
  std::pair<int, int> copy_band() const override;
  std::unique_ptr<Cursor> start(const Context& ctx) const override;

  const PriorTable& prior() const { return prior_; }

 private:
  PriorTable prior_;
};

/// Attribute words of the query encoded in the leading context features; empty when the
/// features do not decode.
std::vector<int> query_words(std::span<const double> features);

/// Grammar state after consuming `tokens`; exposed for tests and diagnostics.
Phase phase_after(std::span<const int> tokens);

}  // namespace segzero::policy
