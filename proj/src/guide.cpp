#include "segzero/guide.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "segzero/vocabulary.hpp"

namespace segzero::policy {

void Mentions::observe(int token) {
  if (!Vocabulary::is_word(token)) return;
  if (token < tok::kFirstShapeWord) {
    color = static_cast<synth::Color>(token - tok::kFirstWord);
  } else if (token < tok::kFirstSizeWord) {
    shape = static_cast<synth::Shape>(token - tok::kFirstShapeWord);
  } else if (token < tok::kFirstRelationWord) {
    size = static_cast<synth::SizeRank>(token - tok::kFirstSizeWord);
  } else if (token < tok::kFirstFillerWord) {
    relation = static_cast<synth::Relation>(token - tok::kFirstRelationWord);
  }
}

std::optional<int> Mentions::resolve(const std::vector<synth::ObjectView>& objects) const {
  if (!shape && !color && !size && !relation) return std::nullopt;
  synth::Constraints c;
  c.color = color;
  c.size = size;
  c.relation = relation;
  std::vector<int> hits;
  if (shape) {
    c.shape = *shape;
    hits = synth::evaluate(objects, c);
  } else {
    // No shape mentioned: every object qualifies on shape.
    std::vector<synth::ObjectView> any = objects;
    for (auto& o : any) o.shape = synth::Shape::Circle;
    c.shape = synth::Shape::Circle;
    hits = synth::evaluate(any, c);
  }
  if (hits.empty()) return std::nullopt;
  return *std::min_element(hits.begin(), hits.end());
}

namespace {

constexpr std::array<int, 3> kKeyTokens = {tok::kKeyBbox, tok::kKeyPoints1, tok::kKeyPoints2};
constexpr std::array<int, 3> kKeyBase = {0, 4, 6};
constexpr std::array<int, 3> kKeyArity = {4, 2, 2};

int key_index(int token) {
  for (int k = 0; k < 3; ++k) {
    if (kKeyTokens[k] == token) return k;
  }
  return -1;
}

// Accumulates a next-token distribution, then converts it to floored log-probabilities.
class Dist {
 public:
  Dist() { p_.fill(0.0); }

  void add(int token, double mass) { p_[token] += mass; }
  void add_words(double mass) {
    for (int t = tok::kFirstWord; t < tok::kFirstBin; ++t) p_[t] += mass / tok::kWordCount;
  }
  void add_bins(double mass, int target_bin, double copy_mass, double sigma) {
    const double flat = target_bin >= 0 ? (1.0 - copy_mass) : 1.0;
    for (int b = 0; b < tok::kBinCount; ++b) {
      p_[tok::kFirstBin + b] += mass * flat / tok::kBinCount;
    }
    if (target_bin < 0) return;
    std::array<double, tok::kBinCount> k{};
    double sum = 0.0;
    for (int b = 0; b < tok::kBinCount; ++b) {
      const double d = (b - target_bin) / sigma;
      k[b] = std::exp(-0.5 * d * d);
      sum += k[b];
    }
    for (int b = 0; b < tok::kBinCount; ++b) {
      p_[tok::kFirstBin + b] += mass * copy_mass * k[b] / sum;
    }
  }
  // Splits `mass` evenly over `tokens`.
  void spread(double mass, std::initializer_list<int> tokens) {
    for (int t : tokens) p_[t] += mass / static_cast<double>(tokens.size());
  }

  void write_logits(std::span<double> out, double floor) const {
    double total = 0.0;
    for (double v : p_) total += v;
    for (int t = 0; t < tok::kVocabSize; ++t) {
      out[t] += std::log((1.0 - floor) * p_[t] / total + floor / tok::kVocabSize);
    }
  }

 private:
  std::array<double, tok::kVocabSize> p_;
};

struct Tracker {
  Phase phase = Phase::Start;
  int key = -1;
  int count = 0;
  std::array<bool, 3> used{};
  Mentions mentions;

  int next_key() const {
    for (int k = 0; k < 3; ++k) {
      if (!used[k]) return k;
    }
    return -1;
  }

  // Next coordinate slot at the current position, kOverflowSlot when the group is full, or
  // -1 outside coordinate groups.
  int slot() const {
    switch (phase) {
      case Phase::JsonNumber:
      case Phase::JsonAfterNumber:
        if (key < 0) return kOverflowSlot;
        return count < kKeyArity[key] ? kKeyBase[key] + count : kOverflowSlot;
      case Phase::SoftBbox:
        return count < 4 ? count : kOverflowSlot;
      case Phase::SoftPoints:
        return count < 4 ? 4 + count : kOverflowSlot;
      default:
        return -1;
    }
  }

  void advance(int t) {
    auto to = [this](Phase p) { phase = p; };
    if (t == tok::kEos) {
      to(Phase::Done);
      return;
    }
    switch (phase) {
      case Phase::Start:
        if (t == tok::kThinkOpen) {
          to(Phase::Think);
        } else if (t == tok::kAnswerOpen) {
          to(Phase::AnswerStart);
        } else {
          to(Phase::Junk);
        }
        break;
      case Phase::Think:
        if (Vocabulary::is_word(t)) {
          mentions.observe(t);
        } else if (t == tok::kThinkClose) {
          to(Phase::AfterThink);
        } else {
          to(Phase::Junk);
        }
        break;
      case Phase::AfterThink:
        to(t == tok::kAnswerOpen ? Phase::AnswerStart : Phase::Junk);
        break;
      case Phase::AnswerStart:
        count = 0;
        if (t == tok::kBraceOpen) {
          to(Phase::JsonKey);
        } else if (t == tok::kWordBbox) {
          to(Phase::SoftBbox);
        } else if (t == tok::kWordPoints) {
          to(Phase::SoftPoints);
        } else if (t == tok::kAnswerClose) {
          to(Phase::AfterAnswer);
        } else {
          to(Phase::Junk);
        }
        break;
      case Phase::JsonKey:
        if (const int k = key_index(t); k >= 0) {
          key = k;
          used[k] = true;
          to(Phase::JsonAfterKey);
        } else if (t == tok::kBraceClose) {
          to(Phase::JsonAfterObject);
        } else if (t == tok::kAnswerClose) {
          to(Phase::AfterAnswer);
        } else {
          to(Phase::Junk);
        }
        break;
      case Phase::JsonAfterKey:
        count = 0;
        to(t == tok::kBracketOpen ? Phase::JsonNumber : Phase::Junk);
        break;
      case Phase::JsonNumber:
        if (Vocabulary::is_bin(t)) {
          ++count;
          to(Phase::JsonAfterNumber);
        } else if (t == tok::kBracketClose) {
          to(Phase::JsonAfterArray);
        } else {
          to(Phase::Junk);
        }
        break;
      case Phase::JsonAfterNumber:
        if (t == tok::kComma) {
          to(Phase::JsonNumber);
        } else if (t == tok::kBracketClose) {
          to(Phase::JsonAfterArray);
        } else {
          to(Phase::Junk);
        }
        break;
      case Phase::JsonAfterArray:
        if (t == tok::kComma) {
          to(Phase::JsonKey);
        } else if (t == tok::kBraceClose) {
          to(Phase::JsonAfterObject);
        } else {
          to(Phase::Junk);
        }
        break;
      case Phase::JsonAfterObject:
        to(t == tok::kAnswerClose ? Phase::AfterAnswer : Phase::Junk);
        break;
      case Phase::SoftBbox:
        if (Vocabulary::is_bin(t)) {
          ++count;
        } else if (t == tok::kWordPoints) {
          count = 0;
          to(Phase::SoftPoints);
        } else if (t == tok::kAnswerClose) {
          to(Phase::AfterAnswer);
        } else {
          to(Phase::Junk);
        }
        break;
      case Phase::SoftPoints:
        if (Vocabulary::is_bin(t)) {
          ++count;
        } else if (t == tok::kAnswerClose) {
          to(Phase::AfterAnswer);
        } else {
          to(Phase::Junk);
        }
        break;
      case Phase::AfterAnswer:
      case Phase::Junk:
      case Phase::Done:
        to(Phase::Junk);
        break;
    }
  }
};

double slot_value(const synth::ObjectView& o, int slot) {
  switch (slot) {
    case 0: return o.box.x1;
    case 1: return o.box.y1;
    case 2: return o.box.x2;
    case 3: return o.box.y2;
    case 4:
    case 6: return o.center.x;
    default: return o.center.y;
  }
}

class SegCursor : public Cursor {
 public:
  SegCursor(const PriorTable& prior, const Context& ctx)
      : prior_(prior),
        ctx_(ctx),
        query_(query_words(ctx.features)),
        said_(query_.size(), false) {}

  void next(StepGuide& step, std::span<double> logits) override {
    const Phase phase = state_.phase == Phase::Done ? Phase::Junk : state_.phase;
    const int slot = state_.slot();
    step.cues = {static_cast<int>(phase), slot >= 0 ? kPhaseCount + slot : -1};
    step.copy = -1;
    step.echo.fill(-1);
    const bool wants_number = phase == Phase::JsonNumber || phase == Phase::SoftBbox ||
                              phase == Phase::SoftPoints;
    int target_bin = -1;
    if (wants_number && slot >= 0 && slot < kOverflowSlot) {
      if (const auto f = focus()) {
        target_bin = Vocabulary::bin_for_value(slot_value(ctx_.objects[*f], slot));
        step.copy = Vocabulary::bin_token(target_bin);
      }
    }
    if (phase == Phase::Think) {
      const auto pending = unsaid();
      for (std::size_t k = 0; k < pending.size() && k < step.echo.size(); ++k) {
        step.echo[k] = pending[k];
      }
    }
    build(phase, slot, target_bin).write_logits(logits, prior_.floor);
  }

  void advance(int token) override {
    if (state_.phase == Phase::Think) {
      for (std::size_t k = 0; k < query_.size(); ++k) {
        if (query_[k] == token) said_[k] = true;
      }
    }
    state_.advance(token);
  }

 private:
  std::vector<int> unsaid() const {
    std::vector<int> out;
    for (std::size_t k = 0; k < query_.size(); ++k) {
      if (!said_[k]) out.push_back(query_[k]);
    }
    return out;
  }

  std::optional<int> focus() {
    if (!focus_ready_) {
      focus_ = state_.mentions.resolve(ctx_.objects);
      focus_ready_ = true;
    }
    return focus_;
  }

  Dist build(Phase phase, int slot, int target_bin) const {
    const PriorTable& q = prior_;
    const double e = q.expected;
    Dist d;
    auto bins = [&](double mass) { d.add_bins(mass, target_bin, q.copy_mass, q.copy_sigma); };
    switch (phase) {
      case Phase::Start:
        d.add(tok::kThinkOpen, q.start_think);
        d.add_words(q.start_word);
        d.add(tok::kAnswerOpen, q.start_answer);
        d.add(tok::kEos, 1.0 - q.start_think - q.start_word - q.start_answer);
        break;
      case Phase::Think: {
        const auto pending = unsaid();
        const double named =
            query_.empty() ? 0.0
                           : 1.0 - static_cast<double>(pending.size()) / query_.size();
        const double close = q.close_first + (q.close_last - q.close_first) * named;
        const double query_mass = pending.empty() ? 0.0 : q.think_query;
        const double scale = (1.0 - close) / (q.think_the + q.think_word + query_mass);
        d.add(tok::kWordThe, scale * q.think_the);
        d.add_words(scale * q.think_word);
        for (int w : pending) d.add(w, scale * query_mass / static_cast<double>(pending.size()));
        d.add(tok::kThinkClose, close);
        break;
      }
      case Phase::AfterThink:
        d.add(tok::kAnswerOpen, q.after_think_answer);
        d.add_words(q.after_think_word);
        d.add(tok::kEos, 1.0 - q.after_think_answer - q.after_think_word);
        break;
      case Phase::AnswerStart:
        d.add(tok::kBraceOpen, q.answer_json);
        d.add(tok::kWordBbox, q.answer_soft);
        d.add(tok::kWordPoints, q.answer_points);
        d.add(tok::kAnswerClose, 1.0 - q.answer_json - q.answer_soft - q.answer_points);
        break;
      case Phase::JsonKey: {
        const int k = state_.next_key();
        if (k >= 0) {
          d.add(kKeyTokens[k], e);
          for (int o = 0; o < 3; ++o) {
            if (o != k) d.add(kKeyTokens[o], (1.0 - e) / 4.0);
          }
          d.spread((1.0 - e) / 2.0, {tok::kBraceClose, tok::kAnswerClose});
        } else {
          d.add(tok::kBraceClose, e);
          d.spread(1.0 - e, {tok::kKeyBbox, tok::kKeyPoints1, tok::kKeyPoints2,
                             tok::kAnswerClose});
        }
        break;
      }
      case Phase::JsonAfterKey:
        d.add(tok::kBracketOpen, e);
        bins((1.0 - e) / 2.0);
        d.add(tok::kBraceClose, (1.0 - e) / 2.0);
        break;
      case Phase::JsonNumber:
        bins(q.number);
        d.add(tok::kBracketClose, 1.0 - q.number);
        break;
      case Phase::JsonAfterNumber:
        d.add(slot == kOverflowSlot ? tok::kBracketClose : tok::kComma, e);
        d.add(slot == kOverflowSlot ? tok::kComma : tok::kBracketClose, 1.0 - e);
        break;
      case Phase::JsonAfterArray: {
        const bool more = state_.next_key() >= 0;
        d.add(more ? tok::kComma : tok::kBraceClose, e);
        d.add(more ? tok::kBraceClose : tok::kComma, 1.0 - e);
        break;
      }
      case Phase::JsonAfterObject:
        d.add(tok::kAnswerClose, e);
        d.add(tok::kComma, (1.0 - e) / 2.0);
        d.add_words((1.0 - e) / 2.0);
        break;
      case Phase::SoftBbox:
        if (slot != kOverflowSlot) {
          bins(q.soft_number);
          d.add(tok::kWordPoints, 1.0 - q.soft_number);
        } else {
          d.add(tok::kWordPoints, e);
          bins((1.0 - e) / 2.0);
          d.add(tok::kAnswerClose, (1.0 - e) / 2.0);
        }
        break;
      case Phase::SoftPoints:
        if (slot != kOverflowSlot) {
          bins(q.soft_number);
          d.add(tok::kAnswerClose, 1.0 - q.soft_number);
        } else {
          d.add(tok::kAnswerClose, e);
          bins(1.0 - e);
        }
        break;
      case Phase::AfterAnswer:
        d.add(tok::kEos, q.stop_after_answer);
        d.add_words(1.0 - q.stop_after_answer);
        break;
      case Phase::Junk:
      case Phase::Done:
        d.add(tok::kEos, q.stop_in_junk);
        d.add_words(1.0 - q.stop_in_junk);
        break;
    }
    return d;
  }

  const PriorTable& prior_;
  const Context& ctx_;
  std::vector<int> query_;
  std::vector<bool> said_;
  Tracker state_;
  std::optional<int> focus_;
  bool focus_ready_ = false;
};

}  // namespace

SegGuide::SegGuide(PriorTable prior) : prior_(prior) {}

std::pair<int, int> SegGuide::copy_band() const {
  return {tok::kFirstBin, tok::kVocabSize - 1};
}

std::unique_ptr<Cursor> SegGuide::start(const Context& ctx) const {
  return std::make_unique<SegCursor>(prior_, ctx);
}

std::vector<int> query_words(std::span<const double> features) {
  if (features.size() < synth::kQueryFeatureSize) return {};
  std::array<double, synth::kQueryFeatureSize> f{};
  std::copy_n(features.begin(), synth::kQueryFeatureSize, f.begin());
  const auto c = synth::decode_features(f);
  if (!c) return {};
  std::vector<int> words;
  if (c->color) words.push_back(Vocabulary::color_word(*c->color));
  words.push_back(Vocabulary::shape_word(c->shape));
  if (c->size) words.push_back(Vocabulary::size_word(*c->size));
  if (c->relation) words.push_back(Vocabulary::relation_word(*c->relation));
  return words;
}

Phase phase_after(std::span<const int> tokens) {
  Tracker t;
  for (int tok : tokens) t.advance(tok);
  return t.phase;
}

}  // namespace segzero::policy
