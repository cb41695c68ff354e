#include "segzero/vocabulary.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace segzero::policy {

namespace {

constexpr std::array<std::string_view, tok::kFirstWord> kStructural = {
    "",       "<think>", "</think>", "<answer>",     "</answer>",     "{",       "}",     "[",
    "]",      ",",       "\"bbox\":", "\"points_1\":", "\"points_2\":", "bbox",    "points",
};

constexpr std::array<std::string_view, tok::kWordCount> kWords = {
    "red",   "green",    "blue", "yellow", "purple", "orange", "circle", "square",
    "triangle", "largest", "smallest", "left", "right", "top",    "bottom", "the",
    "find",  "object",   "is",   "so",     "then",   "look",   "at",
};

const std::array<std::string, tok::kBinCount>& bin_texts() {
  static const auto table = [] {
    std::array<std::string, tok::kBinCount> t;
    for (int b = 0; b < tok::kBinCount; ++b) t[b] = std::to_string(Vocabulary::bin_center(b));
    return t;
  }();
  return table;
}

}  // namespace

std::string_view Vocabulary::text(int id) {
  if (id < tok::kFirstWord) return kStructural[id];
  if (id < tok::kFirstBin) return kWords[id - tok::kFirstWord];
  return bin_texts()[id - tok::kFirstBin];
}

bool Vocabulary::spaced(int id) {
  return id == tok::kWordBbox || id == tok::kWordPoints || is_word(id) || is_bin(id);
}

int Vocabulary::bin_for_value(double v) {
  const int b = static_cast<int>(std::floor(v / tok::kBinWidth));
  return std::clamp(b, 0, tok::kBinCount - 1);
}

std::string Vocabulary::decode(std::span<const int> tokens) {
  std::string out;
  int prev = -1;
  for (int t : tokens) {
    if (t == tok::kEos) break;
    if (prev >= 0 && spaced(prev) && spaced(t)) out += ' ';
    out += text(t);
    prev = t;
  }
  return out;
}

std::optional<std::vector<int>> Vocabulary::encode(std::string_view s) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (s[pos] == ' ') {
      // Only the single separator that decode inserts is representable.
      if (out.empty() || pos + 1 >= s.size() || s[pos + 1] == ' ') return std::nullopt;
      ++pos;
      continue;
    }
    int best = -1;
    std::size_t best_len = 0;
    for (int id = 1; id < tok::kVocabSize; ++id) {
      const std::string_view t = text(id);
      if (t.size() > best_len && s.substr(pos, t.size()) == t) {
        best = id;
        best_len = t.size();
      }
    }
    if (best < 0) return std::nullopt;
    out.push_back(best);
    pos += best_len;
  }
  if (decode(out) != s) return std::nullopt;
  return out;
}

}  // namespace segzero::policy
