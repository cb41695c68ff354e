#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segzero/synth.hpp"

namespace segzero::policy {

/// Dense, stable token ids of the structured-output vocabulary.
namespace tok {
inline constexpr int kEos = 0;
inline constexpr int kThinkOpen = 1;
inline constexpr int kThinkClose = 2;
inline constexpr int kAnswerOpen = 3;
inline constexpr int kAnswerClose = 4;
inline constexpr int kBraceOpen = 5;
inline constexpr int kBraceClose = 6;
inline constexpr int kBracketOpen = 7;
inline constexpr int kBracketClose = 8;
inline constexpr int kComma = 9;
inline constexpr int kKeyBbox = 10;
inline constexpr int kKeyPoints1 = 11;
inline constexpr int kKeyPoints2 = 12;
inline constexpr int kWordBbox = 13;
inline constexpr int kWordPoints = 14;
inline constexpr int kFirstWord = 15;
inline constexpr int kWordCount = 23;
inline constexpr int kFirstBin = kFirstWord + kWordCount;
inline constexpr int kBinCount = 84;
inline constexpr int kBinWidth = 10;
inline constexpr int kVocabSize = kFirstBin + kBinCount;

// Reasoning words: 6 colors, 3 shapes, 2 size ranks, 4 relations, then generic filler.
inline constexpr int kFirstShapeWord = kFirstWord + synth::kColorCount;
inline constexpr int kFirstSizeWord = kFirstShapeWord + synth::kShapeCount;
inline constexpr int kFirstRelationWord = kFirstSizeWord + 2;
inline constexpr int kFirstFillerWord = kFirstRelationWord + 4;
inline constexpr int kWordThe = kFirstFillerWord;
}  // namespace tok

class Vocabulary {
 public:
  static constexpr int size() { return tok::kVocabSize; }
  static bool valid(int id) { return id >= 0 && id < tok::kVocabSize; }

  static std::string_view text(int id);
  static bool is_word(int id) { return id >= tok::kFirstWord && id < tok::kFirstBin; }
  static bool is_bin(int id) { return id >= tok::kFirstBin && id < tok::kVocabSize; }
  /// Words, keywords and numbers are separated by one space when adjacent.
  static bool spaced(int id);

  static int bin_token(int bin) { return tok::kFirstBin + bin; }
  static int bin_of(int id) { return id - tok::kFirstBin; }
  static int bin_for_value(double v);
  static int bin_center(int bin) { return bin * tok::kBinWidth + tok::kBinWidth / 2; }

  static int color_word(synth::Color c) { return tok::kFirstWord + static_cast<int>(c); }
  static int shape_word(synth::Shape s) { return tok::kFirstShapeWord + static_cast<int>(s); }
  static int size_word(synth::SizeRank r) { return tok::kFirstSizeWord + static_cast<int>(r); }
  static int relation_word(synth::Relation r) {
    return tok::kFirstRelationWord + static_cast<int>(r);
  }

  /// Concatenates token texts; EOS contributes nothing and ends decoding.
  static std::string decode(std::span<const int> tokens);
  /// Greedy longest-match tokenization; nullopt when the text is not representable.
  static std::optional<std::vector<int>> encode(std::string_view text);
};

}  // namespace segzero::policy
