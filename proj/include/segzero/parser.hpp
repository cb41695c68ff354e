#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "segzero/geometry.hpp"

namespace segzero::parser {

enum class FormatMode { Soft, Strict };

std::string_view to_string(FormatMode m);
std::optional<FormatMode> parse_format_mode(std::string_view s);

struct ParsedResponse {
  std::optional<std::string> think;
  std::optional<std::string> answer;
  bool structure_valid = false;
};

/// Bounding box plus two interior points, in frame coordinates.
struct SegPrompt {
  geometry::BBox bbox;
  geometry::Point p1;
  geometry::Point p2;

  friend bool operator==(const SegPrompt&, const SegPrompt&) = default;
};

enum class Violation {
  None,
  NotJson,
  MissingKey,
  ExtraKey,
  ArityError,
  NonNumeric,
  CountMismatch,
  NoKeywords,
  NoAnswer,
};

std::string_view to_string(Violation v);

struct AnswerParse {
  std::optional<SegPrompt> prompt;
  Violation violation = Violation::None;

  bool ok() const { return prompt.has_value(); }
};

/// Total, linear-time scan for `<think>...</think><answer>...</answer>`. Only whitespace may
/// surround or separate the two blocks; tags are case-sensitive.
ParsedResponse parse_response(std::string_view text);

/// Accepts exactly one JSON object with keys "bbox" (4 numbers), "points_1" and "points_2"
/// (2 numbers each). Scientific notation is rejected.
AnswerParse parse_answer_strict(std::string_view answer);

/// Tolerant extraction: numbers following a key that contains "bbox" (4 expected) and
/// following keys that contain "points" (two groups of 2, or one group of 4).
AnswerParse parse_answer_soft(std::string_view answer);

AnswerParse parse_answer(std::string_view answer, FormatMode mode);

struct Extraction {
  ParsedResponse response;
  std::optional<SegPrompt> prompt;
  Violation violation = Violation::None;
};

/// Full post-processing: the prompt is present iff the structure is valid and the answer parses.
Extraction extract_prompt(std::string_view text, FormatMode mode);

/// Clamps every coordinate to [0, kFrameSize] and orders the box corners.
SegPrompt normalize(SegPrompt p);

/// Canonical strict answer, e.g. {"bbox":[10,20,110,220],"points_1":[50,60],"points_2":[70,80]}
std::string serialize(const SegPrompt& p);
std::string canonical_response(std::string_view think, const SegPrompt& p);

std::string format_number(double v);

}  // namespace segzero::parser
