#include "segzero/parser.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <vector>

#include "json.hpp"

namespace segzero::parser {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::size_t skip_space(std::string_view s, std::size_t pos) {
  while (pos < s.size() && is_space(s[pos])) ++pos;
  return pos;
}

bool contains_tag(std::string_view s) {
  for (auto tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose}) {
    if (s.find(tag) != std::string_view::npos) return true;
  }
  return false;
}

// Content between the first `open` at or after `from` and the next `close`.
std::optional<std::pair<std::size_t, std::size_t>> block(std::string_view s, std::string_view open,
                                                         std::string_view close,
                                                         std::size_t from = 0) {
  const auto begin = s.find(open, from);
  if (begin == std::string_view::npos) return std::nullopt;
  const auto content = begin + open.size();
  const auto end = s.find(close, content);
  if (end == std::string_view::npos) return std::nullopt;
  return std::make_pair(content, end);
}

}  // namespace

std::string_view to_string(FormatMode m) { return m == FormatMode::Soft ? "soft" : "strict"; }

std::optional<FormatMode> parse_format_mode(std::string_view s) {
  if (s == "soft") return FormatMode::Soft;
  if (s == "strict") return FormatMode::Strict;
  return std::nullopt;
}

std::string_view to_string(Violation v) {
  switch (v) {
    case Violation::None: return "none";
    case Violation::NotJson: return "not_json";
    case Violation::MissingKey: return "missing_key";
    case Violation::ExtraKey: return "extra_key";
    case Violation::ArityError: return "arity_error";
    case Violation::NonNumeric: return "non_numeric";
    case Violation::CountMismatch: return "count_mismatch";
    case Violation::NoKeywords: return "no_keywords";
    case Violation::NoAnswer: return "no_answer";
  }
  return "unknown";
}

ParsedResponse parse_response(std::string_view text) {
  ParsedResponse r;
  const auto think = block(text, kThinkOpen, kThinkClose);
  if (think) r.think = std::string(text.substr(think->first, think->second - think->first));
  const std::size_t answer_from = think ? think->second + kThinkClose.size() : 0;
  const auto answer = block(text, kAnswerOpen, kAnswerClose, answer_from);
  if (answer) r.answer = std::string(text.substr(answer->first, answer->second - answer->first));
  if (!think || !answer) return r;

  const std::size_t lead = skip_space(text, 0);
  const std::size_t think_open = think->first - kThinkOpen.size();
  const std::size_t answer_open = answer->first - kAnswerOpen.size();
  const std::size_t gap = skip_space(text, think->second + kThinkClose.size());
  const std::size_t tail = skip_space(text, answer->second + kAnswerClose.size());
  r.structure_valid = lead == think_open && gap == answer_open && tail == text.size() &&
                      !contains_tag(*r.think) && !contains_tag(*r.answer);
  return r;
}

namespace {

SegPrompt from_numbers(const std::vector<double>& bbox, const std::vector<double>& p1,
                       const std::vector<double>& p2) {
  SegPrompt p;
  p.bbox = {bbox[0], bbox[1], bbox[2], bbox[3]};
  p.p1 = {p1[0], p1[1]};
  p.p2 = {p2[0], p2[1]};
  return normalize(p);
}

AnswerParse violation(Violation v) { return AnswerParse{std::nullopt, v}; }

// True when a numeric literal outside string literals uses an exponent.
bool has_exponent(std::string_view s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
    } else if ((c == 'e' || c == 'E') && i > 0 &&
               (std::isdigit(static_cast<unsigned char>(s[i - 1])) || s[i - 1] == '.')) {
      return true;
    }
  }
  return false;
}

}  // namespace

AnswerParse parse_answer_strict(std::string_view answer) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(answer.begin(), answer.end());
  } catch (const nlohmann::json::parse_error&) {
    return violation(Violation::NotJson);
  }
  if (!j.is_object()) return violation(Violation::NotJson);
  static constexpr std::array<std::pair<const char*, std::size_t>, 3> kKeys = {
      {{"bbox", 4}, {"points_1", 2}, {"points_2", 2}}};
  for (const auto& [key, arity] : kKeys) {
    if (!j.contains(key)) return violation(Violation::MissingKey);
  }
  if (j.size() != kKeys.size()) return violation(Violation::ExtraKey);
  std::array<std::vector<double>, 3> values;
  for (std::size_t k = 0; k < kKeys.size(); ++k) {
    const auto& v = j.at(kKeys[k].first);
    if (!v.is_array() || v.size() != kKeys[k].second) return violation(Violation::ArityError);
    for (const auto& e : v) {
      if (!e.is_number()) return violation(Violation::NonNumeric);
      values[k].push_back(e.get<double>());
    }
  }
  if (has_exponent(answer)) return violation(Violation::NonNumeric);
  return AnswerParse{from_numbers(values[0], values[1], values[2]), Violation::None};
}

namespace {

struct Group {
  std::string key;
  std::vector<double> numbers;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

AnswerParse parse_answer_soft(std::string_view answer) {
  std::vector<Group> bbox_groups;
  std::vector<Group> point_groups;
  Group* current = nullptr;
  std::size_t i = 0;
  while (i < answer.size()) {
    const char c = answer[i];
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < answer.size() && ident_char(answer[j])) ++j;
      const std::string ident(answer.substr(i, j - i));
      if (ident.find("bbox") != std::string::npos) {
        bbox_groups.push_back({ident, {}});
        current = &bbox_groups.back();
      } else if (ident.find("points") != std::string::npos) {
        point_groups.push_back({ident, {}});
        current = &point_groups.back();
      }
      i = j;
    } else if (digit(c) || (c == '-' && i + 1 < answer.size() && digit(answer[i + 1]))) {
      std::size_t j = i + 1;
      while (j < answer.size() && digit(answer[j])) ++j;
      if (j + 1 < answer.size() && answer[j] == '.' && digit(answer[j + 1])) {
        ++j;
        while (j < answer.size() && digit(answer[j])) ++j;
      }
      double v = 0.0;
      std::from_chars(answer.data() + i, answer.data() + j, v);
      if (current) current->numbers.push_back(v);
      i = j;
    } else {
      ++i;
    }
  }
  if (bbox_groups.empty() && point_groups.empty()) return violation(Violation::NoKeywords);
  if (bbox_groups.empty() || point_groups.empty()) return violation(Violation::CountMismatch);
  const auto& box = bbox_groups.front().numbers;
  if (box.size() != 4) return violation(Violation::CountMismatch);

  std::stable_sort(point_groups.begin(), point_groups.end(),
                   [](const Group& a, const Group& b) { return a.key < b.key; });
  std::vector<double> p1, p2;
  if (point_groups.size() == 1) {
    const auto& n = point_groups[0].numbers;
    if (n.size() != 4) return violation(Violation::CountMismatch);
    p1 = {n[0], n[1]};
    p2 = {n[2], n[3]};
  } else if (point_groups.size() == 2) {
    p1 = point_groups[0].numbers;
    p2 = point_groups[1].numbers;
    if (p1.size() != 2 || p2.size() != 2) return violation(Violation::CountMismatch);
  } else {
    return violation(Violation::CountMismatch);
  }
  return AnswerParse{from_numbers(box, p1, p2), Violation::None};
}

AnswerParse parse_answer(std::string_view answer, FormatMode mode) {
  return mode == FormatMode::Strict ? parse_answer_strict(answer) : parse_answer_soft(answer);
}

Extraction extract_prompt(std::string_view text, FormatMode mode) {
  Extraction e;
  e.response = parse_response(text);
  if (!e.response.answer) {
    e.violation = Violation::NoAnswer;
    return e;
  }
  AnswerParse a = parse_answer(*e.response.answer, mode);
  e.violation = a.violation;
  if (e.response.structure_valid) e.prompt = a.prompt;
  return e;
}

SegPrompt normalize(SegPrompt p) {
  auto c = [](double v) { return std::clamp(v, 0.0, static_cast<double>(kFrameSize)); };
  const double x1 = c(p.bbox.x1), x2 = c(p.bbox.x2), y1 = c(p.bbox.y1), y2 = c(p.bbox.y2);
  p.bbox = {std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2)};
  p.p1 = {c(p.p1.x), c(p.p1.y)};
  p.p2 = {c(p.p2.x), c(p.p2.y)};
  return p;
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  if (ec != std::errc{}) return std::to_string(v);
  return std::string(buf, end);
}

std::string serialize(const SegPrompt& p) {
  auto n = format_number;
  return "{\"bbox\":[" + n(p.bbox.x1) + "," + n(p.bbox.y1) + "," + n(p.bbox.x2) + "," +
         n(p.bbox.y2) + "],\"points_1\":[" + n(p.p1.x) + "," + n(p.p1.y) + "],\"points_2\":[" +
         n(p.p2.x) + "," + n(p.p2.y) + "]}";
}

std::string canonical_response(std::string_view think, const SegPrompt& p) {
  std::string out;
  out += kThinkOpen;
  out += think;
  out += kThinkClose;
  out += kAnswerOpen;
  out += serialize(p);
  out += kAnswerClose;
  return out;
}

}  // namespace segzero::parser
