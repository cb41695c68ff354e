#include <random>
#include <string>

#include "doctest.h"
#include "segzero/parser.hpp"

using namespace segzero;
using namespace segzero::parser;

namespace {

const char* kCanonical = R"({"bbox":[10,20,110,220],"points_1":[50,60],"points_2":[70,80]})";
const SegPrompt kCanonicalPrompt{{10, 20, 110, 220}, {50, 60}, {70, 80}};

std::string wrap(const std::string& think, const std::string& answer) {
  return "<think>" + think + "</think><answer>" + answer + "</answer>";
}

}  // namespace

TEST_CASE("parse_response structure") {
  const auto ok = parse_response("<think>a</think><answer>b</answer>");
  CHECK(ok.structure_valid);
  CHECK(ok.think == "a");
  CHECK(ok.answer == "b");

  CHECK_FALSE(parse_response("<answer>b</answer>").structure_valid);
  CHECK_FALSE(parse_response("<think>a</think><answer>b</answer>junk").structure_valid);
  CHECK(parse_response("  <think>a</think>\n <answer>b</answer>\n").structure_valid);
  CHECK_FALSE(parse_response("<THINK>a</THINK><answer>b</answer>").structure_valid);
  CHECK_FALSE(parse_response("<answer>b</answer><think>a</think>").structure_valid);
  CHECK_FALSE(parse_response("x<think>a</think><answer>b</answer>").structure_valid);
  CHECK_FALSE(parse_response(wrap("a", "b") + "<answer>c</answer>").structure_valid);
  CHECK_FALSE(parse_response("").structure_valid);
}

TEST_CASE("strict answers") {
  const auto ok = parse_answer_strict(kCanonical);
  REQUIRE(ok.ok());
  CHECK(*ok.prompt == kCanonicalPrompt);

  const auto reordered =
      parse_answer_strict(R"({ "points_2":[70,80], "bbox":[10,20,110,220], "points_1":[50,60] })");
  REQUIRE(reordered.ok());
  CHECK(*reordered.prompt == kCanonicalPrompt);

  CHECK(parse_answer_strict(R"({"bbox":[10,20,110,220],"points":[50,60]})").violation ==
        Violation::MissingKey);
  CHECK(parse_answer_strict(R"({"bbox":[10,20,110],"points_1":[50,60],"points_2":[70,80]})")
            .violation == Violation::ArityError);
  CHECK(parse_answer_strict(
            R"({"bbox":[10,20,110,220],"points_1":[50,60],"points_2":[70,80],"x":1})")
            .violation == Violation::ExtraKey);
  CHECK(parse_answer_strict(R"({"bbox":[10,20,110,"a"],"points_1":[50,60],"points_2":[70,80]})")
            .violation == Violation::NonNumeric);
  CHECK(parse_answer_strict(R"({"bbox":[1e1,20,110,220],"points_1":[50,60],"points_2":[70,80]})")
            .violation != Violation::None);
  CHECK(parse_answer_strict("bbox 1 2 3 4").violation == Violation::NotJson);
  CHECK(parse_answer_strict(std::string(kCanonical) + "{}").violation == Violation::NotJson);
  const auto decimal =
      parse_answer_strict(R"({"bbox":[10.5,20,110,220],"points_1":[50,60],"points_2":[70,80]})");
  REQUIRE(decimal.ok());
  CHECK(decimal.prompt->bbox.x1 == 10.5);
}

TEST_CASE("soft answers") {
  const auto free_form = parse_answer_soft("bbox: (10, 20, 110, 220); points: (50,60) and (70,80)");
  REQUIRE(free_form.ok());
  CHECK(*free_form.prompt == kCanonicalPrompt);
  CHECK(parse_answer_soft("bbox: 10 20").violation == Violation::CountMismatch);
  CHECK(parse_answer_soft("the object is left").violation == Violation::NoKeywords);
  const auto flat = parse_answer_soft("bbox 10 20 110 220 points 50 60 70 80");
  REQUIRE(flat.ok());
  CHECK(*flat.prompt == kCanonicalPrompt);
}

TEST_CASE("extract_prompt composes structure and answer") {
  const auto both = extract_prompt(wrap("reason", kCanonical), FormatMode::Strict);
  CHECK(both.response.structure_valid);
  REQUIRE(both.prompt);
  CHECK(*both.prompt == kCanonicalPrompt);

  const auto malformed = extract_prompt(wrap("reason", "nothing here"), FormatMode::Strict);
  CHECK(malformed.response.structure_valid);
  CHECK_FALSE(malformed.prompt);

  const auto no_structure = extract_prompt(kCanonical, FormatMode::Soft);
  CHECK_FALSE(no_structure.prompt);

  const auto clamped = extract_prompt(
      wrap("r", R"({"bbox":[-5,20,900,220],"points_1":[50,900],"points_2":[70,80]})"),
      FormatMode::Strict);
  REQUIRE(clamped.prompt);
  CHECK(clamped.prompt->bbox == geometry::BBox{0, 20, 840, 220});
  CHECK(clamped.prompt->p1 == geometry::Point{50, 840});
}

TEST_CASE("normalize orders corners") {
  const auto p = normalize({{110, 220, 10, 20}, {1, 2}, {3, 4}});
  CHECK(p.bbox == geometry::BBox{10, 20, 110, 220});
}

TEST_CASE("strict acceptance implies soft acceptance with equal values") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> coord(0, 840);
  for (int i = 0; i < 500; ++i) {
    SegPrompt p{{double(coord(rng)), double(coord(rng)), double(coord(rng)), double(coord(rng))},
                {double(coord(rng)), double(coord(rng))},
                {double(coord(rng)), double(coord(rng))}};
    p = normalize(p);
    const auto text = serialize(p);
    const auto strict = parse_answer_strict(text);
    REQUIRE(strict.ok());
    CHECK(*strict.prompt == p);
    const auto soft = parse_answer_soft(text);
    REQUIRE(soft.ok());
    CHECK(*soft.prompt == *strict.prompt);
  }
}

TEST_CASE("serialize round-trips fractional coordinates") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> coord(0, 840);
  for (int i = 0; i < 500; ++i) {
    const auto p = normalize({{coord(rng), coord(rng), coord(rng), coord(rng)},
                              {coord(rng), coord(rng)},
                              {coord(rng), coord(rng)}});
    const auto back = parse_answer_strict(serialize(p));
    REQUIRE(back.ok());
    CHECK(*back.prompt == p);
  }
  CHECK(serialize(kCanonicalPrompt) == kCanonical);
}

TEST_CASE("parsing is total on random strings") {
  std::mt19937_64 rng(23);
  const std::string alphabet = "<>/thinkanswer{}[]\"bbox:points_12,.- 0123456789e\n";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(0, 200);
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) s.push_back(alphabet[pick(rng)]);
    if (i % 3 == 0) s = wrap(s.substr(0, s.size() / 2), s.substr(s.size() / 2));
    for (auto mode : {FormatMode::Strict, FormatMode::Soft}) {
      const auto e = extract_prompt(s, mode);
      CHECK(e.prompt.has_value() == (e.response.structure_valid && e.violation == Violation::None));
      if (e.prompt) {
        CHECK(e.prompt->bbox.x1 >= 0);
        CHECK(e.prompt->bbox.x2 <= 840);
      }
    }
  }
}

TEST_CASE("mode names") {
  CHECK(parse_format_mode("soft") == FormatMode::Soft);
  CHECK(parse_format_mode(to_string(FormatMode::Strict)) == FormatMode::Strict);
  CHECK_FALSE(parse_format_mode("loose"));
}
