#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "segzero/dataprep.hpp"

using namespace segzero;
using namespace segzero::dataprep;
using geometry::BBox;
using geometry::BinaryMask;
using geometry::Point;

namespace {

// Tight box recomputed by scanning every pixel.
BBox scan_bbox(const BinaryMask& m) {
  double x0 = 1e9, y0 = 1e9, x1 = -1, y1 = -1;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      x0 = std::min<double>(x0, x);
      y0 = std::min<double>(y0, y);
      x1 = std::max<double>(x1, x);
      y1 = std::max<double>(y1, y);
    }
  }
  return {x0, y0, x1, y1};
}

void check_record_invariants(const GroundTruthRecord& r) {
  REQUIRE(r.gt_mask.width() == kFrameSize);
  REQUIRE(r.gt_mask.height() == kFrameSize);
  CHECK(r.gt_mask.count() >= 200);
  CHECK(r.gt_bbox == scan_bbox(r.gt_mask));
  CHECK(r.gt_mask.at(static_cast<int>(r.gt_p1.x), static_cast<int>(r.gt_p1.y)));
  CHECK(r.gt_mask.at(static_cast<int>(r.gt_p2.x), static_cast<int>(r.gt_p2.y)));
  CHECK(geometry::point_in_bbox(r.gt_p1, r.gt_bbox));
  CHECK(geometry::point_in_bbox(r.gt_p2, r.gt_bbox));
}

std::string write_string(const std::vector<GroundTruthRecord>& records) {
  std::ostringstream out;
  write_dataset(out, records);
  return out.str();
}

std::vector<GroundTruthRecord> read_string(const std::string& text) {
  std::istringstream in(text);
  return read_dataset(in);
}

}  // namespace

TEST_CASE("mask_to_bbox cases") {
  BinaryMask dot(10, 10);
  dot.set(3, 4);
  CHECK(mask_to_bbox(dot) == BBox{3, 4, 3, 4});
  CHECK(mask_to_bbox(~BinaryMask(10, 10)) == BBox{0, 0, 9, 9});
  CHECK_THROWS_AS(mask_to_bbox(BinaryMask(5, 5)), EmptyMask);
}

TEST_CASE("mask_to_bbox matches an exhaustive scan") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto m = oracle::random_mask(rng, 40);
    CHECK(mask_to_bbox(m) == scan_bbox(m));
  }
}

TEST_CASE("make_record at frame resolution is the identity rescale") {
  BinaryMask m(kFrameSize, kFrameSize);
  for (int y = 100; y < 180; ++y) {
    for (int x = 300; x < 420; ++x) m.set(x, y);
  }
  const std::array<double, synth::kQueryFeatureSize> f{};
  const auto r = make_record(m, "a", "the thing", f);
  CHECK(r.gt_mask == m);
  CHECK(r.gt_bbox == mask_to_bbox(m));
  const auto [p1, p2] = geometry::inscribed_circle_centers(m);
  CHECK(r.gt_p1 == p1);
  CHECK(r.gt_p2 == p2);
  CHECK(r.src_w == kFrameSize);
  CHECK(r.src_h == kFrameSize);
  check_record_invariants(r);
}

TEST_CASE("make_record stretches a 420x840 source horizontally") {
  CHECK(rescale_point({100, 300}, 420, 840) == Point{200, 300});
  CHECK(rescale_point({0, 0}, 420, 840) == Point{0, 0});
  CHECK(rescale_point({420, 840}, 420, 840) == Point{840, 840});
  CHECK(rescale_point({37, 91}, 333, 517) == Point{37.0 * 840 / 333, 91.0 * 840 / 517});

  BinaryMask dot(420, 840);
  dot.set(100, 300);
  const auto up = rescale_mask(dot);
  CHECK(up.count() == 2);
  CHECK(mask_to_bbox(up) == BBox{200, 300, 201, 300});

  BinaryMask blob(420, 840);
  for (int y = 200; y < 400; ++y) {
    for (int x = 50; x < 150; ++x) blob.set(x, y);
  }
  const std::array<double, synth::kQueryFeatureSize> f{};
  const auto r = make_record(blob, "b", "blob", f);
  CHECK(r.src_w == 420);
  CHECK(r.src_h == 840);
  CHECK(r.gt_bbox == BBox{100, 200, 299, 399});
  check_record_invariants(r);
}

TEST_CASE("synthetic records satisfy the record invariants") {
  const auto records = make_synth_dataset(100, 5);
  REQUIRE(records.size() == 100);
  for (const auto& r : records) {
    check_record_invariants(r);
    REQUIRE(r.scene);
    REQUIRE(r.target);
    const auto scene = render(*r.scene);
    CHECK(scene.masks[static_cast<std::size_t>(*r.target)] == r.gt_mask);
    CHECK(synth::decode_features(r.query_features).has_value());
  }
}

TEST_CASE("dataset round-trip is lossless and byte-stable") {
  const auto records = make_synth_dataset(10, 42);
  const auto first = write_string(records);
  const auto back = read_string(first);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) CHECK(back[i] == records[i]);
  const auto second = write_string(back);
  CHECK(first == second);
  CHECK(write_string(read_string(second)) == second);
  CHECK(std::count(first.begin(), first.end(), '\n') == 10);
}

TEST_CASE("dataset parse errors carry the line number") {
  const auto text = write_string(make_synth_dataset(3, 1));
  const auto second_end = text.find('\n', text.find('\n') + 1);
  const auto truncated = text.substr(0, second_end - 20);
  try {
    read_string(truncated);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
  CHECK(read_string("").empty());
  CHECK_THROWS_AS(read_string("{\"id\":\"x\"}\n"), ParseError);
}

TEST_CASE("run-length encoding round-trips") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 50; ++i) {
    const auto m = oracle::random_mask(rng, 30);
    CHECK(rle::decode(rle::encode(m), m.width(), m.height()) == m);
  }
  BinaryMask m(3, 2);
  m.set(0, 0);
  m.set(2, 1);
  CHECK(rle::encode(m) == "0 1 4 1");
  CHECK(rle::encode(BinaryMask(2, 2)) == "4");
  CHECK_THROWS_AS(rle::decode("1 2", 2, 2), rle::DecodeError);
  CHECK_THROWS_AS(rle::decode("3 x", 2, 2), rle::DecodeError);
  CHECK_THROWS_AS(rle::decode("5", 2, 2), rle::DecodeError);
}

TEST_CASE("import_annotations builds frame-resolution records") {
  BinaryMask m(420, 420);
  for (int y = 10; y < 110; ++y) {
    for (int x = 20; x < 220; ++x) m.set(x, y);
  }
  std::ostringstream line;
  line << R"({"id":"ext-1","width":420,"height":420,"mask_rle":")" << rle::encode(m)
       << R"(","text":"the wide box"})" << "\n\n";
  line << R"({"width":420,"height":420,"mask_rle":")" << rle::encode(m)
       << R"(","text":"again"})" << "\n";
  std::istringstream in(line.str());
  const auto records = import_annotations(in);
  REQUIRE(records.size() == 2);
  CHECK(records[0].id == "ext-1");
  CHECK(records[0].query_text == "the wide box");
  CHECK(records[0].gt_bbox == BBox{40, 20, 439, 219});
  CHECK(records[1].id == "import-3");
  CHECK_FALSE(records[0].scene);
  check_record_invariants(records[0]);

  std::istringstream bad(R"({"width":4,"height":4,"mask_rle":"20","text":"x"})");
  CHECK_THROWS_AS(import_annotations(bad), ParseError);
}
