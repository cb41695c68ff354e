#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "segzero/geometry.hpp"
#include "segzero/synth.hpp"

namespace segzero::rle {

struct DecodeError : Error {
  using Error::Error;
};

/// Space-separated run lengths over the row-major pixels, alternating background and
/// foreground and starting with background (the first run may be 0).
std::string encode(const geometry::BinaryMask& mask);
geometry::BinaryMask decode(const std::string& text, int width, int height);

}  // namespace segzero::rle

namespace segzero::dataprep {

struct ParseError : Error {
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

/// Objects of a synthetic scene; re-rendering them reproduces every mask exactly.
struct SceneSpec {
  std::uint64_t seed = 0;
  std::vector<synth::SceneObject> objects;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct GroundTruthRecord {
  std::string id;
  std::string query_text;
  std::array<double, synth::kQueryFeatureSize> query_features{};
  geometry::BBox gt_bbox;
  geometry::Point gt_p1;
  geometry::Point gt_p2;
  geometry::BinaryMask gt_mask;
  int src_w = kFrameSize;
  int src_h = kFrameSize;
  std::optional<SceneSpec> scene;
  std::optional<int> target;

  friend bool operator==(const GroundTruthRecord&, const GroundTruthRecord&) = default;
};

/// Tight box over the foreground: min/max column and row indices. Throws EmptyMask.
geometry::BBox mask_to_bbox(const geometry::BinaryMask& mask);

/// Nearest-neighbour resample to kFrameSize x kFrameSize (aspect ratio not preserved).
geometry::BinaryMask rescale_mask(const geometry::BinaryMask& mask);

/// Maps a source-resolution coordinate into the uniform frame.
geometry::Point rescale_point(const geometry::Point& p, int src_w, int src_h);

/// Rescales the mask, then derives bbox and inscribed-circle points from the rescaled mask.
GroundTruthRecord make_record(const geometry::BinaryMask& mask, const std::string& id,
                              const std::string& query_text,
                              const std::array<double, synth::kQueryFeatureSize>& features);

/// One synthetic sample: generates a scene and query, retrying sub-seeds on generation
/// failures.
GroundTruthRecord make_synth_record(std::uint64_t seed, int min_objects, int max_objects);

std::vector<GroundTruthRecord> make_synth_dataset(std::size_t n, std::uint64_t seed,
                                                  int min_objects = 3, int max_objects = 5);

synth::Scene render(const SceneSpec& spec);

std::string to_json_line(const GroundTruthRecord& r);
GroundTruthRecord from_json_line(const std::string& line, std::size_t line_number = 1);

void write_dataset(std::ostream& out, const std::vector<GroundTruthRecord>& records);
std::vector<GroundTruthRecord> read_dataset(std::istream& in);
void write_dataset(const std::filesystem::path& path, const std::vector<GroundTruthRecord>& records);
std::vector<GroundTruthRecord> read_dataset(const std::filesystem::path& path);

/// External annotations, one JSON object per line:
/// {"id"?: str, "width": int, "height": int, "mask_rle": str, "text": str}.
std::vector<GroundTruthRecord> import_annotations(std::istream& in);
std::vector<GroundTruthRecord> import_annotations(const std::filesystem::path& path);

}  // namespace segzero::dataprep
