#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "segzero/geometry.hpp"

namespace segzero::synth {

enum class Shape { Circle, Square, Triangle };
enum class Color { Red, Green, Blue, Yellow, Purple, Orange };
enum class SizeRank { Largest, Smallest };
enum class Relation { Left, Right, Above, Below };

inline constexpr int kShapeCount = 3;
inline constexpr int kColorCount = 6;
inline constexpr int kMaxObjects = 12;
inline constexpr int kMinObjects = 2;
inline constexpr int kMinSize = 80;
inline constexpr int kMaxSize = 240;
inline constexpr std::size_t kQueryFeatureSize = 32;

std::string_view to_string(Shape s);
std::string_view to_string(Color c);
std::string_view to_string(SizeRank r);
std::string_view to_string(Relation r);
std::optional<Shape> parse_shape(std::string_view s);
std::optional<Color> parse_color(std::string_view s);
std::array<std::uint8_t, 3> rgb(Color c);

struct PlacementFailure : Error {
  using Error::Error;
};

struct NoUniqueTarget : Error {
  using Error::Error;
};

struct SceneObject {
  Shape shape = Shape::Circle;
  Color color = Color::Red;
  int size = kMinSize;
  int cx = 0;
  int cy = 0;
  int z = 0;

  bool covers(int x, int y) const;
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// Objects plus their rendering: raster holds 0 for background, color index + 1 otherwise;
/// masks[k] is the visible (z-occluded) footprint of objects[k].
struct Scene {
  std::uint64_t seed = 0;
  std::vector<SceneObject> objects;
  std::vector<std::uint8_t> raster;
  std::vector<geometry::BinaryMask> masks;
};

/// Attribute view of one object as seen by reasoning components.
struct ObjectView {
  Shape shape = Shape::Circle;
  Color color = Color::Red;
  int size = 0;
  geometry::Point center;
  geometry::BBox box;  // tight box of the visible mask
};

struct Constraints {
  Shape shape = Shape::Circle;
  std::optional<Color> color;
  std::optional<SizeRank> size;
  std::optional<Relation> relation;

  friend bool operator==(const Constraints&, const Constraints&) = default;
};

struct Query {
  std::string text;
  int target = -1;
  std::array<double, kQueryFeatureSize> features{};
  std::optional<Constraints> constraints;
};

Scene render_scene(std::uint64_t seed, std::vector<SceneObject> objects);

/// Deterministic in seed. Throws PlacementFailure when retries are exhausted.
Scene generate_scene(std::uint64_t seed, int n_objects);

std::vector<ObjectView> object_views(const Scene& scene);

/// Indices of objects satisfying every constraint. Superlatives pick the extreme among
/// objects matching shape and color; ties keep every extreme object.
std::vector<int> evaluate(const std::vector<ObjectView>& objects, const Constraints& c);

std::string describe(const Constraints& c);
std::array<double, kQueryFeatureSize> encode_features(const Constraints& c);
std::optional<Constraints> decode_features(const std::array<double, kQueryFeatureSize>& f);

/// Throws NoUniqueTarget when no constraint set isolates a single object.
Query make_query(const Scene& scene, std::uint64_t rng_seed);

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// FNV-1a over the raster bytes.
std::uint64_t raster_hash(const Scene& scene);

}  // namespace segzero::synth
