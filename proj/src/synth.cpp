#include "segzero/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace segzero::synth {

namespace {

constexpr std::array<std::string_view, kShapeCount> kShapeNames = {"circle", "square",
                                                                   "triangle"};
constexpr std::array<std::string_view, kColorCount> kColorNames = {"red",    "green", "blue",
                                                                   "yellow", "purple", "orange"};
constexpr int kSceneAttempts = 32;
constexpr int kPlacementTries = 200;
constexpr double kMaxPairOverlap = 0.15;
constexpr double kMaxOcclusion = 0.2;
constexpr double kMinVisibleFraction = 0.6;
constexpr std::size_t kMinVisiblePixels = 200;
constexpr int kSizeMargin = 12;
constexpr double kPositionMargin = 30.0;

// Feature-vector layout (one-hot slots, zero padded to kQueryFeatureSize).
constexpr int kColorSlot = 0;      // 6 colors + "none" at 6
constexpr int kShapeSlot = 7;      // 3 shapes
constexpr int kSizeSlot = 10;      // none, largest, smallest
constexpr int kRelationSlot = 13;  // none, left, right, above, below

int half_extent(int size) { return size / 2; }

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double square_overlap(const SceneObject& a, const SceneObject& b) {
  const int ha = half_extent(a.size), hb = half_extent(b.size);
  const int w = std::min(a.cx + ha, b.cx + hb) - std::max(a.cx - ha, b.cx - hb);
  const int h = std::min(a.cy + ha, b.cy + hb) - std::max(a.cy - ha, b.cy - hb);
  return (w > 0 && h > 0) ? static_cast<double>(w) * h : 0.0;
}

}  // namespace

std::string_view to_string(Shape s) { return kShapeNames[static_cast<int>(s)]; }
std::string_view to_string(Color c) { return kColorNames[static_cast<int>(c)]; }
std::string_view to_string(SizeRank r) { return r == SizeRank::Largest ? "largest" : "smallest"; }
std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::Left: return "left";
    case Relation::Right: return "right";
    case Relation::Above: return "top";
    case Relation::Below: return "bottom";
  }
  return "";
}

std::optional<Shape> parse_shape(std::string_view s) {
  for (int i = 0; i < kShapeCount; ++i) {
    if (kShapeNames[i] == s) return static_cast<Shape>(i);
  }
  return std::nullopt;
}

std::optional<Color> parse_color(std::string_view s) {
  for (int i = 0; i < kColorCount; ++i) {
    if (kColorNames[i] == s) return static_cast<Color>(i);
  }
  return std::nullopt;
}

std::array<std::uint8_t, 3> rgb(Color c) {
  switch (c) {
    case Color::Red: return {220, 40, 40};
    case Color::Green: return {40, 180, 60};
    case Color::Blue: return {40, 80, 220};
    case Color::Yellow: return {235, 215, 40};
    case Color::Purple: return {150, 60, 190};
    case Color::Orange: return {245, 140, 30};
  }
  return {0, 0, 0};
}

bool SceneObject::covers(int x, int y) const {
  const double half = size / 2.0;
  const double dx = x - cx;
  const double dy = y - cy;
  switch (shape) {
    case Shape::Circle: return dx * dx + dy * dy <= half * half;
    case Shape::Square: return std::abs(dx) <= half && std::abs(dy) <= half;
    case Shape::Triangle: {
      // Apex up, base down, inscribed in the bounding square.
      if (dy < -half || dy > half) return false;
      const double t = (dy + half) / size;
      return std::abs(dx) <= half * t;
    }
  }
  return false;
}

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

Scene render_scene(std::uint64_t seed, std::vector<SceneObject> objects) {
  Scene scene;
  scene.seed = seed;
  scene.objects = std::move(objects);
  const std::size_t n_pixels = static_cast<std::size_t>(kFrameSize) * kFrameSize;
  std::vector<int> owner(n_pixels, -1);

  std::vector<int> order(scene.objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scene.objects[a].z < scene.objects[b].z; });
  for (int k : order) {
    const auto& o = scene.objects[k];
    const int h = half_extent(o.size) + 1;
    for (int y = std::max(0, o.cy - h); y <= std::min(kFrameSize - 1, o.cy + h); ++y) {
      for (int x = std::max(0, o.cx - h); x <= std::min(kFrameSize - 1, o.cx + h); ++x) {
        if (o.covers(x, y)) owner[static_cast<std::size_t>(y) * kFrameSize + x] = k;
      }
    }
  }

  scene.raster.assign(n_pixels, 0);
  scene.masks.assign(scene.objects.size(), geometry::BinaryMask(kFrameSize, kFrameSize));
  for (int y = 0; y < kFrameSize; ++y) {
    for (int x = 0; x < kFrameSize; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * kFrameSize + x;
      const int k = owner[i];
      if (k < 0) continue;
      scene.raster[i] = static_cast<std::uint8_t>(static_cast<int>(scene.objects[k].color) + 1);
      scene.masks[k].set(x, y);
    }
  }
  return scene;
}

namespace {

std::size_t full_area(const SceneObject& o) {
  std::size_t n = 0;
  const int h = half_extent(o.size) + 1;
  for (int y = o.cy - h; y <= o.cy + h; ++y) {
    for (int x = o.cx - h; x <= o.cx + h; ++x) {
      if (o.covers(x, y)) ++n;
    }
  }
  return n;
}

std::optional<std::vector<SceneObject>> place_objects(std::mt19937_64& rng, int n) {
  std::array<int, kColorCount> colors{};
  std::iota(colors.begin(), colors.end(), 0);
  std::shuffle(colors.begin(), colors.end(), rng);
  const int palette = n <= 4 ? 3 : 4;

  std::vector<SceneObject> objects;
  std::vector<double> occluded;
  for (int k = 0; k < n; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementTries && !placed; ++attempt) {
      SceneObject o;
      o.size = uniform_int(rng, kMinSize, kMaxSize);
      const int h = half_extent(o.size) + 1;
      o.cx = uniform_int(rng, h, kFrameSize - 1 - h);
      o.cy = uniform_int(rng, h, kFrameSize - 1 - h);
      o.z = k;
      const double area = static_cast<double>(o.size) * o.size;
      bool ok = true;
      std::vector<double> added(objects.size(), 0.0);
      for (std::size_t j = 0; j < objects.size() && ok; ++j) {
        const double other = static_cast<double>(objects[j].size) * objects[j].size;
        added[j] = square_overlap(o, objects[j]);
        ok = added[j] <= kMaxPairOverlap * std::min(area, other) &&
             occluded[j] + added[j] <= kMaxOcclusion * other;
      }
      if (!ok) continue;
      for (std::size_t j = 0; j < objects.size(); ++j) occluded[j] += added[j];
      o.shape = static_cast<Shape>(uniform_int(rng, 0, kShapeCount - 1));
      o.color = static_cast<Color>(colors[uniform_int(rng, 0, palette - 1)]);
      objects.push_back(o);
      occluded.push_back(0.0);
      placed = true;
    }
    if (!placed) return std::nullopt;
  }

  bool repeated = false;
  for (int a = 0; a < n && !repeated; ++a) {
    for (int b = a + 1; b < n; ++b) repeated |= objects[a].shape == objects[b].shape;
  }
  if (!repeated) objects[1].shape = objects[0].shape;
  return objects;
}

}  // namespace

Scene generate_scene(std::uint64_t seed, int n_objects) {
  if (n_objects < kMinObjects || n_objects > kMaxObjects) {
    throw Error("n_objects must be in [" + std::to_string(kMinObjects) + ", " +
                std::to_string(kMaxObjects) + "], got " + std::to_string(n_objects));
  }
  for (int attempt = 0; attempt < kSceneAttempts; ++attempt) {
    auto rng = seeded_rng(seed, static_cast<std::uint64_t>(attempt));
    auto objects = place_objects(rng, n_objects);
    if (!objects) continue;
    Scene scene = render_scene(seed, std::move(*objects));
    bool visible = true;
    for (std::size_t k = 0; k < scene.objects.size() && visible; ++k) {
      const std::size_t shown = scene.masks[k].count();
      visible = shown >= kMinVisiblePixels &&
                static_cast<double>(shown) >=
                    kMinVisibleFraction * static_cast<double>(full_area(scene.objects[k]));
    }
    if (visible) return scene;
  }
  throw PlacementFailure("could not place " + std::to_string(n_objects) +
                         " objects for seed " + std::to_string(seed));
}

std::vector<ObjectView> object_views(const Scene& scene) {
  std::vector<ObjectView> views;
  views.reserve(scene.objects.size());
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    const auto& o = scene.objects[k];
    const auto& m = scene.masks[k];
    ObjectView v{o.shape, o.color, o.size, {double(o.cx), double(o.cy)}, {}};
    int x0 = kFrameSize, y0 = kFrameSize, x1 = -1, y1 = -1;
    const int h = half_extent(o.size) + 1;
    for (int y = std::max(0, o.cy - h); y <= std::min(kFrameSize - 1, o.cy + h); ++y) {
      for (int x = std::max(0, o.cx - h); x <= std::min(kFrameSize - 1, o.cx + h); ++x) {
        if (!m.at(x, y)) continue;
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
    }
    if (x1 >= 0) v.box = {double(x0), double(y0), double(x1), double(y1)};
    views.push_back(v);
  }
  return views;
}

namespace {

std::vector<int> attribute_matches(const std::vector<ObjectView>& objects, const Constraints& c) {
  std::vector<int> out;
  for (int k = 0; k < static_cast<int>(objects.size()); ++k) {
    if (objects[k].shape != c.shape) continue;
    if (c.color && objects[k].color != *c.color) continue;
    out.push_back(k);
  }
  return out;
}

double size_key(const ObjectView& o, SizeRank r) {
  return r == SizeRank::Largest ? o.size : -o.size;
}

double position_key(const ObjectView& o, Relation r) {
  switch (r) {
    case Relation::Left: return -o.center.x;
    case Relation::Right: return o.center.x;
    case Relation::Above: return -o.center.y;
    case Relation::Below: return o.center.y;
  }
  return 0.0;
}

template <typename Key>
std::vector<int> extremes(const std::vector<ObjectView>& objects, const std::vector<int>& pool,
                          Key key) {
  std::vector<int> out;
  double best = -1e300;
  for (int k : pool) {
    const double v = key(objects[k]);
    if (v > best) {
      best = v;
      out.assign(1, k);
    } else if (v == best) {
      out.push_back(k);
    }
  }
  return out;
}

// Gap between the extreme and the runner-up of the pool; infinite for single-element pools.
template <typename Key>
double extreme_gap(const std::vector<ObjectView>& objects, const std::vector<int>& pool, Key key) {
  if (pool.size() < 2) return 1e300;
  std::vector<double> v;
  for (int k : pool) v.push_back(key(objects[k]));
  std::sort(v.begin(), v.end(), std::greater<>());
  return v[0] - v[1];
}

}  // namespace

std::vector<int> evaluate(const std::vector<ObjectView>& objects, const Constraints& c) {
  std::vector<int> pool = attribute_matches(objects, c);
  std::vector<int> result = pool;
  if (c.size) {
    const auto r = *c.size;
    const auto keep = extremes(objects, pool, [r](const ObjectView& o) { return size_key(o, r); });
    std::erase_if(result, [&](int k) { return std::find(keep.begin(), keep.end(), k) == keep.end(); });
  }
  if (c.relation) {
    const auto r = *c.relation;
    const auto keep =
        extremes(objects, pool, [r](const ObjectView& o) { return position_key(o, r); });
    std::erase_if(result, [&](int k) { return std::find(keep.begin(), keep.end(), k) == keep.end(); });
  }
  return result;
}

std::string describe(const Constraints& c) {
  std::string text = "the ";
  if (c.size) text += std::string(to_string(*c.size)) + " ";
  if (c.color) text += std::string(to_string(*c.color)) + " ";
  text += to_string(c.shape);
  if (c.relation) {
    switch (*c.relation) {
      case Relation::Left: text += " on the left"; break;
      case Relation::Right: text += " on the right"; break;
      case Relation::Above: text += " at the top"; break;
      case Relation::Below: text += " at the bottom"; break;
    }
  }
  return text;
}

std::array<double, kQueryFeatureSize> encode_features(const Constraints& c) {
  std::array<double, kQueryFeatureSize> f{};
  f[kColorSlot + (c.color ? static_cast<int>(*c.color) : kColorCount)] = 1.0;
  f[kShapeSlot + static_cast<int>(c.shape)] = 1.0;
  f[kSizeSlot + (c.size ? 1 + static_cast<int>(*c.size) : 0)] = 1.0;
  f[kRelationSlot + (c.relation ? 1 + static_cast<int>(*c.relation) : 0)] = 1.0;
  return f;
}

std::optional<Constraints> decode_features(const std::array<double, kQueryFeatureSize>& f) {
  auto hot = [&](int begin, int count) -> int {
    int found = -1;
    for (int i = 0; i < count; ++i) {
      if (f[begin + i] == 1.0) {
        if (found >= 0) return -2;
        found = i;
      } else if (f[begin + i] != 0.0) {
        return -2;
      }
    }
    return found;
  };
  const int color = hot(kColorSlot, kColorCount + 1);
  const int shape = hot(kShapeSlot, kShapeCount);
  const int size = hot(kSizeSlot, 3);
  const int relation = hot(kRelationSlot, 5);
  if (color < 0 || shape < 0 || size < 0 || relation < 0) return std::nullopt;
  Constraints c;
  c.shape = static_cast<Shape>(shape);
  if (color < kColorCount) c.color = static_cast<Color>(color);
  if (size > 0) c.size = static_cast<SizeRank>(size - 1);
  if (relation > 0) c.relation = static_cast<Relation>(relation - 1);
  return c;
}

namespace {

bool has_margin(const std::vector<ObjectView>& objects, const Constraints& c) {
  const auto pool = attribute_matches(objects, c);
  if (c.size) {
    const auto r = *c.size;
    if (extreme_gap(objects, pool, [r](const ObjectView& o) { return size_key(o, r); }) <
        kSizeMargin) {
      return false;
    }
  }
  if (c.relation) {
    const auto r = *c.relation;
    if (extreme_gap(objects, pool, [r](const ObjectView& o) { return position_key(o, r); }) <
        kPositionMargin) {
      return false;
    }
  }
  return true;
}

}  // namespace

Query make_query(const Scene& scene, std::uint64_t rng_seed) {
  const auto objects = object_views(scene);
  const int n = static_cast<int>(objects.size());
  if (n == 0) throw NoUniqueTarget("scene has no objects");
  auto rng = seeded_rng(rng_seed, 0x9e37);
  const int start = uniform_int(rng, 0, n - 1);

  for (int offset = 0; offset < n; ++offset) {
    const int target = (start + offset) % n;
    const auto& t = objects[target];
    std::vector<Constraints> candidates;
    for (int use_color = 0; use_color < 2; ++use_color) {
      Constraints base;
      base.shape = t.shape;
      if (use_color) base.color = t.color;
      candidates.push_back(base);
      for (auto rank : {SizeRank::Largest, SizeRank::Smallest}) {
        Constraints sized = base;
        sized.size = rank;
        candidates.push_back(sized);
      }
      for (int r = 0; r < 4; ++r) {
        Constraints related = base;
        related.relation = static_cast<Relation>(r);
        candidates.push_back(related);
      }
    }
    std::shuffle(candidates.begin(), candidates.end(), rng);
    for (const auto& c : candidates) {
      const auto hits = evaluate(objects, c);
      if (hits.size() != 1 || hits[0] != target || !has_margin(objects, c)) continue;
      Query q;
      q.text = describe(c);
      q.target = target;
      q.features = encode_features(c);
      q.constraints = c;
      return q;
    }
  }
  throw NoUniqueTarget("no constraint set isolates a single object in scene " +
                       std::to_string(scene.seed));
}

std::uint64_t raster_hash(const Scene& scene) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto b : scene.raster) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace segzero::synth
