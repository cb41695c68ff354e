#include "segzero/dataprep.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>

#include "json.hpp"

namespace segzero::dataprep {

using nlohmann::json;

geometry::BBox mask_to_bbox(const geometry::BinaryMask& mask) {
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw EmptyMask();
  return {double(x0), double(y0), double(x1), double(y1)};
}

geometry::BinaryMask rescale_mask(const geometry::BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  if (w <= 0 || h <= 0) throw EmptyMask();
  if (w == kFrameSize && h == kFrameSize) return mask;
  geometry::BinaryMask out(kFrameSize, kFrameSize);
  std::vector<int> src_x(kFrameSize);
  for (int x = 0; x < kFrameSize; ++x) {
    src_x[x] = static_cast<int>((static_cast<std::int64_t>(2 * x + 1) * w) / (2 * kFrameSize));
  }
  for (int y = 0; y < kFrameSize; ++y) {
    const int sy = static_cast<int>((static_cast<std::int64_t>(2 * y + 1) * h) / (2 * kFrameSize));
    for (int x = 0; x < kFrameSize; ++x) {
      if (mask.at(src_x[x], sy)) out.set(x, y);
    }
  }
  return out;
}

geometry::Point rescale_point(const geometry::Point& p, int src_w, int src_h) {
  return {p.x * kFrameSize / src_w, p.y * kFrameSize / src_h};
}

GroundTruthRecord make_record(const geometry::BinaryMask& mask, const std::string& id,
                              const std::string& query_text,
                              const std::array<double, synth::kQueryFeatureSize>& features) {
  GroundTruthRecord r;
  r.id = id;
  r.query_text = query_text;
  r.query_features = features;
  r.src_w = mask.width();
  r.src_h = mask.height();
  r.gt_mask = rescale_mask(mask);
  r.gt_bbox = mask_to_bbox(r.gt_mask);
  std::tie(r.gt_p1, r.gt_p2) = geometry::inscribed_circle_centers(r.gt_mask);
  return r;
}

synth::Scene render(const SceneSpec& spec) { return synth::render_scene(spec.seed, spec.objects); }

GroundTruthRecord make_synth_record(std::uint64_t seed, int min_objects, int max_objects) {
  constexpr int kRetries = 64;
  for (int sub = 0; sub < kRetries; ++sub) {
    auto rng = synth::seeded_rng(seed, 0x5eed0000u + static_cast<std::uint64_t>(sub));
    const int n = std::uniform_int_distribution<int>(min_objects, max_objects)(rng);
    const std::uint64_t scene_seed = rng();
    const std::uint64_t query_seed = rng();
    try {
      const synth::Scene scene = synth::generate_scene(scene_seed, n);
      const synth::Query q = synth::make_query(scene, query_seed);
      std::string id = "synth-" + std::to_string(seed);
      if (sub > 0) id += "-" + std::to_string(sub);
      GroundTruthRecord r = make_record(scene.masks[q.target], id, q.text, q.features);
      r.scene = SceneSpec{scene.seed, scene.objects};
      r.target = q.target;
      return r;
    } catch (const synth::NoUniqueTarget&) {
    } catch (const synth::PlacementFailure&) {
    }
  }
  throw Error("synthetic sample generation failed for seed " + std::to_string(seed));
}

std::vector<GroundTruthRecord> make_synth_dataset(std::size_t n, std::uint64_t seed,
                                                  int min_objects, int max_objects) {
  std::vector<GroundTruthRecord> out;
  out.reserve(n);
  auto rng = synth::seeded_rng(seed, 0xda7a);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(make_synth_record(rng(), min_objects, max_objects));
  }
  return out;
}

namespace {

json point_json(const geometry::Point& p) { return json::array({p.x, p.y}); }

json scene_json(const SceneSpec& s) {
  json objects = json::array();
  for (const auto& o : s.objects) {
    objects.push_back({{"shape", std::string(synth::to_string(o.shape))},
                       {"color", std::string(synth::to_string(o.color))},
                       {"size", o.size},
                       {"cx", o.cx},
                       {"cy", o.cy},
                       {"z", o.z}});
  }
  return {{"seed", s.seed}, {"objects", std::move(objects)}};
}

template <std::size_t N>
std::array<double, N> number_array(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != N) {
    throw Error(std::string("key '") + key + "' must be an array of " + std::to_string(N));
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) throw Error(std::string("key '") + key + "' holds a non-number");
    out[i] = v[i].get<double>();
  }
  return out;
}

SceneSpec scene_from_json(const json& j) {
  SceneSpec s;
  s.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& o : j.at("objects")) {
    synth::SceneObject obj;
    const auto shape = synth::parse_shape(o.at("shape").get<std::string>());
    const auto color = synth::parse_color(o.at("color").get<std::string>());
    if (!shape || !color) throw Error("unknown shape or color in scene");
    obj.shape = *shape;
    obj.color = *color;
    obj.size = o.at("size").get<int>();
    obj.cx = o.at("cx").get<int>();
    obj.cy = o.at("cy").get<int>();
    obj.z = o.at("z").get<int>();
    s.objects.push_back(obj);
  }
  return s;
}

}  // namespace

std::string to_json_line(const GroundTruthRecord& r) {
  json j;
  j["id"] = r.id;
  j["query_text"] = r.query_text;
  j["query_features"] = r.query_features;
  j["bbox"] = json::array({r.gt_bbox.x1, r.gt_bbox.y1, r.gt_bbox.x2, r.gt_bbox.y2});
  j["p1"] = point_json(r.gt_p1);
  j["p2"] = point_json(r.gt_p2);
  j["mask_rle"] = rle::encode(r.gt_mask);
  j["src_w"] = r.src_w;
  j["src_h"] = r.src_h;
  if (r.scene) j["scene"] = scene_json(*r.scene);
  if (r.target) j["target"] = *r.target;
  return j.dump();
}

GroundTruthRecord from_json_line(const std::string& line, std::size_t line_number) {
  try {
    const json j = json::parse(line);
    if (!j.is_object()) throw Error("record is not a JSON object");
    GroundTruthRecord r;
    r.id = j.at("id").get<std::string>();
    r.query_text = j.at("query_text").get<std::string>();
    r.query_features = number_array<synth::kQueryFeatureSize>(j, "query_features");
    const auto b = number_array<4>(j, "bbox");
    r.gt_bbox = {b[0], b[1], b[2], b[3]};
    const auto p1 = number_array<2>(j, "p1");
    const auto p2 = number_array<2>(j, "p2");
    r.gt_p1 = {p1[0], p1[1]};
    r.gt_p2 = {p2[0], p2[1]};
    r.gt_mask = rle::decode(j.at("mask_rle").get<std::string>(), kFrameSize, kFrameSize);
    r.src_w = j.at("src_w").get<int>();
    r.src_h = j.at("src_h").get<int>();
    if (j.contains("scene")) r.scene = scene_from_json(j.at("scene"));
    if (j.contains("target")) r.target = j.at("target").get<int>();
    return r;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(line_number, e.what());
  }
}

void write_dataset(std::ostream& out, const std::vector<GroundTruthRecord>& records) {
  for (const auto& r : records) out << to_json_line(r) << '\n';
}

namespace {

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

std::vector<GroundTruthRecord> read_dataset(std::istream& in) {
  std::vector<GroundTruthRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (blank(line)) continue;
    out.push_back(from_json_line(line, n));
  }
  return out;
}

void write_dataset(const std::filesystem::path& path,
                   const std::vector<GroundTruthRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_dataset(out, records);
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<GroundTruthRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_dataset(in);
}

std::vector<GroundTruthRecord> import_annotations(std::istream& in) {
  std::vector<GroundTruthRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (blank(line)) continue;
    try {
      const json j = json::parse(line);
      const int w = j.at("width").get<int>();
      const int h = j.at("height").get<int>();
      if (w <= 0 || h <= 0) throw Error("image size must be positive");
      const auto mask = rle::decode(j.at("mask_rle").get<std::string>(), w, h);
      const std::string id =
          j.contains("id") ? j.at("id").get<std::string>() : "import-" + std::to_string(n);
      std::array<double, synth::kQueryFeatureSize> features{};
      out.push_back(make_record(mask, id, j.at("text").get<std::string>(), features));
    } catch (const std::exception& e) {
      throw ParseError(n, e.what());
    }
  }
  return out;
}

std::vector<GroundTruthRecord> import_annotations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return import_annotations(in);
}

}  // namespace segzero::dataprep
