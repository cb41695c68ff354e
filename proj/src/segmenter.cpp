#include "segzero/segmenter.hpp"

#include <cmath>
#include <future>
#include <memory>
#include <regex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "segzero/dataprep.hpp"
#include "segzero/image.hpp"

namespace segzero::segmenter {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

std::optional<Endpoint> split_endpoint(const std::string& url) {
  static const std::regex re(R"(^(http://[^/:?#]+(?::\d+)?)(/[^?#]*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) return std::nullopt;
  Endpoint e{m[1].str(), m[2].matched && m[2].length() > 0 ? m[2].str() : std::string(kDefaultPath)};
  return e;
}

bool covers(const geometry::BinaryMask& mask, const geometry::Point& p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  const double fx = std::floor(p.x);
  const double fy = std::floor(p.y);
  if (fx < 0 || fy < 0 || fx >= mask.width() || fy >= mask.height()) return false;
  return mask.at(static_cast<int>(fx), static_cast<int>(fy));
}

}  // namespace

std::string_view to_string(BackendKind k) {
  return k == BackendKind::Synthetic ? "synthetic" : "remote";
}

std::optional<BackendKind> parse_backend_kind(std::string_view s) {
  if (s == "synthetic") return BackendKind::Synthetic;
  if (s == "remote") return BackendKind::Remote;
  return std::nullopt;
}

void SegBackend::validate() const {
  if (timeout.count() <= 0) throw ConfigError("backend timeout must be positive");
  if (kind != BackendKind::Remote) return;
  if (!endpoint || endpoint->empty()) throw ConfigError("remote backend requires an endpoint");
  if (!split_endpoint(*endpoint)) {
    throw ConfigError("endpoint must look like http://host[:port][/path]: " + *endpoint);
  }
}

geometry::BinaryMask segment_synthetic(const synth::Scene& scene,
                                       const parser::SegPrompt& prompt) {
  int best = -1;
  double best_score = 0.0;
  for (std::size_t k = 0; k < scene.masks.size(); ++k) {
    const auto& mask = scene.masks[k];
    if (mask.empty()) continue;
    const double iou = geometry::bbox_iou(dataprep::mask_to_bbox(mask), prompt.bbox);
    const int hits = static_cast<int>(covers(mask, prompt.p1)) + static_cast<int>(covers(mask, prompt.p2));
    const double score = iou + 0.5 * hits / 2.0;
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(k);
    }
  }
  if (best < 0) return geometry::BinaryMask(kFrameSize, kFrameSize);
  return scene.masks[best];
}

geometry::BinaryMask segment_remote(std::string_view png_bytes, const parser::SegPrompt& prompt,
                                    const SegBackend& backend) {
  backend.validate();
  if (backend.kind != BackendKind::Remote) throw ConfigError("backend is not remote");
  const auto dims = image::png_dimensions(png_bytes);
  if (!dims) throw image::ImageError("request image is not a PNG");
  const auto [width, height] = *dims;
  const Endpoint ep = *split_endpoint(*backend.endpoint);

  const nlohmann::json request = {
      {"image_png_b64", image::base64_encode(png_bytes)},
      {"bbox", {prompt.bbox.x1, prompt.bbox.y1, prompt.bbox.x2, prompt.bbox.y2}},
      {"points", {{prompt.p1.x, prompt.p1.y}, {prompt.p2.x, prompt.p2.y}}},
      {"width", width},
      {"height", height},
  };

  // Per-phase socket timeouts alone could add up past the budget, so the request runs on its
  // own thread against one deadline. On expiry the socket is shut down and the thread is left
  // to unwind; it owns everything it touches.
  auto client = std::make_shared<httplib::Client>(ep.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(backend.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(backend.timeout - secs);
  client->set_connection_timeout(secs.count(), usecs.count());
  client->set_read_timeout(secs.count(), usecs.count());
  client->set_write_timeout(secs.count(), usecs.count());

  auto done = std::make_shared<std::promise<httplib::Result>>();
  auto pending = done->get_future();
  std::thread([client, done, path = ep.path, body = request.dump()] {
    done->set_value(client->Post(path, body, "application/json"));
  }).detach();
  if (pending.wait_for(backend.timeout) != std::future_status::ready) {
    client->stop();
    throw Timeout("segmentation request to " + *backend.endpoint + " exceeded " +
                  std::to_string(backend.timeout.count()) + " ms");
  }
  const auto res = pending.get();
  if (!res) {
    throw Timeout("segmentation request to " + *backend.endpoint +
                  " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw ProtocolError("backend answered HTTP " + std::to_string(res->status), res->status);
  }

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what(), res->status);
  }
  if (!body.is_object() || !body.contains("mask_rle") || !body["mask_rle"].is_string() ||
      !body.contains("width") || !body["width"].is_number_integer() ||
      !body.contains("height") || !body["height"].is_number_integer()) {
    throw ProtocolError("response lacks mask_rle/width/height", res->status);
  }
  const int rw = body["width"].get<int>();
  const int rh = body["height"].get<int>();
  if (rw != width || rh != height) {
    throw ProtocolError("response mask is " + std::to_string(rw) + "x" + std::to_string(rh) +
                            ", request was " + std::to_string(width) + "x" + std::to_string(height),
                        res->status);
  }
  try {
    return rle::decode(body["mask_rle"].get<std::string>(), width, height);
  } catch (const rle::DecodeError& e) {
    throw DecodeError(std::string("response mask: ") + e.what());
  }
}

}  // namespace segzero::segmenter
