#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "segzero/geometry.hpp"
#include "segzero/synth.hpp"

namespace segzero::image {

struct ImageError : Error {
  using Error::Error;
};

/// 8-bit RGB, row-major, three bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

/// Scene raster in its palette colors on a white background.
Image render_rgb(const synth::Scene& scene);

/// Truecolor 8-bit PNG with a single zlib-compressed IDAT chunk.
std::string encode_png(const Image& img);

/// Width and height from the IHDR chunk, or nullopt when the bytes are not a PNG.
std::optional<std::pair<int, int>> png_dimensions(std::string_view bytes);

std::string base64_encode(std::string_view bytes);
/// Throws ImageError on characters outside the standard alphabet or bad padding.
std::string base64_decode(std::string_view text);

}  // namespace segzero::image
