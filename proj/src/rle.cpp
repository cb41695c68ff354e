#include <charconv>

#include "segzero/dataprep.hpp"

namespace segzero::rle {

std::string encode(const geometry::BinaryMask& mask) {
  std::string out;
  bool current = false;
  std::size_t run = 0;
  auto flush = [&] {
    if (!out.empty()) out.push_back(' ');
    out += std::to_string(run);
  };
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const bool v = mask.at(x, y);
      if (v != current) {
        flush();
        current = v;
        run = 0;
      }
      ++run;
    }
  }
  flush();
  return out;
}

geometry::BinaryMask decode(const std::string& text, int width, int height) {
  if (width < 0 || height < 0) throw DecodeError("negative mask dimensions");
  geometry::BinaryMask mask(width, height);
  const std::size_t total = mask.size();
  std::size_t pos = 0;
  bool value = false;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  bool any = false;
  while (p < end) {
    while (p < end && *p == ' ') ++p;
    if (p == end) break;
    std::size_t run = 0;
    auto [next, ec] = std::from_chars(p, end, run);
    if (ec != std::errc{} || next == p) {
      throw DecodeError("invalid run length near offset " + std::to_string(p - text.data()));
    }
    p = next;
    if (p < end && *p != ' ') throw DecodeError("unexpected character in RLE string");
    if (run > total - pos) throw DecodeError("RLE runs exceed mask size");
    if (value) {
      for (std::size_t i = pos; i < pos + run; ++i) {
        mask.set(static_cast<int>(i % width), static_cast<int>(i / width));
      }
    }
    pos += run;
    value = !value;
    any = true;
  }
  if (!any && total != 0) throw DecodeError("empty RLE string");
  if (pos != total) {
    throw DecodeError("RLE covers " + std::to_string(pos) + " pixels, expected " +
                      std::to_string(total));
  }
  return mask;
}

}  // namespace segzero::rle
