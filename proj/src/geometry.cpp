#include "segzero/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace segzero::geometry {

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw Error("negative mask dimensions");
  }
  words_.assign((size() + 63) / 64, 0);
}

std::size_t BinaryMask::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

BinaryMask BinaryMask::operator~() const {
  BinaryMask out(width_, height_);
  for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] = ~words_[i];
  const std::size_t tail = size() & 63;
  if (tail != 0 && !out.words_.empty()) {
    out.words_.back() &= (std::uint64_t{1} << tail) - 1;
  }
  return out;
}

void BinaryMask::check_same_shape(const BinaryMask& other) const {
  if (width_ != other.width_ || height_ != other.height_) {
    throw DimensionMismatch(width_, height_, other.width_, other.height_);
  }
}

std::size_t BinaryMask::intersection_count(const BinaryMask& other) const {
  check_same_shape(other);
  std::size_t n = 0;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    n += static_cast<std::size_t>(std::popcount(words_[i] & other.words_[i]));
  }
  return n;
}

std::size_t BinaryMask::union_count(const BinaryMask& other) const {
  check_same_shape(other);
  std::size_t n = 0;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    n += static_cast<std::size_t>(std::popcount(words_[i] | other.words_[i]));
  }
  return n;
}

DistanceField::DistanceField(int width, int height, std::vector<std::int64_t> squared)
    : width_(width), height_(height), squared_(std::move(squared)) {}

double DistanceField::at(int x, int y) const {
  return std::sqrt(static_cast<double>(squared_at(x, y)));
}

double bbox_iou(const BBox& a, const BBox& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) {
    return a == b ? 1.0 : 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

double bbox_l1(const BBox& a, const BBox& b) {
  return std::abs(a.x1 - b.x1) + std::abs(a.y1 - b.y1) + std::abs(a.x2 - b.x2) +
         std::abs(a.y2 - b.y2);
}

double point_l1(const Point& a, const Point& b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

bool point_in_bbox(const Point& p, const BBox& b) {
  return b.x1 <= p.x && p.x <= b.x2 && b.y1 <= p.y && p.y <= b.y2;
}

namespace {

std::int64_t floor_div(std::int64_t num, std::int64_t den) {
  std::int64_t q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
  return q;
}

// Row pass of the Meijster et al. exact EDT over one line of column distances g.
void lower_envelope_pass(const std::vector<std::int64_t>& g, std::vector<std::int64_t>& out,
                         std::vector<int>& s, std::vector<int>& t) {
  const int m = static_cast<int>(g.size());
  auto f = [&](int x, int i) {
    const std::int64_t d = x - i;
    return d * d + g[i] * g[i];
  };
  auto sep = [&](int i, int u) {
    return floor_div(static_cast<std::int64_t>(u) * u - static_cast<std::int64_t>(i) * i +
                         g[u] * g[u] - g[i] * g[i],
                     2 * static_cast<std::int64_t>(u - i));
  };
  int q = 0;
  s[0] = 0;
  t[0] = 0;
  for (int u = 1; u < m; ++u) {
    while (q >= 0 && f(t[q], s[q]) > f(t[q], u)) --q;
    if (q < 0) {
      q = 0;
      s[0] = u;
    } else {
      const std::int64_t w = 1 + sep(s[q], u);
      if (w < m) {
        ++q;
        s[q] = u;
        t[q] = static_cast<int>(w);
      }
    }
  }
  for (int u = m - 1; u >= 0; --u) {
    out[u] = f(u, s[q]);
    if (u == t[q]) --q;
  }
}

struct Extent {
  int x0, y0, x1, y1;
};

Extent foreground_extent(const BinaryMask& mask) {
  Extent e{mask.width(), mask.height(), -1, -1};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) {
        e.x0 = std::min(e.x0, x);
        e.y0 = std::min(e.y0, y);
        e.x1 = std::max(e.x1, x);
        e.y1 = std::max(e.y1, y);
      }
    }
  }
  if (e.x1 < 0) throw EmptyMask();
  return e;
}

}  // namespace

DistanceField distance_transform(const BinaryMask& mask) {
  const Extent e = foreground_extent(mask);
  // Work on the foreground extent padded by one background pixel on each side; every
  // pixel outside it is background, so the nearest one is always found inside the pad.
  const int cw = e.x1 - e.x0 + 3;
  const int ch = e.y1 - e.y0 + 3;
  auto inside = [&](int cx, int cy) {
    const int x = cx + e.x0 - 1;
    const int y = cy + e.y0 - 1;
    return x >= 0 && y >= 0 && x < mask.width() && y < mask.height() && mask.at(x, y);
  };

  std::vector<std::int64_t> g(static_cast<std::size_t>(cw) * ch);
  for (int cx = 0; cx < cw; ++cx) {
    g[cx] = 0;
    for (int cy = 1; cy < ch; ++cy) {
      g[cy * cw + cx] = inside(cx, cy) ? g[(cy - 1) * cw + cx] + 1 : 0;
    }
    for (int cy = ch - 2; cy >= 0; --cy) {
      auto& cur = g[cy * cw + cx];
      const auto below = g[(cy + 1) * cw + cx];
      if (below < cur) cur = below + 1;
    }
  }

  std::vector<std::int64_t> squared(mask.size(), 0);
  std::vector<std::int64_t> line(cw), out(cw);
  std::vector<int> s(cw), t(cw);
  for (int cy = 1; cy < ch - 1; ++cy) {
    std::copy_n(g.begin() + static_cast<std::ptrdiff_t>(cy) * cw, cw, line.begin());
    lower_envelope_pass(line, out, s, t);
    const int y = cy + e.y0 - 1;
    for (int cx = 1; cx < cw - 1; ++cx) {
      const int x = cx + e.x0 - 1;
      squared[static_cast<std::size_t>(y) * mask.width() + x] = out[cx];
    }
  }
  return DistanceField(mask.width(), mask.height(), std::move(squared));
}

std::pair<Point, Point> inscribed_circle_centers(const BinaryMask& mask) {
  const DistanceField dt = distance_transform(mask);
  int bx = -1, by = -1;
  std::int64_t best = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (dt.squared_at(x, y) > best) {
        best = dt.squared_at(x, y);
        bx = x;
        by = y;
      }
    }
  }
  const std::int64_t r1_sq = best;
  int sx = bx, sy = by;
  std::int64_t second = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const std::int64_t dx = x - bx;
      const std::int64_t dy = y - by;
      if (dx * dx + dy * dy < r1_sq) continue;
      if (dt.squared_at(x, y) > second) {
        second = dt.squared_at(x, y);
        sx = x;
        sy = y;
      }
    }
  }
  return {Point{static_cast<double>(bx), static_cast<double>(by)},
          Point{static_cast<double>(sx), static_cast<double>(sy)}};
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  const std::size_t uni = a.union_count(b);
  if (uni == 0) return 1.0;
  return static_cast<double>(a.intersection_count(b)) / static_cast<double>(uni);
}

}  // namespace segzero::geometry
