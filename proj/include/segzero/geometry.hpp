#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace segzero {

// Side length of the uniform coordinate frame shared by every module.
inline constexpr int kFrameSize = 840;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read or written.
struct IoError : Error {
  using Error::Error;
};

struct EmptyMask : Error {
  EmptyMask() : Error("mask has no foreground pixel") {}
};

struct DimensionMismatch : Error {
  DimensionMismatch(int w1, int h1, int w2, int h2)
      : Error("mask dimensions differ: " + std::to_string(w1) + "x" + std::to_string(h1) + " vs " +
              std::to_string(w2) + "x" + std::to_string(h2)) {}
};

}  // namespace segzero

namespace segzero::geometry {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Row-major boolean grid, bit-packed. Padding bits past width*height are kept zero.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return static_cast<std::size_t>(width_) * height_; }

  bool at(int x, int y) const {
    const std::size_t i = index(x, y);
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void set(int x, int y, bool value = true) {
    const std::size_t i = index(x, y);
    if (value) {
      words_[i >> 6] |= (std::uint64_t{1} << (i & 63));
    } else {
      words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
    }
  }

  std::size_t count() const;
  bool empty() const { return count() == 0; }

  BinaryMask operator~() const;
  std::size_t intersection_count(const BinaryMask& other) const;
  std::size_t union_count(const BinaryMask& other) const;

  const std::vector<std::uint64_t>& words() const { return words_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  void check_same_shape(const BinaryMask& other) const;

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Per-pixel Euclidean distances. Squared values are integers and kept exactly.
class DistanceField {
 public:
  DistanceField(int width, int height, std::vector<std::int64_t> squared);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int x, int y) const;
  std::int64_t squared_at(int x, int y) const {
    return squared_[static_cast<std::size_t>(y) * width_ + x];
  }

 private:
  int width_;
  int height_;
  std::vector<std::int64_t> squared_;
};

double bbox_iou(const BBox& a, const BBox& b);
double bbox_l1(const BBox& a, const BBox& b);
double point_l1(const Point& a, const Point& b);
bool point_in_bbox(const Point& p, const BBox& b);

/// Exact Euclidean distance from each foreground pixel to the nearest pixel outside the mask.
/// Pixels beyond the image border count as outside. Throws EmptyMask.
DistanceField distance_transform(const BinaryMask& mask);

/// Centers of the two largest non-overlapping inscribed circles. The second center is the
/// distance-transform argmax among pixels at least r1 away from the first; ties go to the
/// smallest row, then smallest column. Falls back to (p1, p1). Throws EmptyMask.
std::pair<Point, Point> inscribed_circle_centers(const BinaryMask& mask);

double mask_iou(const BinaryMask& a, const BinaryMask& b);

}  // namespace segzero::geometry
