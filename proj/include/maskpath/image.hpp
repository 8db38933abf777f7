#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace maskpath {

/// Dense grayscale raster, row-major, unitless intensities.
///
/// Construction checks the size and that every pixel is finite. Built-in
/// generators produce values in [0,1]; the buffer itself does not clamp so
/// that affine (clamp-free) generators can be represented exactly.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(std::size_t width, std::size_t height, double fill = 0.0);
  ImageBuffer(std::size_t width, std::size_t height, std::vector<double> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  double at(std::size_t x, std::size_t y) const noexcept { return pixels_[y * width_ + x]; }
  double& at(std::size_t x, std::size_t y) noexcept { return pixels_[y * width_ + x]; }

  std::span<const double> pixels() const noexcept { return pixels_; }
  std::span<double> pixels() noexcept { return pixels_; }
  std::span<const double> row(std::size_t y) const noexcept {
    return std::span<const double>(pixels_).subspan(y * width_, width_);
  }

  bool same_shape(const ImageBuffer& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> pixels_;
};

/// Axis-aligned pixel rectangle, half-open: [x0, x1) × [y0, y1), origin top-left, y down.
struct MaskRegion {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t x1 = 0;
  std::size_t y1 = 0;

  std::size_t area() const noexcept { return (x1 - x0) * (y1 - y0); }
  bool contains(std::size_t x, std::size_t y) const noexcept {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  bool valid_for(std::size_t width, std::size_t height) const noexcept {
    return x0 < x1 && y0 < y1 && x1 <= width && y1 <= height;
  }
  bool covers(std::size_t width, std::size_t height) const noexcept {
    return x0 == 0 && y0 == 0 && x1 == width && y1 == height;
  }

  static MaskRegion full(std::size_t width, std::size_t height) noexcept { return {0, 0, width, height}; }

  friend bool operator==(const MaskRegion&, const MaskRegion&) = default;
};

/// Throws DimensionError unless `region` fits inside width × height.
void require_region(const MaskRegion& region, std::size_t width, std::size_t height);

/// A pixel set: either a rectangle or the complement of one. Enumerated as
/// contiguous row spans in row-major order.
class PixelSelection {
 public:
  PixelSelection(const MaskRegion& region) noexcept : region_(region) {}  // NOLINT: implicit by intent
  static PixelSelection complement_of(const MaskRegion& region) noexcept {
    PixelSelection s(region);
    s.complement_ = true;
    return s;
  }

  const MaskRegion& rectangle() const noexcept { return region_; }
  bool is_complement() const noexcept { return complement_; }
  PixelSelection inverted() const noexcept {
    PixelSelection s(region_);
    s.complement_ = !complement_;
    return s;
  }

  std::size_t area(std::size_t width, std::size_t height) const noexcept;
  bool contains(std::size_t x, std::size_t y) const noexcept { return region_.contains(x, y) != complement_; }

  /// Calls fn(offset, length) for each maximal row span, in increasing offset order.
  void for_each_span(std::size_t width, std::size_t height,
                     const std::function<void(std::size_t, std::size_t)>& fn) const;

 private:
  MaskRegion region_;
  bool complement_ = false;
};

/// Pixels of `image` inside `region`, row-major.
std::vector<double> crop(const ImageBuffer& image, const MaskRegion& region);

/// Membership predicate for the pixels outside `region`.
PixelSelection complement(const MaskRegion& region, std::size_t width, std::size_t height);

/// Mean squared pixel difference over `selection`.
double masked_distance(const ImageBuffer& a, const ImageBuffer& b, const PixelSelection& selection);

/// Gradient of masked_distance with respect to `b`: (2/area)(b − a) inside, 0 outside.
ImageBuffer masked_distance_gradient(const ImageBuffer& a, const ImageBuffer& b,
                                     const PixelSelection& selection);

}  // namespace maskpath
