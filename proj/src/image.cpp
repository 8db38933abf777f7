#include "maskpath/image.hpp"

#include <cmath>
#include <string>

#include "maskpath/errors.hpp"
#include "maskpath/kernels.hpp"

namespace maskpath {

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), pixels_(width * height, fill) {
  if (!std::isfinite(fill)) throw ValidationError("image fill value is not finite");
}

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width_ * height_) {
    throw DimensionError("image of " + std::to_string(width_) + "x" + std::to_string(height_) +
                         " needs " + std::to_string(width_ * height_) + " pixels, got " +
                         std::to_string(pixels_.size()));
  }
  for (double v : pixels_) {
    if (!std::isfinite(v)) throw ValidationError("image contains a non-finite pixel");
  }
}

void require_region(const MaskRegion& r, std::size_t width, std::size_t height) {
  if (!r.valid_for(width, height)) {
    throw DimensionError("region (" + std::to_string(r.x0) + "," + std::to_string(r.y0) + ")-(" +
                         std::to_string(r.x1) + "," + std::to_string(r.y1) + ") is invalid for a " +
                         std::to_string(width) + "x" + std::to_string(height) + " image");
  }
}

std::size_t PixelSelection::area(std::size_t width, std::size_t height) const noexcept {
  return complement_ ? width * height - region_.area() : region_.area();
}

void PixelSelection::for_each_span(std::size_t width, std::size_t height,
                                   const std::function<void(std::size_t, std::size_t)>& fn) const {
  const MaskRegion& r = region_;
  if (!complement_) {
    for (std::size_t y = r.y0; y < r.y1; ++y) fn(y * width + r.x0, r.x1 - r.x0);
    return;
  }
  // Rows above and below the rectangle are contiguous runs; rows through it split in two.
  if (r.y0 > 0) fn(0, r.y0 * width);
  for (std::size_t y = r.y0; y < r.y1; ++y) {
    if (r.x0 > 0) fn(y * width, r.x0);
    if (r.x1 < width) fn(y * width + r.x1, width - r.x1);
  }
  if (r.y1 < height) fn(r.y1 * width, (height - r.y1) * width);
}

std::vector<double> crop(const ImageBuffer& image, const MaskRegion& region) {
  require_region(region, image.width(), image.height());
  std::vector<double> out;
  out.reserve(region.area());
  for (std::size_t y = region.y0; y < region.y1; ++y) {
    auto row = image.row(y).subspan(region.x0, region.x1 - region.x0);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

PixelSelection complement(const MaskRegion& region, std::size_t width, std::size_t height) {
  require_region(region, width, height);
  return PixelSelection::complement_of(region);
}

namespace {

std::size_t checked_area(const ImageBuffer& a, const ImageBuffer& b, const PixelSelection& sel) {
  if (!a.same_shape(b)) {
    throw DimensionError("image shapes differ: " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()));
  }
  require_region(sel.rectangle(), a.width(), a.height());
  const std::size_t area = sel.area(a.width(), a.height());
  if (area == 0) throw DimensionError("pixel selection is empty");
  return area;
}

}  // namespace

double masked_distance(const ImageBuffer& a, const ImageBuffer& b, const PixelSelection& selection) {
  const std::size_t area = checked_area(a, b, selection);
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  double total = 0.0;
  selection.for_each_span(a.width(), a.height(), [&](std::size_t off, std::size_t len) {
    total += kernels::sum_squared_diff(pa.subspan(off, len), pb.subspan(off, len));
  });
  return total / static_cast<double>(area);
}

ImageBuffer masked_distance_gradient(const ImageBuffer& a, const ImageBuffer& b,
                                     const PixelSelection& selection) {
  const std::size_t area = checked_area(a, b, selection);
  ImageBuffer grad(a.width(), a.height(), 0.0);
  const double s = 2.0 / static_cast<double>(area);
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  auto pg = grad.pixels();
  selection.for_each_span(a.width(), a.height(), [&](std::size_t off, std::size_t len) {
    kernels::scaled_diff(pa.subspan(off, len), pb.subspan(off, len), s, pg.subspan(off, len));
  });
  return grad;
}

}  // namespace maskpath
