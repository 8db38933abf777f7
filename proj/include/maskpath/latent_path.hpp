#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace maskpath {

/// Ordered n × w matrix of latent vectors, stored vertex-major (row-major).
/// The flat storage is exactly the optimizer's parameter vector.
class LatentPath {
 public:
  LatentPath() = default;
  LatentPath(std::size_t n, std::size_t w) : n_(n), w_(w), data_(n * w, 0.0) {}
  /// Throws DimensionError if data.size() != n·w, ValidationError on non-finite entries.
  LatentPath(std::size_t n, std::size_t w, std::vector<double> data);

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return w_; }

  std::span<const double> vertex(std::size_t i) const noexcept {
    return std::span<const double>(data_).subspan(i * w_, w_);
  }
  std::span<double> vertex(std::size_t i) noexcept { return std::span<double>(data_).subspan(i * w_, w_); }

  std::span<const double> flat() const noexcept { return data_; }
  std::span<double> flat() noexcept { return data_; }

  /// Vertices as separate vectors (for batch rendering).
  std::vector<std::vector<double>> rows() const;

  friend bool operator==(const LatentPath&, const LatentPath&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t w_ = 0;
  std::vector<double> data_;
};

}  // namespace maskpath
