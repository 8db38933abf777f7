#include "maskpath/kernels.hpp"

#include <cmath>

namespace maskpath::kernels::scalar {

double sum_squared_diff(const double* a, const double* b, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void scaled_diff(const double* a, const double* b, double scale, double* out, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) out[i] = scale * (b[i] - a[i]);
}

double dot(const double* a, const double* b, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double max_abs(const double* x, std::size_t n) noexcept {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::fabs(x[i]);
    // NaN propagates so callers see a non-finite norm.
    if (v > m || std::isnan(v)) m = v;
  }
  return m;
}

}  // namespace maskpath::kernels::scalar
