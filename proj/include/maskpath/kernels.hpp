#pragma once

// Data-parallel arithmetic kernels behind the image distance and the optimizer.
//
// Every kernel has a portable scalar reference implementation. Vectorized
// variants (AVX2+FMA on x86-64, NEON on aarch64) are compiled when the
// toolchain supports them and selected once at runtime from the CPU's
// capabilities. Reductions in the vector variants use a different summation
// order than the scalar ones, so results agree to rounding, not bit-for-bit;
// for a fixed ISA every kernel is deterministic.

#include <cstddef>
#include <span>
#include <string_view>

namespace maskpath::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa) noexcept;

/// ISA currently used by the dispatching entry points.
Isa active_isa() noexcept;

/// True when `isa` was compiled in and the running CPU supports it.
bool isa_available(Isa isa) noexcept;

/// Force a specific ISA. Returns false (and changes nothing) if unavailable.
/// Intended for tests and benchmarking; not synchronized with concurrent kernel calls.
bool set_isa(Isa isa) noexcept;

/// RAII guard restoring the previous ISA on scope exit.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) noexcept : previous_(active_isa()), ok_(set_isa(isa)) {}
  ~ScopedIsa() { set_isa(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;
  bool ok() const noexcept { return ok_; }

 private:
  Isa previous_;
  bool ok_;
};

// Dispatching entry points. Spans passed together must have equal length.

/// Σ (a_i − b_i)²
double sum_squared_diff(std::span<const double> a, std::span<const double> b) noexcept;

/// out_i = scale · (b_i − a_i)
void scaled_diff(std::span<const double> a, std::span<const double> b, double scale,
                 std::span<double> out) noexcept;

/// Σ a_i b_i
double dot(std::span<const double> a, std::span<const double> b) noexcept;

/// y_i += alpha · x_i
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;

/// x_i *= alpha
void scale(double alpha, std::span<double> x) noexcept;

/// max_i |x_i|, 0 for an empty span
double max_abs(std::span<const double> x) noexcept;

// Per-ISA implementations, exposed for equivalence testing.
namespace scalar {
double sum_squared_diff(const double* a, const double* b, std::size_t n) noexcept;
void scaled_diff(const double* a, const double* b, double scale, double* out, std::size_t n) noexcept;
double dot(const double* a, const double* b, std::size_t n) noexcept;
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
void scale(double alpha, double* x, std::size_t n) noexcept;
double max_abs(const double* x, std::size_t n) noexcept;
}  // namespace scalar

#if defined(MASKPATH_HAVE_AVX2)
namespace avx2 {
double sum_squared_diff(const double* a, const double* b, std::size_t n) noexcept;
void scaled_diff(const double* a, const double* b, double scale, double* out, std::size_t n) noexcept;
double dot(const double* a, const double* b, std::size_t n) noexcept;
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
void scale(double alpha, double* x, std::size_t n) noexcept;
double max_abs(const double* x, std::size_t n) noexcept;
}  // namespace avx2
#endif

#if defined(MASKPATH_HAVE_NEON)
namespace neon {
double sum_squared_diff(const double* a, const double* b, std::size_t n) noexcept;
void scaled_diff(const double* a, const double* b, double scale, double* out, std::size_t n) noexcept;
double dot(const double* a, const double* b, std::size_t n) noexcept;
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
void scale(double alpha, double* x, std::size_t n) noexcept;
double max_abs(const double* x, std::size_t n) noexcept;
}  // namespace neon
#endif

}  // namespace maskpath::kernels
