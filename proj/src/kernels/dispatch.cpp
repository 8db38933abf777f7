// Runtime ISA selection. No intrinsics in this file.

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string_view>

#include "maskpath/kernels.hpp"

namespace maskpath::kernels {

namespace {

Isa detect_best() noexcept {
#if defined(MASKPATH_HAVE_AVX2)
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::kAvx2;
#endif
#if defined(MASKPATH_HAVE_NEON)
  return Isa::kNeon;
#endif
  return Isa::kScalar;
}

// MASKPATH_ISA=scalar forces the reference kernels, e.g. for cross-checking a run.
Isa initial_isa() noexcept {
  const Isa best = detect_best();
  if (const char* env = std::getenv("MASKPATH_ISA")) {
    const std::string_view want{env};
    if (want == "scalar") return Isa::kScalar;
  }
  return best;
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar: return true;
    case Isa::kAvx2:
#if defined(MASKPATH_HAVE_AVX2)
      return detect_best() == Isa::kAvx2;
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(MASKPATH_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

bool set_isa(Isa isa) noexcept {
  if (!isa_available(isa)) return false;
  current().store(isa, std::memory_order_relaxed);
  return true;
}

#if defined(MASKPATH_HAVE_AVX2) && defined(MASKPATH_HAVE_NEON)
#error "at most one vector ISA is compiled per target"
#endif

#if defined(MASKPATH_HAVE_AVX2)
#define MASKPATH_VECTOR_NS avx2
#define MASKPATH_VECTOR_ISA Isa::kAvx2
#elif defined(MASKPATH_HAVE_NEON)
#define MASKPATH_VECTOR_NS neon
#define MASKPATH_VECTOR_ISA Isa::kNeon
#endif

#if defined(MASKPATH_VECTOR_NS)
#define MASKPATH_DISPATCH(fn, ...)                                                   \
  (active_isa() == MASKPATH_VECTOR_ISA ? MASKPATH_VECTOR_NS::fn(__VA_ARGS__) \
                                       : scalar::fn(__VA_ARGS__))
#else
#define MASKPATH_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

double sum_squared_diff(std::span<const double> a, std::span<const double> b) noexcept {
  assert(a.size() == b.size());
  return MASKPATH_DISPATCH(sum_squared_diff, a.data(), b.data(), a.size());
}

void scaled_diff(std::span<const double> a, std::span<const double> b, double scale,
                 std::span<double> out) noexcept {
  assert(a.size() == b.size() && a.size() == out.size());
  MASKPATH_DISPATCH(scaled_diff, a.data(), b.data(), scale, out.data(), a.size());
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  assert(a.size() == b.size());
  return MASKPATH_DISPATCH(dot, a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  assert(x.size() == y.size());
  MASKPATH_DISPATCH(axpy, alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> x) noexcept {
  MASKPATH_DISPATCH(scale, alpha, x.data(), x.size());
}

double max_abs(std::span<const double> x) noexcept {
  return MASKPATH_DISPATCH(max_abs, x.data(), x.size());
}

}  // namespace maskpath::kernels
