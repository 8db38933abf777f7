#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace maskpath {

/// Seeded stream with platform-independent outputs.
///
/// std::mt19937_64's output sequence is fixed by the standard, but the
/// standard distributions are not, so the conversions to uniform and normal
/// variates are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  std::vector<double> normal_vector(std::size_t n);

  /// Uniformly distributed unit vector (normalized Gaussian), n ≥ 1.
  std::vector<double> unit_vector(std::size_t n);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace maskpath
