#include <cmath>

#include "maskpath/generator.hpp"
#include "maskpath/kernels.hpp"
#include "maskpath/rng.hpp"

namespace maskpath {

LinearGenerator::LinearGenerator(const LinearOptions& options)
    : Generator(GeneratorKind::kLinear, options.latent_dim, options.width, options.height) {
  const std::size_t pixels = options.width * options.height;
  const std::size_t w = options.latent_dim;
  Rng rng(options.seed);
  matrix_.resize(pixels * w);
  const double s = 1.0 / std::sqrt(static_cast<double>(w));
  for (double& a : matrix_) a = s * rng.normal();
  bias_.resize(pixels);
  for (double& b : bias_) b = rng.uniform(-1.0, 1.0);
}

ImageBuffer LinearGenerator::generate(std::span<const double> z) const {
  check_latent(z);
  const std::size_t w = latent_dim();
  std::vector<double> px(bias_.size());
  for (std::size_t p = 0; p < px.size(); ++p) {
    const double raw = bias_[p] + kernels::dot(std::span<const double>(matrix_).subspan(p * w, w), z);
    px[p] = kOffset + kGain * raw;
  }
  return ImageBuffer(output_width(), output_height(), std::move(px));
}

std::vector<double> LinearGenerator::vjp(std::span<const double> z, const ImageBuffer& upstream) const {
  check_latent(z);
  check_upstream(upstream);
  const std::size_t w = latent_dim();
  std::vector<double> grad(w, 0.0);
  const auto up = upstream.pixels();
  for (std::size_t p = 0; p < up.size(); ++p) {
    if (up[p] == 0.0) continue;
    kernels::axpy(kGain * up[p], std::span<const double>(matrix_).subspan(p * w, w), grad);
  }
  return grad;
}

}  // namespace maskpath
