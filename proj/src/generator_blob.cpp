#include <algorithm>
#include <cmath>
#include <string>

#include "maskpath/errors.hpp"
#include "maskpath/generator.hpp"
#include "maskpath/rng.hpp"

namespace maskpath {

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kBlobFace: return "blob-face";
    case GeneratorKind::kLinear: return "linear";
    case GeneratorKind::kExternal: return "external";
  }
  return "unknown";
}

GeneratorKind parse_generator_kind(const std::string& name) {
  if (name == "blob-face") return GeneratorKind::kBlobFace;
  if (name == "linear") return GeneratorKind::kLinear;
  if (name == "external") return GeneratorKind::kExternal;
  throw ValidationError("unknown generator kind '" + name + "' (expected blob-face, linear or external)");
}

Generator::Generator(GeneratorKind kind, std::size_t latent_dim, std::size_t width, std::size_t height)
    : kind_(kind), latent_dim_(latent_dim), width_(width), height_(height) {
  if (latent_dim == 0) throw ValidationError("latent dimension must be positive");
  if (width == 0 || height == 0) throw ValidationError("output size must be positive");
}

void Generator::check_latent(std::span<const double> z) const {
  if (z.size() != latent_dim_) {
    throw DimensionError("latent has " + std::to_string(z.size()) + " entries, generator expects " +
                         std::to_string(latent_dim_));
  }
  for (double v : z) {
    if (!std::isfinite(v)) throw ValidationError("latent contains a non-finite entry");
  }
}

void Generator::check_upstream(const ImageBuffer& upstream) const {
  if (upstream.width() != width_ || upstream.height() != height_) {
    throw DimensionError("upstream gradient is " + std::to_string(upstream.width()) + "x" +
                         std::to_string(upstream.height()) + ", generator renders " + std::to_string(width_) +
                         "x" + std::to_string(height_));
  }
}

std::vector<ImageBuffer> Generator::render_batch(std::span<const std::vector<double>> latents) const {
  std::vector<ImageBuffer> out;
  out.reserve(latents.size());
  for (const auto& z : latents) out.push_back(generate(z));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct BlobTemplate {
  BlobRole role;
  std::array<double, 4> mid;
  std::array<double, 4> half;
};

// Nominal layout: parameters swing by `half` around `mid`.
// Ranges stay inside centers [0.05,0.95], radii [0.02,0.3], intensities [-1,1].
constexpr std::array<BlobTemplate, kBlobCount> kTemplates{{
    {BlobRole::kHead, {0.50, 0.52, 0.279, 0.73}, {0.03, 0.03, 0.02, 0.07}},
    {BlobRole::kLeftEye, {0.36, 0.40, 0.055, -0.37}, {0.03, 0.03, 0.02, 0.23}},
    {BlobRole::kRightEye, {0.64, 0.40, 0.055, -0.37}, {0.03, 0.03, 0.02, 0.23}},
    {BlobRole::kNose, {0.50, 0.56, 0.045, -0.13}, {0.03, 0.03, 0.015, 0.13}},
    {BlobRole::kMouth, {0.50, 0.74, 0.12, 0.00}, {0.03, 0.03, 0.03, 1.00}},
}};

// Block sizes are dealt round-robin in this order, so for w = 16 the mouth,
// nose and eyes get three coordinates each and the head two.
constexpr std::array<BlobRole, kBlobCount> kDealOrder{BlobRole::kMouth, BlobRole::kNose, BlobRole::kLeftEye,
                                                      BlobRole::kRightEye, BlobRole::kHead};

constexpr double kSharedGain = 0.35;
constexpr double kBiasScale = 0.3;

inline double window_profile(double t) noexcept {
  const double s = 1.0 - t / 9.0;
  return std::exp(-0.5 * t) * s * s * s;
}

// d/dt of window_profile
inline double window_slope(double t) noexcept {
  const double s = 1.0 - t / 9.0;
  return -std::exp(-0.5 * t) * s * s * (0.5 * s + 1.0 / 3.0);
}

inline double logistic(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

struct PixelBox {
  std::size_t x0, x1, y0, y1;  // half-open
};

PixelBox support_box(const BlobParams& b, std::size_t width, std::size_t height) {
  const double reach = BlobFaceGenerator::kSupportRadii * b.radius;
  auto lo = [](double c, std::size_t n) {
    const double v = std::floor(c * static_cast<double>(n) - 0.5);
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n)));
  };
  auto hi = [](double c, std::size_t n) {
    const double v = std::ceil(c * static_cast<double>(n) - 0.5) + 1.0;
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n)));
  };
  return {lo(b.center_x - reach, width), hi(b.center_x + reach, width), lo(b.center_y - reach, height),
          hi(b.center_y + reach, height)};
}

}  // namespace

BlobFaceGenerator::BlobFaceGenerator(const BlobFaceOptions& options)
    : Generator(GeneratorKind::kBlobFace, options.latent_dim, options.width, options.height), options_(options) {
  const std::size_t w = options.latent_dim;
  if (w < kBlobCount + 1) {
    throw ValidationError("blob-face generator needs latent_dim >= " + std::to_string(kBlobCount + 1));
  }
  shared_size_ = w >= 12 ? 2 : 1;

  std::array<std::size_t, kBlobCount> sizes{};
  for (std::size_t i = 0; i < w - shared_size_; ++i) {
    sizes[static_cast<std::size_t>(kDealOrder[i % kBlobCount])] += 1;
  }

  Rng rng(options.seed);
  std::size_t offset = shared_size_;
  for (std::size_t j = 0; j < kBlobCount; ++j) {
    BlobSpec& s = specs_[j];
    s.role = kTemplates[j].role;
    s.mid = kTemplates[j].mid;
    s.half = kTemplates[j].half;
    s.block_offset = offset;
    s.block_size = sizes[j];
    offset += sizes[j];
    const std::size_t cols = s.block_size + shared_size_;
    s.weights.resize(4 * cols);
    const double block_scale = 1.0 / std::sqrt(static_cast<double>(s.block_size));
    const double shared_scale = kSharedGain / std::sqrt(static_cast<double>(shared_size_));
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t c = 0; c < cols; ++c) {
        s.weights[k * cols + c] = rng.normal() * (c < s.block_size ? block_scale : shared_scale);
      }
      s.bias[k] = kBiasScale * rng.normal();
    }
  }
}

std::vector<std::size_t> BlobFaceGenerator::block_indices(BlobRole role) const {
  const BlobSpec& s = spec(role);
  std::vector<std::size_t> idx(s.block_size);
  for (std::size_t i = 0; i < s.block_size; ++i) idx[i] = s.block_offset + i;
  return idx;
}

namespace {

// Pre-activations of the four parameters of one blob.
std::array<double, 4> pre_activation(const BlobSpec& s, std::size_t shared, std::span<const double> z) {
  const std::size_t cols = s.block_size + shared;
  std::array<double, 4> pre{};
  for (std::size_t k = 0; k < 4; ++k) {
    double acc = s.bias[k];
    const double* row = s.weights.data() + k * cols;
    for (std::size_t c = 0; c < s.block_size; ++c) acc += row[c] * z[s.block_offset + c];
    for (std::size_t c = 0; c < shared; ++c) acc += row[s.block_size + c] * z[c];
    pre[k] = acc;
  }
  return pre;
}

}  // namespace

std::array<BlobParams, kBlobCount> BlobFaceGenerator::blob_params(std::span<const double> z) const {
  check_latent(z);
  std::array<BlobParams, kBlobCount> out;
  for (std::size_t j = 0; j < kBlobCount; ++j) {
    const BlobSpec& s = specs_[j];
    const auto pre = pre_activation(s, shared_size_, z);
    std::array<double, 4> p{};
    for (std::size_t k = 0; k < 4; ++k) p[k] = s.mid[k] + s.half[k] * std::tanh(pre[k]);
    out[j] = {p[0], p[1], p[2], p[3]};
  }
  return out;
}

void BlobFaceGenerator::accumulate_field(const std::array<BlobParams, kBlobCount>& params,
                                         std::vector<double>& field) const {
  const std::size_t W = output_width();
  const std::size_t H = output_height();
  field.assign(W * H, kBackground);
  for (const BlobParams& b : params) {
    const PixelBox box = support_box(b, W, H);
    const double inv_r2 = 1.0 / (b.radius * b.radius);
    for (std::size_t y = box.y0; y < box.y1; ++y) {
      const double dy = (static_cast<double>(y) + 0.5) / static_cast<double>(H) - b.center_y;
      for (std::size_t x = box.x0; x < box.x1; ++x) {
        const double dx = (static_cast<double>(x) + 0.5) / static_cast<double>(W) - b.center_x;
        const double t = (dx * dx + dy * dy) * inv_r2;
        if (t < 9.0) field[y * W + x] += b.intensity * window_profile(t);
      }
    }
  }
}

ImageBuffer BlobFaceGenerator::generate(std::span<const double> z) const {
  const auto params = blob_params(z);
  std::vector<double> field;
  accumulate_field(params, field);
  for (double& v : field) v = logistic(kSquashGain * (v - 0.5));
  return ImageBuffer(output_width(), output_height(), std::move(field));
}

std::vector<double> BlobFaceGenerator::vjp(std::span<const double> z, const ImageBuffer& upstream) const {
  check_upstream(upstream);
  const auto params = blob_params(z);
  const std::size_t W = output_width();
  const std::size_t H = output_height();

  // Gradient w.r.t. the pre-squash field.
  std::vector<double> field;
  accumulate_field(params, field);
  const auto up = upstream.pixels();
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double p = logistic(kSquashGain * (field[i] - 0.5));
    field[i] = up[i] * kSquashGain * p * (1.0 - p);
  }

  std::vector<double> grad(latent_dim(), 0.0);
  for (std::size_t j = 0; j < kBlobCount; ++j) {
    const BlobParams& b = params[j];
    const PixelBox box = support_box(b, W, H);
    const double inv_r2 = 1.0 / (b.radius * b.radius);
    double d_cx = 0.0, d_cy = 0.0, d_r = 0.0, d_i = 0.0;
    for (std::size_t y = box.y0; y < box.y1; ++y) {
      const double dy = (static_cast<double>(y) + 0.5) / static_cast<double>(H) - b.center_y;
      for (std::size_t x = box.x0; x < box.x1; ++x) {
        const double dx = (static_cast<double>(x) + 0.5) / static_cast<double>(W) - b.center_x;
        const double t = (dx * dx + dy * dy) * inv_r2;
        if (t >= 9.0) continue;
        const double a = field[y * W + x];
        const double slope = a * b.intensity * window_slope(t);
        d_i += a * window_profile(t);
        // ∂t/∂cx = −2·dx/r², ∂t/∂cy = −2·dy/r², ∂t/∂r = −2t/r
        d_cx += slope * (-2.0 * dx * inv_r2);
        d_cy += slope * (-2.0 * dy * inv_r2);
        d_r += slope * (-2.0 * t / b.radius);
      }
    }

    const BlobSpec& s = specs_[j];
    const auto pre = pre_activation(s, shared_size_, z);
    const std::array<double, 4> d_param{d_cx, d_cy, d_r, d_i};
    const std::size_t cols = s.block_size + shared_size_;
    for (std::size_t k = 0; k < 4; ++k) {
      const double th = std::tanh(pre[k]);
      const double d_pre = d_param[k] * s.half[k] * (1.0 - th * th);
      const double* row = s.weights.data() + k * cols;
      for (std::size_t c = 0; c < s.block_size; ++c) grad[s.block_offset + c] += row[c] * d_pre;
      for (std::size_t c = 0; c < shared_size_; ++c) grad[c] += row[s.block_size + c] * d_pre;
    }
  }
  return grad;
}

}  // namespace maskpath
