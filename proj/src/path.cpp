#include "maskpath/path.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "maskpath/errors.hpp"
#include "maskpath/kernels.hpp"
#include "maskpath/losses.hpp"
#include "maskpath/rng.hpp"

namespace maskpath {

LatentPath::LatentPath(std::size_t n, std::size_t w, std::vector<double> data)
    : n_(n), w_(w), data_(std::move(data)) {
  if (data_.size() != n_ * w_) {
    throw DimensionError("latent path of " + std::to_string(n_) + " x " + std::to_string(w_) + " needs " +
                         std::to_string(n_ * w_) + " entries, got " + std::to_string(data_.size()));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw ValidationError("latent path contains a non-finite entry");
  }
}

std::vector<std::vector<double>> LatentPath::rows() const {
  std::vector<std::vector<double>> out;
  out.reserve(n_);
  for (std::size_t i = 0; i < n_; ++i) out.emplace_back(vertex(i).begin(), vertex(i).end());
  return out;
}

LatentPath initialize_path(const SeedSpec& seed, std::size_t n, double rest_length) {
  if (n < 2) throw ParameterError("a latent path needs at least 2 vertices");
  if (seed.z_star.empty()) throw DimensionError("seed vector is empty");
  if (!(seed.init_scale >= 0.0) || !std::isfinite(seed.init_scale)) {
    throw ValidationError("init_scale must be a finite value >= 0");
  }
  if (!(rest_length >= 0.0) || !std::isfinite(rest_length)) {
    throw ValidationError("rest length must be a finite value >= 0");
  }
  for (double v : seed.z_star) {
    if (!std::isfinite(v)) throw ValidationError("seed vector contains a non-finite entry");
  }

  const std::size_t w = seed.z_star.size();
  Rng rng(seed.rng_seed);
  const std::vector<double> u = rng.unit_vector(w);
  LatentPath path(n, w);
  const double center = 0.5 * static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double along = (static_cast<double>(i) - center) * rest_length;
    auto z = path.vertex(i);
    for (std::size_t c = 0; c < w; ++c) z[c] = seed.z_star[c] + along * u[c];
    if (seed.init_scale > 0.0) {
      for (std::size_t c = 0; c < w; ++c) z[c] += seed.init_scale * rng.normal();
    }
  }
  return path;
}

PathMetrics path_metrics(const LatentPath& path) {
  if (path.size() < 3) throw ParameterError("path metrics need at least 3 vertices");
  const std::size_t n = path.size();
  const std::size_t w = path.dim();
  PathMetrics m;

  std::vector<std::vector<double>> segments(n - 1, std::vector<double>(w));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto a = path.vertex(i);
    const auto b = path.vertex(i + 1);
    for (std::size_t c = 0; c < w; ++c) segments[i][c] = b[c] - a[c];
    m.gaps.push_back(std::sqrt(kernels::dot(segments[i], segments[i])));
  }

  double sum = 0.0;
  for (double g : m.gaps) sum += g;
  m.mean_gap = sum / static_cast<double>(m.gaps.size());
  double var = 0.0;
  for (double g : m.gaps) var += (g - m.mean_gap) * (g - m.mean_gap);
  var /= static_cast<double>(m.gaps.size());
  m.gap_cv = m.mean_gap > 0.0 ? std::sqrt(var) / m.mean_gap : 0.0;

  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    if (m.gaps[i] == 0.0 || m.gaps[i + 1] == 0.0) {
      m.angles.emplace_back(std::nullopt);
      continue;
    }
    const double cosine = kernels::dot(segments[i], segments[i + 1]) / (m.gaps[i] * m.gaps[i + 1]);
    m.angles.emplace_back(std::acos(std::clamp(cosine, -1.0, 1.0)));
  }
  return m;
}

LocalizationReport localization_report(const std::vector<ImageBuffer>& frames, const ImageBuffer& x_star,
                                       const MaskRegion& region, bool invert) {
  require_region(region, x_star.width(), x_star.height());
  const MaskRoles roles = mask_roles(region, invert);
  LocalizationReport r;
  for (const ImageBuffer& x : frames) {
    VertexLocalization v;
    v.in_mask = masked_distance(x_star, x, roles.changed);
    v.out_mask = masked_distance(x_star, x, roles.preserved);
    v.ratio = v.out_mask / std::max(v.in_mask, 1e-12);
    r.mean_in_mask += v.in_mask;
    r.mean_out_mask += v.out_mask;
    r.mean_ratio += v.ratio;
    r.vertices.push_back(v);
  }
  if (!frames.empty()) {
    const double n = static_cast<double>(frames.size());
    r.mean_in_mask /= n;
    r.mean_out_mask /= n;
    r.mean_ratio /= n;
  }
  return r;
}

LocalizationReport localization_report(const LatentPath& path, const Generator& gen, const ImageBuffer& x_star,
                                       const MaskRegion& region, bool invert) {
  if (path.dim() != gen.latent_dim()) throw DimensionError("path and generator latent dimensions differ");
  if (x_star.width() != gen.output_width() || x_star.height() != gen.output_height()) {
    throw DimensionError("reference image size does not match the generator output size");
  }
  return localization_report(gen.render_batch(path.rows()), x_star, region, invert);
}

}  // namespace maskpath
