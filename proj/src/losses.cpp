#include "maskpath/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "maskpath/errors.hpp"
#include "maskpath/kernels.hpp"

namespace maskpath {

double ObjectiveWeights::spring_weight(std::size_t order) const {
  if (order == 1) return beta;
  if (order == 2) return gamma;
  throw ParameterError("no objective weight for spring order " + std::to_string(order) +
                       " (only orders 1 and 2 are weighted, by beta and gamma)");
}

void validate(const MaskedLossParams& params) {
  if (!(params.offset >= 0.0) || !std::isfinite(params.offset)) {
    throw ValidationError("offset c must be a finite value >= 0");
  }
}

void validate(const SpringParams& params) {
  if (!(params.rest_length >= 0.0) || !std::isfinite(params.rest_length)) {
    throw ValidationError("rest length sigma must be a finite value >= 0");
  }
  if (params.orders.empty()) throw ValidationError("spring orders must not be empty");
  for (std::size_t k : params.orders) {
    if (k == 0) throw ValidationError("spring orders must be positive");
  }
}

void validate(const ObjectiveWeights& w) {
  for (double v : {w.alpha, w.beta, w.gamma}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("objective weights must be finite and >= 0");
  }
  if (w.alpha == 0.0 && w.beta == 0.0 && w.gamma == 0.0) {
    throw ValidationError("objective weights alpha, beta, gamma must not all be zero");
  }
}

MaskRoles mask_roles(const MaskRegion& region, bool invert) {
  const PixelSelection inside(region);
  const PixelSelection outside = PixelSelection::complement_of(region);
  return invert ? MaskRoles{outside, inside} : MaskRoles{inside, outside};
}

double masked_loss(const ImageBuffer& x_star, const ImageBuffer& x, const MaskRegion& region,
                   const MaskedLossParams& params) {
  validate(params);
  const MaskRoles roles = mask_roles(region, params.invert);
  const double changed = masked_distance(x_star, x, roles.changed);
  const double preserved = masked_distance(x_star, x, roles.preserved);
  return std::fabs(changed - params.offset) + preserved;
}

ImageBuffer masked_loss_gradient(const ImageBuffer& x_star, const ImageBuffer& x, const MaskRegion& region,
                                 const MaskedLossParams& params) {
  validate(params);
  const MaskRoles roles = mask_roles(region, params.invert);
  const double changed = masked_distance(x_star, x, roles.changed);
  ImageBuffer grad = masked_distance_gradient(x_star, x, roles.preserved);
  const double sign = changed > params.offset ? 1.0 : (changed < params.offset ? -1.0 : 0.0);
  if (sign != 0.0) {
    // The two selections are disjoint, so the changed-region gradient fills the zeros left above.
    const ImageBuffer inner = masked_distance_gradient(x_star, x, roles.changed);
    auto g = grad.pixels();
    const auto gi = inner.pixels();
    const std::size_t W = x.width();
    roles.changed.for_each_span(W, x.height(), [&](std::size_t off, std::size_t len) {
      for (std::size_t p = off; p < off + len; ++p) g[p] = sign * gi[p];
    });
  }
  return grad;
}

namespace {

void check_order(const LatentPath& path, std::size_t order) {
  if (order == 0 || order >= path.size()) {
    throw ParameterError("spring order " + std::to_string(order) + " needs 1 <= k < n, path has n = " +
                         std::to_string(path.size()));
  }
}

double pair_distance(const LatentPath& path, std::size_t i, std::size_t j) {
  return std::sqrt(kernels::sum_squared_diff(path.vertex(i), path.vertex(j)));
}

}  // namespace

double spring_loss(const LatentPath& path, std::size_t order, double rest_length) {
  check_order(path, order);
  const double rest = static_cast<double>(order) * rest_length;
  double total = 0.0;
  for (std::size_t i = 0; i + order < path.size(); ++i) {
    const double stretch = pair_distance(path, i, i + order) - rest;
    total += stretch * stretch;
  }
  return total;
}

std::vector<double> spring_loss_gradient(const LatentPath& path, std::size_t order, double rest_length) {
  check_order(path, order);
  const std::size_t w = path.dim();
  const double rest = static_cast<double>(order) * rest_length;
  std::vector<double> grad(path.size() * w, 0.0);
  std::vector<double> diff(w);
  for (std::size_t i = 0; i + order < path.size(); ++i) {
    const auto a = path.vertex(i);
    const auto b = path.vertex(i + order);
    for (std::size_t c = 0; c < w; ++c) diff[c] = a[c] - b[c];
    const double len = std::sqrt(kernels::dot(diff, diff));
    if (len == 0.0) continue;  // coincident pair: zero-gradient convention
    const double s = 2.0 * (len - rest) / len;
    kernels::axpy(s, diff, std::span<double>(grad).subspan(i * w, w));
    kernels::axpy(-s, diff, std::span<double>(grad).subspan((i + order) * w, w));
  }
  return grad;
}

namespace {

struct VertexTerm {
  double loss = 0.0;
  std::vector<double> grad;
};

template <typename Fn>
void for_each_index(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < count; i += threads) fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

ObjectiveEvaluation total_objective(const LatentPath& path, const Generator& gen, const ImageBuffer& x_star,
                                    const MaskRegion& region, const MaskedLossParams& mask_params,
                                    const SpringParams& spring_params, const ObjectiveWeights& weights,
                                    const ObjectiveOptions& options) {
  validate(mask_params);
  validate(spring_params);
  validate(weights);
  if (path.size() == 0) throw DimensionError("latent path is empty");
  if (path.dim() != gen.latent_dim()) {
    throw DimensionError("path latent dimension " + std::to_string(path.dim()) + " does not match generator's " +
                         std::to_string(gen.latent_dim()));
  }
  if (x_star.width() != gen.output_width() || x_star.height() != gen.output_height()) {
    throw DimensionError("reference image size does not match the generator output size");
  }
  require_region(region, x_star.width(), x_star.height());
  if (region.covers(x_star.width(), x_star.height())) {
    throw ValidationError("mask covers the whole image; its complement would be empty");
  }
  if (weights.alpha != 0.0 && !gen.supports_vjp()) {
    throw UnsupportedGradientError("objective gradient needs a generator with a vector-Jacobian product (got " +
                                   to_string(gen.kind()) + ")");
  }

  const std::size_t n = path.size();
  const std::size_t w = path.dim();
  ObjectiveEvaluation out;
  out.gradient.assign(n * w, 0.0);

  if (weights.alpha != 0.0) {
    std::vector<VertexTerm> terms(n);
    for_each_index(n, options.threads, [&](std::size_t i) {
      const ImageBuffer x = gen.generate(path.vertex(i));
      terms[i].loss = masked_loss(x_star, x, region, mask_params);
      terms[i].grad = gen.vjp(path.vertex(i), masked_loss_gradient(x_star, x, region, mask_params));
    });
    // Index-ordered reduction keeps the result independent of scheduling.
    for (std::size_t i = 0; i < n; ++i) {
      out.masked_sum += terms[i].loss;
      kernels::axpy(weights.alpha, terms[i].grad, std::span<double>(out.gradient).subspan(i * w, w));
    }
    out.value += weights.alpha * out.masked_sum;
  }

  out.spring_values.assign(spring_params.orders.size(), 0.0);
  for (std::size_t s = 0; s < spring_params.orders.size(); ++s) {
    const std::size_t k = spring_params.orders[s];
    const double weight = weights.spring_weight(k);
    if (weight == 0.0) continue;
    out.spring_values[s] = spring_loss(path, k, spring_params.rest_length);
    out.value += weight * out.spring_values[s];
    kernels::axpy(weight, spring_loss_gradient(path, k, spring_params.rest_length), out.gradient);
  }
  return out;
}

}  // namespace maskpath
