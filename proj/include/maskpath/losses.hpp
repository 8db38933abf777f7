#pragma once

#include <cstddef>
#include <vector>

#include "maskpath/generator.hpp"
#include "maskpath/image.hpp"
#include "maskpath/latent_path.hpp"

namespace maskpath {

struct MaskedLossParams {
  double offset = 0.25;  // target in-mask distance c
  bool invert = false;   // swap the roles of the rectangle and its complement
};

struct SpringParams {
  double rest_length = 0.5;                 // σ
  std::vector<std::size_t> orders{1, 2};    // spring orders k
};

struct ObjectiveWeights {
  double alpha = 1.0;   // summed masked losses
  double beta = 10.0;   // order-1 springs
  double gamma = 5.0;   // order-2 springs

  /// β for k = 1, γ for k = 2; other orders throw ParameterError.
  double spring_weight(std::size_t order) const;
};

void validate(const MaskedLossParams& params);
void validate(const SpringParams& params);
void validate(const ObjectiveWeights& weights);

/// The (changed, unchanged) pixel sets for a rectangle under `params.invert`.
struct MaskRoles {
  PixelSelection changed;
  PixelSelection preserved;
};
MaskRoles mask_roles(const MaskRegion& region, bool invert);

/// |D(x*, x)_changed − c| + D(x*, x)_preserved
double masked_loss(const ImageBuffer& x_star, const ImageBuffer& x, const MaskRegion& region,
                   const MaskedLossParams& params);

/// Gradient of masked_loss w.r.t. x: sign(D_changed − c)·∇D_changed + ∇D_preserved, sign(0) = 0.
ImageBuffer masked_loss_gradient(const ImageBuffer& x_star, const ImageBuffer& x, const MaskRegion& region,
                                 const MaskedLossParams& params);

/// Σ_{i<n−k} (‖z_i − z_{i+k}‖ − k·σ)². Requires 1 ≤ k < n.
double spring_loss(const LatentPath& path, std::size_t order, double rest_length);

/// n × w gradient of spring_loss, flattened vertex-major. Coincident pairs contribute zero.
std::vector<double> spring_loss_gradient(const LatentPath& path, std::size_t order, double rest_length);

struct ObjectiveOptions {
  /// Worker threads for per-vertex rendering; 0 picks the hardware concurrency.
  /// The reduction is always performed in vertex order, so results do not depend on this.
  std::size_t threads = 1;
};

struct ObjectiveEvaluation {
  double value = 0.0;
  std::vector<double> gradient;        // n·w, vertex-major
  double masked_sum = 0.0;             // Σ_i masked_loss, unweighted
  std::vector<double> spring_values;   // unweighted spring_loss per entry of SpringParams::orders
};

/// α·Σ_i L_X(x*, G(z_i)) + Σ_k weight(k)·spring_loss(Z, k, σ) and its gradient w.r.t. Z.
///
/// Spring orders whose weight is zero are skipped, so a single-vertex path with
/// β = γ = 0 is valid. Rejects masks covering the whole image.
ObjectiveEvaluation total_objective(const LatentPath& path, const Generator& gen, const ImageBuffer& x_star,
                                    const MaskRegion& region, const MaskedLossParams& mask_params,
                                    const SpringParams& spring_params, const ObjectiveWeights& weights,
                                    const ObjectiveOptions& options = {});

}  // namespace maskpath
