#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace maskpath {

/// Objective callback: returns f(x) and writes ∇f(x) into `gradient` (same length as x).
using Objective = std::function<double(std::span<const double> x, std::span<double> gradient)>;

struct LbfgsConfig {
  std::size_t memory = 10;
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-6;  // on ‖∇f‖∞
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  std::size_t max_line_search_steps = 25;
};

/// Throws ValidationError unless 0 < c1 < c2 < 1, memory ≥ 1, and the counts are positive.
void validate(const LbfgsConfig& config);

enum class OptimizeStatus { kConverged, kMaxIterations, kLineSearchFailure };
std::string to_string(OptimizeStatus status);

struct OptimizeReport {
  OptimizeStatus status = OptimizeStatus::kMaxIterations;
  double final_value = 0.0;
  double final_gradient_norm = 0.0;  // max-norm
  std::size_t iterations = 0;
  std::size_t line_search_failures = 0;
  std::size_t steepest_descent_fallbacks = 0;
  std::size_t skipped_curvature_pairs = 0;
  std::size_t evaluations = 0;
  std::vector<double> value_trace;  // f at x0, then after every accepted step
};

struct OptimizeResult {
  std::vector<double> x;
  OptimizeReport report;
};

/// Limited-memory BFGS with a strong-Wolfe bracket-and-zoom line search.
///
/// The search direction comes from the two-loop recursion over the last
/// `memory` curvature pairs, with the initial Hessian scaled by ⟨s,y⟩/⟨y,y⟩.
/// Pairs with ⟨s,y⟩ ≤ 1e-10·‖s‖‖y‖ are skipped. A direction that is not a
/// descent direction is replaced by −∇f. When the line search fails the
/// history is dropped and a steepest-descent step is tried; a second
/// consecutive failure ends the run with kLineSearchFailure.
///
/// Throws ValidationError if f(x0) or ∇f(x0) is not finite.
OptimizeResult minimize(const Objective& objective, std::vector<double> x0, const LbfgsConfig& config = {});

// ---------------------------------------------------------------------------

struct GradientCheckEntry {
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
  bool finite = true;
};

struct GradientCheckReport {
  std::vector<GradientCheckEntry> entries;
  double max_relative_error = 0.0;
  std::vector<std::size_t> failing;     // relative_error > tolerance or non-finite probe
  std::vector<std::size_t> non_finite;  // coordinates whose probes were not finite
  bool passed() const noexcept { return failing.empty(); }
};

/// Coordinate-wise central differences against the analytic gradient.
/// Relative error = |a − n| / max(1e-8, |a| + |n|). Never throws on non-finite probes.
GradientCheckReport check_gradient(const Objective& objective, std::span<const double> x, double step,
                                   double tolerance);

}  // namespace maskpath
