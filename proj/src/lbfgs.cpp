#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

#include "maskpath/errors.hpp"
#include "maskpath/kernels.hpp"
#include "maskpath/optimizer.hpp"

namespace maskpath {

void validate(const LbfgsConfig& c) {
  if (c.memory < 1) throw ValidationError("optimizer.memory must be >= 1");
  if (c.max_iterations < 1) throw ValidationError("optimizer.max_iterations must be >= 1");
  if (c.max_line_search_steps < 1) throw ValidationError("optimizer.max_line_search_steps must be >= 1");
  if (!(c.gradient_tolerance >= 0.0)) throw ValidationError("optimizer.gradient_tolerance must be >= 0");
  if (!(c.wolfe_c1 > 0.0 && c.wolfe_c1 < c.wolfe_c2 && c.wolfe_c2 < 1.0)) {
    throw ValidationError("optimizer Wolfe constants need 0 < c1 < c2 < 1");
  }
}

std::string to_string(OptimizeStatus status) {
  switch (status) {
    case OptimizeStatus::kConverged: return "converged";
    case OptimizeStatus::kMaxIterations: return "max_iterations";
    case OptimizeStatus::kLineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// A probe along the search ray x0 + alpha·d.
struct Probe {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;  // ⟨∇f, d⟩
  bool finite = true;
  bool has_slope = true;
  std::vector<double> x;
  std::vector<double> g;
};

class StrongWolfeSearch {
 public:
  StrongWolfeSearch(const Objective& objective, std::span<const double> x0, std::span<const double> d,
                    const Probe& origin, const LbfgsConfig& config, std::size_t& evaluations)
      : objective_(objective), x0_(x0), d_(d), origin_(origin), config_(config), evaluations_(evaluations) {}

  std::optional<Probe> run(double initial_step) {
    Probe prev = origin_;
    double alpha = initial_step;
    double upper = std::numeric_limits<double>::infinity();  // first alpha known to give non-finite values
    bool first = true;
    while (steps_ < config_.max_line_search_steps) {
      Probe p = evaluate(alpha);
      if (!p.finite) {
        upper = alpha;
        alpha = prev.alpha + 0.5 * (alpha - prev.alpha);
        if (alpha - prev.alpha <= 1e-16 * std::max(1.0, prev.alpha)) return std::nullopt;
        continue;
      }
      if (p.f > armijo_bound(alpha) || (!first && p.f >= prev.f)) return zoom(std::move(prev), std::move(p));
      if (std::fabs(p.slope) <= -config_.wolfe_c2 * origin_.slope) return p;
      if (p.slope >= 0.0) return zoom(std::move(p), std::move(prev));
      prev = std::move(p);
      alpha = std::isfinite(upper) ? 0.5 * (prev.alpha + upper) : 2.0 * prev.alpha;
      first = false;
    }
    return std::nullopt;
  }

 private:
  double armijo_bound(double alpha) const { return origin_.f + config_.wolfe_c1 * alpha * origin_.slope; }

  Probe evaluate(double alpha) {
    ++steps_;
    ++evaluations_;
    Probe p;
    p.alpha = alpha;
    p.x.assign(x0_.begin(), x0_.end());
    kernels::axpy(alpha, d_, p.x);
    p.g.assign(p.x.size(), 0.0);
    p.f = objective_(p.x, p.g);
    p.finite = std::isfinite(p.f) && all_finite(p.g);
    if (p.finite) p.slope = kernels::dot(p.g, d_);
    return p;
  }

  // Minimizer of the cubic matching values and slopes at both ends, safeguarded
  // to the interior of the bracket; bisection when the cubic is unusable.
  static double interpolate(const Probe& lo, const Probe& hi) {
    const double a = lo.alpha;
    const double b = hi.alpha;
    const double left = std::min(a, b);
    const double width = std::fabs(b - a);
    const double mid = 0.5 * (a + b);
    if (!hi.has_slope || !lo.has_slope) return mid;
    const double d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (a - b);
    const double disc = d1 * d1 - lo.slope * hi.slope;
    if (!(disc >= 0.0)) return mid;
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = hi.slope - lo.slope + 2.0 * d2;
    if (denom == 0.0) return mid;
    const double t = b - (b - a) * (hi.slope + d2 - d1) / denom;
    if (!std::isfinite(t) || t < left + 0.1 * width || t > left + 0.9 * width) return mid;
    return t;
  }

  // lo: lowest Armijo-satisfying probe so far. hi: the other bracket end.
  std::optional<Probe> zoom(Probe lo, Probe hi) {
    while (steps_ < config_.max_line_search_steps) {
      if (std::fabs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, lo.alpha)) return std::nullopt;
      const double alpha = interpolate(lo, hi);
      Probe p = evaluate(alpha);
      if (!p.finite) {
        p.f = std::numeric_limits<double>::infinity();
        p.has_slope = false;
        hi = std::move(p);
        continue;
      }
      if (p.f > armijo_bound(alpha) || p.f >= lo.f) {
        hi = std::move(p);
        continue;
      }
      if (std::fabs(p.slope) <= -config_.wolfe_c2 * origin_.slope) return p;
      if (p.slope * (hi.alpha - lo.alpha) >= 0.0) hi = std::move(lo);
      lo = std::move(p);
    }
    return std::nullopt;
  }

  const Objective& objective_;
  std::span<const double> x0_;
  std::span<const double> d_;
  const Probe& origin_;
  const LbfgsConfig& config_;
  std::size_t& evaluations_;
  std::size_t steps_ = 0;
};

struct CurvaturePair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;  // 1 / ⟨s,y⟩
};

// Two-loop recursion: returns −H·g.
std::vector<double> two_loop_direction(const std::deque<CurvaturePair>& history, std::span<const double> g) {
  std::vector<double> q(g.begin(), g.end());
  std::vector<double> alphas(history.size());
  for (std::size_t k = history.size(); k-- > 0;) {
    const CurvaturePair& p = history[k];
    alphas[k] = p.rho * kernels::dot(p.s, q);
    kernels::axpy(-alphas[k], p.y, q);
  }
  if (!history.empty()) {
    const CurvaturePair& last = history.back();
    const double gamma = kernels::dot(last.s, last.y) / kernels::dot(last.y, last.y);
    kernels::scale(gamma, q);
  }
  for (std::size_t k = 0; k < history.size(); ++k) {
    const CurvaturePair& p = history[k];
    const double beta = p.rho * kernels::dot(p.y, q);
    kernels::axpy(alphas[k] - beta, p.s, q);
  }
  kernels::scale(-1.0, q);
  return q;
}

}  // namespace

OptimizeResult minimize(const Objective& objective, std::vector<double> x0, const LbfgsConfig& config) {
  validate(config);
  OptimizeReport report;

  Probe current;
  current.x = std::move(x0);
  current.g.assign(current.x.size(), 0.0);
  current.f = objective(current.x, current.g);
  ++report.evaluations;
  if (!std::isfinite(current.f) || !all_finite(current.g)) {
    throw ValidationError("objective is not finite at the starting point");
  }
  report.value_trace.push_back(current.f);

  std::deque<CurvaturePair> history;
  report.status = OptimizeStatus::kMaxIterations;

  while (true) {
    if (kernels::max_abs(current.g) <= config.gradient_tolerance) {
      report.status = OptimizeStatus::kConverged;
      break;
    }
    if (report.iterations >= config.max_iterations) break;

    std::vector<double> d = two_loop_direction(history, current.g);
    double slope = kernels::dot(d, current.g);
    if (!(slope < 0.0) || !all_finite(d)) {
      d.assign(current.g.begin(), current.g.end());
      kernels::scale(-1.0, d);
      slope = kernels::dot(d, current.g);
      ++report.steepest_descent_fallbacks;
    }
    current.alpha = 0.0;
    current.slope = slope;

    std::optional<Probe> next =
        StrongWolfeSearch(objective, current.x, d, current, config, report.evaluations).run(1.0);
    if (!next) {
      ++report.line_search_failures;
      // Restart from steepest descent with a unit-length first trial.
      history.clear();
      d.assign(current.g.begin(), current.g.end());
      kernels::scale(-1.0, d);
      current.slope = kernels::dot(d, current.g);
      const double norm = std::sqrt(-current.slope);
      next = StrongWolfeSearch(objective, current.x, d, current, config, report.evaluations)
                 .run(std::min(1.0, 1.0 / norm));
      if (!next) {
        ++report.line_search_failures;
        report.status = OptimizeStatus::kLineSearchFailure;
        break;
      }
      ++report.steepest_descent_fallbacks;
    }

    CurvaturePair pair;
    pair.s = next->x;
    kernels::axpy(-1.0, current.x, pair.s);
    pair.y = next->g;
    kernels::axpy(-1.0, current.g, pair.y);
    const double sy = kernels::dot(pair.s, pair.y);
    const double s_norm = std::sqrt(kernels::dot(pair.s, pair.s));
    const double y_norm = std::sqrt(kernels::dot(pair.y, pair.y));
    if (sy > 1e-10 * s_norm * y_norm) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (history.size() > config.memory) history.pop_front();
    } else {
      ++report.skipped_curvature_pairs;
    }

    current = std::move(*next);
    ++report.iterations;
    report.value_trace.push_back(current.f);
  }

  report.final_value = current.f;
  report.final_gradient_norm = kernels::max_abs(current.g);
  return {std::move(current.x), std::move(report)};
}

}  // namespace maskpath
