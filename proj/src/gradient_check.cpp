#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "maskpath/optimizer.hpp"

namespace maskpath {

GradientCheckReport check_gradient(const Objective& objective, std::span<const double> x, double step,
                                   double tolerance) {
  GradientCheckReport report;
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> analytic(x.size(), 0.0);
  std::vector<double> scratch(x.size(), 0.0);
  const double f0 = objective(probe, analytic);
  const bool base_finite = std::isfinite(f0);

  report.entries.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    GradientCheckEntry e;
    e.index = i;
    e.analytic = analytic[i];
    probe[i] = x[i] + step;
    const double f_plus = objective(probe, scratch);
    probe[i] = x[i] - step;
    const double f_minus = objective(probe, scratch);
    probe[i] = x[i];
    e.numeric = (f_plus - f_minus) / (2.0 * step);
    e.finite = base_finite && std::isfinite(e.analytic) && std::isfinite(e.numeric);
    if (e.finite) {
      const double denom = std::max(1e-8, std::fabs(e.analytic) + std::fabs(e.numeric));
      e.relative_error = std::fabs(e.analytic - e.numeric) / denom;
      report.max_relative_error = std::max(report.max_relative_error, e.relative_error);
      if (e.relative_error > tolerance) report.failing.push_back(i);
    } else {
      e.relative_error = std::numeric_limits<double>::infinity();
      report.non_finite.push_back(i);
      report.failing.push_back(i);
    }
    report.entries.push_back(e);
  }
  if (!report.non_finite.empty()) report.max_relative_error = std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace maskpath
