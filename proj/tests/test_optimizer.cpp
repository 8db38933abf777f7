#include <doctest.h>

#include <cmath>

#include "maskpath/errors.hpp"
#include "maskpath/optimizer.hpp"
#include "maskpath/rng.hpp"

using namespace maskpath;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
  const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
  g[0] = -2.0 * a - 400.0 * x[0] * b;
  g[1] = 200.0 * b;
  return a * a + 100.0 * b * b;
}

}  // namespace

TEST_CASE("shifted sphere converges in a handful of iterations") {
  const std::vector<double> x0{1.5, -2.0, 0.25, 4.0};
  Objective f = [&](std::span<const double> x, std::span<double> g) {
    double v = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      g[i] = 2.0 * (x[i] - x0[i]);
      v += (x[i] - x0[i]) * (x[i] - x0[i]);
    }
    return v;
  };
  LbfgsConfig cfg;
  cfg.gradient_tolerance = 1e-10;
  const auto r = minimize(f, {-3.0, 7.0, 0.0, 1.0}, cfg);
  CHECK(r.report.status == OptimizeStatus::kConverged);
  CHECK(r.report.iterations <= 5);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::fabs(r.x[i] - x0[i]) <= 1e-8);
}

TEST_CASE("Rosenbrock from the classic start") {
  LbfgsConfig cfg;
  cfg.gradient_tolerance = 1e-10;
  cfg.max_iterations = 200;
  const auto r = minimize(rosenbrock, {-1.2, 1.0}, cfg);
  CHECK(std::fabs(r.x[0] - 1.0) <= 1e-6);
  CHECK(std::fabs(r.x[1] - 1.0) <= 1e-6);
  CHECK(r.report.iterations <= 200);
  for (std::size_t i = 1; i < r.report.value_trace.size(); ++i) {
    CHECK(r.report.value_trace[i] < r.report.value_trace[i - 1]);
  }
}

TEST_CASE("optimizer is deterministic") {
  const auto a = minimize(rosenbrock, {-1.2, 1.0});
  const auto b = minimize(rosenbrock, {-1.2, 1.0});
  CHECK(a.x == b.x);
  CHECK(a.report.value_trace == b.report.value_trace);
}

TEST_CASE("configuration and start point are validated") {
  LbfgsConfig bad;
  bad.wolfe_c1 = 0.95;
  CHECK_THROWS_AS(minimize(rosenbrock, {0.0, 0.0}, bad), ValidationError);
  bad = {};
  bad.memory = 0;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  Objective nan_start = [](std::span<const double>, std::span<double> g) {
    g[0] = 0.0;
    return std::nan("");
  };
  CHECK_THROWS_AS(minimize(nan_start, {0.0}), ValidationError);
}

TEST_CASE("non-finite region is backed away from") {
  // f = x² − log(1 − x) on x < 1; the unbounded first step lands in the NaN region.
  Objective f = [](std::span<const double> x, std::span<double> g) {
    if (x[0] >= 1.0) {
      g[0] = std::nan("");
      return std::nan("");
    }
    g[0] = 2.0 * x[0] + 1.0 / (1.0 - x[0]);
    return x[0] * x[0] - std::log(1.0 - x[0]);
  };
  LbfgsConfig cfg;
  cfg.gradient_tolerance = 1e-9;
  const auto r = minimize(f, {-3.0}, cfg);
  CHECK(r.report.status == OptimizeStatus::kConverged);
  const double expected = (1.0 - std::sqrt(3.0)) / 2.0;  // root of 2x² − 2x − 1 on x < 1
  CHECK(r.x[0] == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("a direction that cannot descend is reported as a line-search failure") {
  // Gradient points the wrong way, so no step can satisfy sufficient decrease.
  Objective liar = [](std::span<const double> x, std::span<double> g) {
    g[0] = -2.0 * x[0];
    return x[0] * x[0];
  };
  const auto r = minimize(liar, {1.0});
  CHECK(r.report.status == OptimizeStatus::kLineSearchFailure);
  CHECK(r.report.line_search_failures >= 1);
  CHECK(r.x[0] == 1.0);
}

TEST_CASE("gradient checker") {
  SUBCASE("linear objective is exact to rounding") {
    const std::vector<double> b{0.5, -2.0, 3.25};
    Objective f = [&](std::span<const double> x, std::span<double> g) {
      std::copy(b.begin(), b.end(), g.begin());
      return b[0] * x[0] + b[1] * x[1] + b[2] * x[2];
    };
    CHECK(check_gradient(f, std::vector<double>{0.1, 0.2, 0.3}, 1e-5, 1e-10).max_relative_error <= 1e-10);
  }
  SUBCASE("cubic by hand") {
    Objective f = [](std::span<const double> x, std::span<double> g) {
      g[0] = 3 * x[0] * x[0];
      g[1] = 3 * x[1] * x[1];
      return x[0] * x[0] * x[0] + x[1] * x[1] * x[1];
    };
    const auto r = check_gradient(f, std::vector<double>{1.0, 2.0}, 1e-5, 1e-8);
    CHECK(r.entries[0].numeric == doctest::Approx(3.0));
    CHECK(r.entries[1].numeric == doctest::Approx(12.0));
    CHECK(r.passed());
  }
  SUBCASE("doubled gradient is flagged everywhere") {
    Objective f = [](std::span<const double> x, std::span<double> g) {
      g[0] = 4 * x[0];
      g[1] = 4 * x[1];
      return x[0] * x[0] + x[1] * x[1];
    };
    const auto r = check_gradient(f, std::vector<double>{1.0, -2.0}, 1e-5, 1e-4);
    CHECK(r.failing.size() == 2);
  }
  SUBCASE("non-finite probes are reported") {
    Objective f = [](std::span<const double> x, std::span<double> g) {
      g[0] = 1.0;
      return x[0] > 0.0 ? std::nan("") : x[0];
    };
    const auto r = check_gradient(f, std::vector<double>{0.0}, 1e-5, 1e-4);
    CHECK(r.non_finite.size() == 1);
    CHECK_FALSE(r.passed());
  }
}
