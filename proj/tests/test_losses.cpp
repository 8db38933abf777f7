#include <doctest.h>

#include <cmath>

#include "maskpath/errors.hpp"
#include "maskpath/losses.hpp"
#include "maskpath/optimizer.hpp"
#include "maskpath/rng.hpp"

using namespace maskpath;

namespace {

ImageBuffer random_image(Rng& rng, std::size_t w, std::size_t h) {
  ImageBuffer img(w, h);
  for (double& p : img.pixels()) p = rng.uniform();
  return img;
}

LatentPath line_path(std::initializer_list<double> xs) {
  return LatentPath(xs.size(), 1, std::vector<double>(xs));
}

LatentPath random_path(Rng& rng, std::size_t n, std::size_t w) { return LatentPath(n, w, rng.normal_vector(n * w)); }

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::fabs(a[i] - b[i]) / std::max(1e-8, std::fabs(a[i]) + std::fabs(b[i])));
  }
  return worst;
}

}  // namespace

TEST_CASE("masked loss hand values") {
  const ImageBuffer zeros(2, 2, 0.0), halves(2, 2, 0.5);
  const MaskRegion left{0, 0, 1, 2};
  CHECK(masked_loss(zeros, zeros, left, {0.0, false}) == 0.0);
  CHECK(masked_loss(zeros, zeros, left, {0.25, false}) == 0.25);
  CHECK(masked_loss(zeros, halves, left, {0.25, false}) == doctest::Approx(0.25).epsilon(1e-15));
  // Inverting puts the offset on the complement: |0.25 − 0.25| + 0.25 again, by symmetry of this instance.
  CHECK(masked_loss(zeros, halves, left, {0.25, true}) == doctest::Approx(0.25).epsilon(1e-15));
  ImageBuffer right_only(2, 2, 0.0);
  right_only.at(1, 0) = right_only.at(1, 1) = 1.0;
  CHECK(masked_loss(zeros, right_only, left, {0.0, false}) == 1.0);
  CHECK(masked_loss(zeros, right_only, left, {0.0, true}) == 1.0);
  CHECK(masked_loss(zeros, right_only, left, {0.5, true}) == 0.5);
  CHECK_THROWS_AS(masked_loss(zeros, halves, left, {-0.1, false}), ValidationError);
}

TEST_CASE("masked loss gradient") {
  SUBCASE("coincident images give zero gradient") {
    Rng rng(31);
    const ImageBuffer x = random_image(rng, 8, 8);
    const ImageBuffer grad = masked_loss_gradient(x, x, {2, 2, 5, 6}, {0.25, false});
    for (double g : grad.pixels()) CHECK(g == 0.0);
  }
  SUBCASE("exact kink: in-mask contribution vanishes") {
    const ImageBuffer zeros(2, 2, 0.0), halves(2, 2, 0.5);
    const MaskRegion left{0, 0, 1, 2};
    const ImageBuffer g = masked_loss_gradient(zeros, halves, left, {0.25, false});
    CHECK(g.at(0, 0) == 0.0);
    CHECK(g.at(0, 1) == 0.0);
    CHECK(g.at(1, 0) == doctest::Approx(0.5));
    CHECK(g.at(1, 1) == doctest::Approx(0.5));
  }
  SUBCASE("finite differences away from the kink") {
    Rng rng(32);
    int checked = 0;
    while (checked < 20) {
      const ImageBuffer xs = random_image(rng, 8, 8);
      const ImageBuffer x0 = random_image(rng, 8, 8);
      const MaskRegion r{rng.next_u64() % 4, rng.next_u64() % 4, 4 + rng.next_u64() % 4, 4 + rng.next_u64() % 4};
      const MaskedLossParams p{rng.uniform(0.0, 0.3), checked % 2 == 1};
      if (std::fabs(masked_distance(xs, x0, mask_roles(r, p.invert).changed) - p.offset) < 1e-3) continue;
      ++checked;
      Objective f = [&](std::span<const double> px, std::span<double> g) {
        const ImageBuffer img(8, 8, std::vector<double>(px.begin(), px.end()));
        const ImageBuffer grad = masked_loss_gradient(xs, img, r, p);
        std::copy(grad.pixels().begin(), grad.pixels().end(), g.begin());
        return masked_loss(xs, img, r, p);
      };
      CHECK(check_gradient(f, x0.pixels(), 1e-5, 1e-5).passed());
    }
  }
}

TEST_CASE("spring loss hand values") {
  const LatentPath even = line_path({0, 1, 2});
  CHECK(spring_loss(even, 1, 1.0) == 0.0);
  CHECK(spring_loss(even, 2, 1.0) == 0.0);
  CHECK(spring_loss(line_path({0, 2, 3}), 1, 1.0) == 1.0);
  CHECK(spring_loss(line_path({0, 2, 3}), 2, 1.0) == 1.0);
  CHECK_THROWS_AS(spring_loss(even, 3, 1.0), ParameterError);
  CHECK_THROWS_AS(spring_loss(even, 0, 1.0), ParameterError);
}

TEST_CASE("spring loss gradient") {
  for (double g : spring_loss_gradient(line_path({0, 0.5, 1.0, 1.5}), 1, 0.5)) CHECK(g == 0.0);
  for (double g : spring_loss_gradient(line_path({0, 0.5, 1.0, 1.5}), 2, 0.5)) CHECK(g == 0.0);

  // Vertices 0 and 1 coincide; vertex 0 has no other order-1 partner.
  const LatentPath coincident(3, 2, {1, 1, 1, 1, 3, 1});
  const auto g = spring_loss_gradient(coincident, 1, 1.0);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);

  Rng rng(33);
  for (std::size_t k : {1u, 2u}) {
    for (int t = 0; t < 20; ++t) {
      const LatentPath p0 = random_path(rng, 5, 3);
      const double sigma = rng.uniform(0.1, 1.0);
      Objective f = [&](std::span<const double> x, std::span<double> gr) {
        const LatentPath p(5, 3, std::vector<double>(x.begin(), x.end()));
        const auto grad = spring_loss_gradient(p, k, sigma);
        std::copy(grad.begin(), grad.end(), gr.begin());
        return spring_loss(p, k, sigma);
      };
      CHECK(check_gradient(f, p0.flat(), 1e-5, 1e-6).passed());
    }
  }
}

TEST_CASE("total objective: perfect single-vertex fit") {
  const BlobFaceGenerator gen;
  Rng rng(34);
  const auto z = rng.normal_vector(16);
  const ImageBuffer xs = gen.generate(z);
  const LatentPath path(1, 16, z);
  const auto e = total_objective(path, gen, xs, {20, 39, 44, 57}, {0.0, false}, {0.5, {1, 2}}, {1.0, 0.0, 0.0});
  CHECK(e.value == 0.0);
  for (double g : e.gradient) CHECK(g == 0.0);
}

TEST_CASE("total objective with alpha = 0 decomposes into springs") {
  const LinearGenerator gen(LinearOptions{3, 6, 5, 4});
  Rng rng(35);
  const LatentPath path = random_path(rng, 5, 4);
  const ImageBuffer xs = gen.generate(rng.normal_vector(4));
  const ObjectiveWeights w{0.0, 3.0, 7.0};
  const auto e = total_objective(path, gen, xs, {1, 1, 3, 3}, {0.25, false}, {0.4, {1, 2}}, w);
  CHECK(e.value == doctest::Approx(3.0 * spring_loss(path, 1, 0.4) + 7.0 * spring_loss(path, 2, 0.4)));
  const auto g1 = spring_loss_gradient(path, 1, 0.4), g2 = spring_loss_gradient(path, 2, 0.4);
  for (std::size_t i = 0; i < e.gradient.size(); ++i) {
    CHECK(e.gradient[i] == doctest::Approx(3.0 * g1[i] + 7.0 * g2[i]).epsilon(1e-12));
  }
  CHECK(e.spring_values[0] == spring_loss(path, 1, 0.4));
}

TEST_CASE("total objective gradient on the linear generator") {
  const LinearGenerator gen(LinearOptions{5, 8, 8, 8});
  Rng rng(36);
  const MaskRegion region{2, 2, 6, 5};
  int checked = 0;
  while (checked < 10) {
    const ImageBuffer xs = gen.generate(rng.normal_vector(8));
    const LatentPath p0 = random_path(rng, 4, 8);
    MaskedLossParams mp{rng.uniform(0.0, 0.1), false};
    bool near_kink = false;
    for (std::size_t i = 0; i < 4; ++i) {
      near_kink |= std::fabs(masked_distance(xs, gen.generate(p0.vertex(i)), region) - mp.offset) < 1e-3;
    }
    if (near_kink) continue;
    ++checked;
    Objective f = [&](std::span<const double> x, std::span<double> g) {
      const auto e = total_objective(LatentPath(4, 8, std::vector<double>(x.begin(), x.end())), gen, xs, region, mp,
                                     {0.5, {1, 2}}, {});
      std::copy(e.gradient.begin(), e.gradient.end(), g.begin());
      return e.value;
    };
    CHECK(check_gradient(f, p0.flat(), 1e-5, 1e-4).passed());
  }
}

TEST_CASE("total objective threading does not change results") {
  const BlobFaceGenerator gen;
  Rng rng(37);
  const LatentPath path = random_path(rng, 7, 16);
  const ImageBuffer xs = gen.generate(rng.normal_vector(16));
  const auto a = total_objective(path, gen, xs, {20, 39, 44, 57}, {}, {}, {}, {1});
  const auto b = total_objective(path, gen, xs, {20, 39, 44, 57}, {}, {}, {}, {4});
  CHECK(a.value == b.value);
  CHECK(a.gradient == b.gradient);
  CHECK(max_rel(a.gradient, b.gradient) == 0.0);
}

TEST_CASE("total objective rejects bad inputs") {
  const BlobFaceGenerator gen;
  const ImageBuffer xs(64, 64, 0.2);
  const LatentPath path(3, 16);
  CHECK_THROWS_AS(total_objective(path, gen, xs, MaskRegion::full(64, 64), {}, {}, {}), ValidationError);
  CHECK_THROWS_AS(total_objective(LatentPath(3, 4), gen, xs, {0, 0, 4, 4}, {}, {}, {}), DimensionError);
  CHECK_THROWS_AS(total_objective(path, gen, ImageBuffer(8, 8), {0, 0, 4, 4}, {}, {}, {}), DimensionError);
  CHECK_THROWS_AS(total_objective(path, gen, xs, {0, 0, 4, 4}, {}, {}, {0, 0, 0}), ValidationError);
  CHECK_THROWS_AS(total_objective(path, gen, xs, {0, 0, 4, 4}, {}, {0.5, {3}}, {}), ParameterError);
  CHECK_THROWS_AS(total_objective(LatentPath(2, 16), gen, xs, {0, 0, 4, 4}, {}, {0.5, {1, 2}}, {}), ParameterError);
}
