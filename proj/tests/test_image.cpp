#include <doctest.h>

#include <cmath>
#include <limits>

#include "maskpath/errors.hpp"
#include "maskpath/image.hpp"
#include "maskpath/image_io.hpp"
#include "maskpath/rng.hpp"

using namespace maskpath;

namespace {

ImageBuffer random_image(Rng& rng, std::size_t w, std::size_t h) {
  ImageBuffer img(w, h);
  for (double& p : img.pixels()) p = rng.uniform();
  return img;
}

MaskRegion random_region(Rng& rng, std::size_t w, std::size_t h) {
  MaskRegion r;
  r.x0 = rng.next_u64() % w;
  r.x1 = r.x0 + 1 + rng.next_u64() % (w - r.x0);
  r.y0 = rng.next_u64() % h;
  r.y1 = r.y0 + 1 + rng.next_u64() % (h - r.y0);
  return r;
}

// Independent oracle: visit every pixel and test membership directly.
double brute_distance(const ImageBuffer& a, const ImageBuffer& b, const PixelSelection& sel) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t y = 0; y < a.height(); ++y) {
    for (std::size_t x = 0; x < a.width(); ++x) {
      if (!sel.contains(x, y)) continue;
      const double d = a.at(x, y) - b.at(x, y);
      sum += d * d;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace

TEST_CASE("image construction validates shape and values") {
  CHECK_THROWS_AS(ImageBuffer(2, 2, std::vector<double>(3, 0.0)), DimensionError);
  CHECK_THROWS_AS(ImageBuffer(1, 1, std::vector<double>{std::nan("")}), ValidationError);
  ImageBuffer img(3, 2, 0.5);
  CHECK(img.size() == 6);
  img.at(2, 1) = 0.75;
  CHECK(img.pixels()[5] == 0.75);
  CHECK(img.row(1)[2] == 0.75);
}

TEST_CASE("crop") {
  SUBCASE("full region is the identity") {
    Rng rng(1);
    const ImageBuffer img = random_image(rng, 4, 4);
    const auto c = crop(img, {0, 0, 4, 4});
    CHECK(std::equal(c.begin(), c.end(), img.pixels().begin()));
  }
  SUBCASE("column of a ramp") {
    ImageBuffer img(4, 4);
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x) img.at(x, y) = static_cast<double>(x) / 4.0;
    const auto c = crop(img, {1, 0, 2, 4});
    REQUIRE(c.size() == 4);
    for (double v : c) CHECK(v == 0.25);
  }
  SUBCASE("unit region") {
    ImageBuffer img(2, 2, std::vector<double>{0.1, 0.2, 0.3, 0.4});
    const auto c = crop(img, {0, 0, 1, 1});
    REQUIRE(c.size() == 1);
    CHECK(c[0] == 0.1);
  }
  SUBCASE("invalid regions are rejected") {
    ImageBuffer img(4, 4);
    CHECK_THROWS_AS(crop(img, {2, 0, 2, 4}), DimensionError);
    CHECK_THROWS_AS(crop(img, {0, 0, 5, 4}), DimensionError);
  }
}

TEST_CASE("masked distance values") {
  const ImageBuffer zeros(2, 2, 0.0);
  const ImageBuffer halves(2, 2, 0.5);
  CHECK(masked_distance(zeros, halves, MaskRegion::full(2, 2)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(masked_distance(halves, halves, MaskRegion{0, 0, 1, 2}) == 0.0);
  Rng rng(2);
  const ImageBuffer a = random_image(rng, 7, 5), b = random_image(rng, 7, 5);
  const MaskRegion r{1, 1, 4, 3};
  CHECK(masked_distance(a, b, r) == masked_distance(b, a, r));
  CHECK_THROWS_AS(masked_distance(a, ImageBuffer(5, 7), r), DimensionError);
  CHECK_THROWS_AS(masked_distance(a, b, complement(MaskRegion::full(7, 5), 7, 5)), DimensionError);
}

TEST_CASE("span enumeration matches per-pixel membership") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t w = 1 + rng.next_u64() % 12, h = 1 + rng.next_u64() % 12;
    const MaskRegion r = random_region(rng, w, h);
    for (const PixelSelection& sel : {PixelSelection(r), complement(r, w, h)}) {
      std::vector<int> seen(w * h, 0);
      sel.for_each_span(w, h, [&](std::size_t off, std::size_t len) {
        for (std::size_t i = off; i < off + len; ++i) ++seen[i];
      });
      std::size_t count = 0;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          CHECK(seen[y * w + x] == (sel.contains(x, y) ? 1 : 0));
          count += sel.contains(x, y);
        }
      CHECK(sel.area(w, h) == count);
      if (count > 0) {
        const ImageBuffer a = random_image(rng, w, h), b = random_image(rng, w, h);
        CHECK(masked_distance(a, b, sel) == doctest::Approx(brute_distance(a, b, sel)).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("complement sizes") {
  CHECK(complement({0, 0, 2, 4}, 4, 4).area(4, 4) == 8);
  CHECK(complement({0, 0, 2, 4}, 4, 4).contains(3, 0));
  CHECK_FALSE(complement({0, 0, 2, 4}, 4, 4).contains(1, 0));
  CHECK(complement({1, 1, 3, 3}, 4, 4).area(4, 4) == 12);
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const MaskRegion r = random_region(rng, 9, 6);
    CHECK(r.area() + complement(r, 9, 6).area(9, 6) == 54);
  }
}

TEST_CASE("masked distance gradient") {
  const ImageBuffer zeros(2, 2, 0.0), halves(2, 2, 0.5);
  const ImageBuffer g = masked_distance_gradient(zeros, halves, MaskRegion::full(2, 2));
  for (double v : g.pixels()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  const ImageBuffer g0 = masked_distance_gradient(halves, halves, MaskRegion{0, 0, 1, 1});
  for (double v : g0.pixels()) CHECK(v == 0.0);

  Rng rng(5);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const ImageBuffer a = random_image(rng, 8, 8);
    ImageBuffer b = random_image(rng, 8, 8);
    const MaskRegion r = random_region(rng, 8, 8);
    const PixelSelection sel = trial % 2 ? PixelSelection(r) : complement(r, 8, 8);
    if (sel.area(8, 8) == 0) continue;
    const ImageBuffer grad = masked_distance_gradient(a, b, sel);
    for (std::size_t i = 0; i < 64; ++i) {
      const double keep = b.pixels()[i];
      b.pixels()[i] = keep + h;
      const double fp = masked_distance(a, b, sel);
      b.pixels()[i] = keep - h;
      const double fm = masked_distance(a, b, sel);
      b.pixels()[i] = keep;
      const double num = (fp - fm) / (2 * h);
      const double ana = grad.pixels()[i];
      CHECK(std::fabs(ana - num) / std::max(1e-8, std::fabs(ana) + std::fabs(num)) <= 1e-6);
    }
  }
}

TEST_CASE("region additivity") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t w = 2 + rng.next_u64() % 10, h = 2 + rng.next_u64() % 10;
    const MaskRegion r = random_region(rng, w, h);
    if (r.covers(w, h)) continue;
    const ImageBuffer a = random_image(rng, w, h), b = random_image(rng, w, h);
    const double lhs = r.area() * masked_distance(a, b, r) +
                       complement(r, w, h).area(w, h) * masked_distance(a, b, complement(r, w, h));
    const double rhs = static_cast<double>(w * h) * masked_distance(a, b, MaskRegion::full(w, h));
    CHECK(std::fabs(lhs - rhs) <= 1e-12 * std::fabs(rhs));
  }
}

TEST_CASE("PGM encoding is exact and round-trips quantized values") {
  ImageBuffer img(3, 2, std::vector<double>{0.0, 1.0, 0.5, 2.0, -1.0, 0.25});
  const auto bytes = encode_pgm(img);
  const std::string header = "P5\n3 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 6);
  CHECK(std::string(bytes.begin(), bytes.begin() + header.size()) == header);
  const std::vector<std::uint8_t> body(bytes.begin() + header.size(), bytes.end());
  CHECK(body == std::vector<std::uint8_t>{0, 255, 128, 255, 0, 64});
  const ImageBuffer back = decode_pgm(bytes);
  CHECK(back.width() == 3);
  CHECK(back.at(2, 0) == 128.0 / 255.0);
  CHECK(encode_pgm(back) == bytes);
}

TEST_CASE("PGM decoding skips comments and rejects malformed input") {
  const std::string text = "P5\n# made by hand\n2 1\n255\n";
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  bytes.push_back(0);
  bytes.push_back(255);
  const ImageBuffer img = decode_pgm(bytes);
  CHECK(img.at(1, 0) == 1.0);
  bytes.pop_back();
  CHECK_THROWS_AS(decode_pgm(bytes), ValidationError);
  const std::string p2 = "P2\n1 1\n255\n0\n";
  CHECK_THROWS_AS(decode_pgm(std::vector<std::uint8_t>(p2.begin(), p2.end())), ValidationError);
}

TEST_CASE("PNG round trip equals PGM quantization") {
  Rng rng(7);
  const ImageBuffer img = random_image(rng, 17, 9);
  const ImageBuffer from_png = decode_png(encode_png(img));
  const ImageBuffer from_pgm = decode_pgm(encode_pgm(img));
  CHECK(from_png == from_pgm);
  CHECK(encode_png(img) == encode_png(img));
  CHECK_THROWS_AS(decode_png(std::vector<std::uint8_t>{1, 2, 3}), ValidationError);
}

TEST_CASE("quantization rounds half up and clamps") {
  CHECK(quantize_pixel(0.5) == 128);
  CHECK(quantize_pixel(-0.1) == 0);
  CHECK(quantize_pixel(1.7) == 255);
  CHECK(quantize_pixel(1.0 / 255.0) == 1);
}
