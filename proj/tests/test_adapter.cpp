#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "maskpath/errors.hpp"
#include "maskpath/generator.hpp"

using namespace maskpath;

namespace {

ExternalOptions adapter(const std::string& mode, std::size_t w, std::size_t h, std::size_t dim,
                        const std::string& log = "") {
  ExternalOptions o;
  o.command = {FAKE_ADAPTER_PATH, mode};
  if (!log.empty()) {
    o.command.push_back("--log");
    o.command.push_back(log);
  }
  o.width = w;
  o.height = h;
  o.latent_dim = dim;
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("echo adapter returns the same constant image for every latent") {
  ExternalGenerator gen(adapter("echo", 4, 3, 5));
  CHECK_FALSE(gen.supports_vjp());
  std::vector<std::vector<double>> batch{{1, 2, 3, 4, 5}, {0, 0, 0, 0, 0}, {-1, 1, -1, 1, -1}};
  const auto frames = external_render(gen, batch);
  REQUIRE(frames.size() == 3);
  CHECK(frames[0] == frames[1]);
  CHECK(frames[1] == frames[2]);
  CHECK(frames[0].at(3, 2) == 0.5);
  CHECK_THROWS_AS(gen.vjp(batch[0], frames[0]), UnsupportedGradientError);
}

TEST_CASE("identity adapter round-trips a known latent") {
  ExternalGenerator gen(adapter("identity", 2, 2, 4));
  const std::vector<double> z{0.0, 1.0, -2.0, 0.5};
  const ImageBuffer img = gen.generate(z);
  for (std::size_t i = 0; i < 4; ++i) {
    const double expected = static_cast<float>(1.0 / (1.0 + std::exp(-z[i])));
    CHECK(img.pixels()[i] == expected);
  }
  CHECK(img.at(1, 0) == static_cast<float>(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("empty batch sends nothing beyond the handshake") {
  const auto log = std::filesystem::temp_directory_path() / "maskpath_adapter_log.txt";
  std::filesystem::remove(log);
  {
    ExternalGenerator gen(adapter("echo", 2, 2, 3, log.string()));
    CHECK(external_render(gen, std::vector<std::vector<double>>{}).empty());
  }
  CHECK(slurp(log) == "hello\n");
  std::filesystem::remove(log);
}

TEST_CASE("protocol violations surface as adapter errors") {
  const std::vector<std::vector<double>> one{{0.1, 0.2, 0.3}};
  for (const char* mode : {"wrong-id", "wrong-count", "short", "garbage", "nan", "exit-after-hello"}) {
    CAPTURE(mode);
    ExternalGenerator gen(adapter(mode, 3, 2, 3));
    CHECK_THROWS_AS(gen.render_batch(one), AdapterError);
  }
  CHECK_THROWS_AS(ExternalGenerator(adapter("no-ready", 3, 2, 3)), AdapterError);
  ExternalOptions missing;
  missing.command = {"/nonexistent/maskpath-adapter"};
  CHECK_THROWS_AS(ExternalGenerator{missing}, AdapterError);
}

TEST_CASE("latent dimension mismatch is an adapter error") {
  ExternalGenerator gen(adapter("echo", 2, 2, 3));
  const std::vector<std::vector<double>> bad{{1.0, 2.0}};
  CHECK_THROWS_AS(gen.render_batch(bad), AdapterError);
}
