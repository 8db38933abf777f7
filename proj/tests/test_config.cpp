#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "maskpath/config.hpp"
#include "maskpath/errors.hpp"

using namespace maskpath;
using nlohmann::json;

namespace {

RunConfig parse_with(const json& user) { return parse_run_config(merge_with_defaults(user)); }

std::string error_of(const json& user) {
  try {
    parse_with(user);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults parse into the documented run") {
  const RunConfig c = parse_with(nullptr);
  CHECK(c.generator.kind == GeneratorKind::kBlobFace);
  CHECK(c.generator.latent_dim == 16);
  CHECK(c.mask == MaskRegion{20, 39, 44, 57});
  CHECK(c.mask_params.offset == 0.25);
  CHECK(c.springs.rest_length == 0.5);
  CHECK(c.weights.beta == 10.0);
  CHECK(c.vertices == 16);
  CHECK(c.init_scale == doctest::Approx(0.1 * c.springs.rest_length));
  CHECK_FALSE(c.z_star.has_value());
}

TEST_CASE("unknown keys and wrong types name the key") {
  CHECK(error_of({{"loss", {{"ofset", 0.3}}}}).find("loss.ofset") != std::string::npos);
  CHECK(error_of({{"extra", 1}}).find("'extra'") != std::string::npos);
  CHECK(error_of({{"mask", {{"invert", "yes"}}}}).find("mask.invert") != std::string::npos);
  CHECK(error_of({{"path", 3}}).find("path") != std::string::npos);
}

TEST_CASE("range checks") {
  CHECK(error_of({{"loss", {{"offset", -0.1}}}}).find("loss.offset") != std::string::npos);
  CHECK(error_of({{"loss", {{"alpha", 0}, {"beta", 0}, {"gamma", 0}}}}).find("must not all be zero") != std::string::npos);
  CHECK(error_of({{"mask", {{"x0", 0}, {"y0", 0}, {"x1", 64}, {"y1", 64}}}}).find("whole image") != std::string::npos);
  CHECK(error_of({{"mask", {{"x1", 65}}}}).find("mask") != std::string::npos);
  CHECK(error_of({{"optimizer", {{"wolfe_c1", 0.95}}}}).find("wolfe") != std::string::npos);
  CHECK(error_of({{"loss", {{"spring_orders", json::array({3})}}}}).find("spring_orders") != std::string::npos);
  CHECK(error_of({{"path", {{"vertices", 2}}}}).find("path.vertices") != std::string::npos);
  CHECK(error_of({{"path", {{"z_star", json::array({1.0, 2.0})}}}}).find("z_star") != std::string::npos);
  CHECK(error_of({{"generator", {{"kind", "external"}}}}).find("generator.command") != std::string::npos);
  CHECK(error_of({{"generator", {{"kind", "gan"}}}}).find("gan") != std::string::npos);
  CHECK(error_of({{"gradcheck", {{"step", 0}}}}).find("gradcheck.step") != std::string::npos);
}

TEST_CASE("springs-only two-vertex runs are accepted when order 2 is dropped or unweighted") {
  CHECK_NOTHROW(parse_with({{"path", {{"vertices", 2}}}, {"loss", {{"spring_orders", json::array({1})}}}}));
  CHECK_NOTHROW(parse_with({{"path", {{"vertices", 2}}}, {"loss", {{"gamma", 0}}}}));
}

TEST_CASE("overrides parse JSON values and obey strictness") {
  json doc = merge_with_defaults(nullptr);
  apply_override(doc, "loss.offset=0.35");
  apply_override(doc, "output.dir=runs/a");
  apply_override(doc, "generator.kind=\"linear\"");
  apply_override(doc, "path.z_star=[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,1]");
  const RunConfig c = parse_run_config(doc);
  CHECK(c.mask_params.offset == 0.35);
  CHECK(c.output_dir == "runs/a");
  CHECK(c.generator.kind == GeneratorKind::kLinear);
  REQUIRE(c.z_star.has_value());
  CHECK(c.z_star->back() == 1.0);
  CHECK_THROWS_AS(apply_override(doc, "loss.bogus=1"), ValidationError);
  CHECK_THROWS_AS(apply_override(doc, "noequals"), ValidationError);
  CHECK_THROWS_AS(apply_override(doc, "loss.offset=abc"), ValidationError);
}

TEST_CASE("config files layer under overrides") {
  const auto file = std::filesystem::temp_directory_path() / "maskpath_config_test.json";
  {
    std::ofstream out(file);
    out << R"({"loss": {"offset": 0.15}, "path": {"rng_seed": 9}})";
  }
  json merged;
  const RunConfig c = load_run_config(file, {"path.rng_seed=10"}, &merged);
  CHECK(c.mask_params.offset == 0.15);
  CHECK(c.rng_seed == 10);
  CHECK(merged["path"]["rng_seed"] == 10);
  {
    std::ofstream out(file);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_run_config(file, {}), ValidationError);
  std::filesystem::remove(file);
  CHECK_THROWS_AS(load_run_config(file, {}), ValidationError);
}
