#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "maskpath/generator.hpp"
#include "maskpath/image.hpp"
#include "maskpath/losses.hpp"
#include "maskpath/optimizer.hpp"

namespace maskpath {

struct GradcheckConfig {
  std::size_t points = 50;
  double step = 1e-5;
  double tolerance = 1e-4;
  bool corrupt_gradient = false;  // negative control: doubles every analytic gradient
};

/// Everything a run needs. Built from a JSON document layered over the embedded defaults.
struct RunConfig {
  GeneratorConfig generator;
  MaskRegion mask;
  MaskedLossParams mask_params;  // offset c and the invert flag
  SpringParams springs;
  ObjectiveWeights weights;
  std::size_t vertices = 16;
  double init_scale = 0.05;
  std::uint64_t rng_seed = 1;
  std::optional<std::vector<double>> z_star;
  LbfgsConfig optimizer;
  std::filesystem::path output_dir = "maskpath-out";
  std::size_t contact_every = 4;
  std::size_t threads = 1;
  GradcheckConfig gradcheck;
};

/// The embedded default document. Every accepted key appears here.
const nlohmann::json& default_config_document();

/// Overlay `user` onto the defaults. Unknown keys and type mismatches are
/// ValidationErrors naming the dotted key path.
nlohmann::json merge_with_defaults(const nlohmann::json& user);

/// Apply "a.b.c=value" overrides. The value is parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Typed view of a merged document; range checks name the offending key.
RunConfig parse_run_config(const nlohmann::json& merged);

/// Read a config file (may be empty path for defaults-only), merge, apply overrides, parse.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides,
                          nlohmann::json* merged_out = nullptr);

}  // namespace maskpath
