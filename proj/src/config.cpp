#include "maskpath/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "maskpath/errors.hpp"

namespace maskpath {

using nlohmann::json;

const json& default_config_document() {
  static const json doc = json::parse(R"({
  "generator": {
    "kind": "blob-face",
    "seed": 7,
    "width": 64,
    "height": 64,
    "latent_dim": 16,
    "command": []
  },
  "mask": {"x0": 20, "y0": 39, "x1": 44, "y1": 57, "invert": false},
  "loss": {
    "offset": 0.25,
    "rest_length": 0.5,
    "alpha": 1.0,
    "beta": 10.0,
    "gamma": 5.0,
    "spring_orders": [1, 2]
  },
  "path": {"vertices": 16, "init_scale": 0.05, "rng_seed": 1, "z_star": null},
  "optimizer": {
    "memory": 10,
    "max_iterations": 500,
    "gradient_tolerance": 1e-6,
    "wolfe_c1": 1e-4,
    "wolfe_c2": 0.9,
    "max_line_search_steps": 25
  },
  "output": {"dir": "maskpath-out", "contact_every": 4},
  "runtime": {"threads": 1},
  "gradcheck": {"points": 50, "step": 1e-5, "tolerance": 1e-4, "corrupt_gradient": false}
})");
  return doc;
}

namespace {

std::string join_key(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

bool same_kind(const json& def, const json& val) {
  if (def.is_null()) return val.is_null() || val.is_array();  // optional arrays, e.g. path.z_star
  if (def.is_number()) return val.is_number();
  return def.type() == val.type();
}

void merge_into(json& target, const json& user, const json& defaults, const std::string& prefix) {
  if (!user.is_object()) {
    throw ValidationError("config: '" + (prefix.empty() ? std::string("<root>") : prefix) + "' must be an object");
  }
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = join_key(prefix, it.key());
    if (!defaults.contains(it.key())) throw ValidationError("config: unknown key '" + path + "'");
    const json& def = defaults.at(it.key());
    if (def.is_object()) {
      merge_into(target[it.key()], it.value(), def, path);
      continue;
    }
    if (!same_kind(def, it.value())) {
      throw ValidationError("config: key '" + path + "' has the wrong type (expected " +
                            std::string(def.is_null() ? "array or null" : def.type_name()) + ")");
    }
    target[it.key()] = it.value();
  }
}

const json& at_path(const json& doc, const std::string& path) {
  const json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) node = &node->at(part);
  return *node;
}

double get_number(const json& doc, const std::string& key) {
  const json& v = at_path(doc, key);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError("config: '" + key + "' must be finite");
  return d;
}

std::uint64_t get_count(const json& doc, const std::string& key, std::uint64_t min_value) {
  const json& v = at_path(doc, key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ValidationError("config: '" + key + "' must be a non-negative integer");
  }
  const auto n = v.get<std::uint64_t>();
  if (n < min_value) throw ValidationError("config: '" + key + "' must be >= " + std::to_string(min_value));
  return n;
}

double get_nonnegative(const json& doc, const std::string& key) {
  const double d = get_number(doc, key);
  if (d < 0.0) throw ValidationError("config: '" + key + "' must be >= 0");
  return d;
}

}  // namespace

json merge_with_defaults(const json& user) {
  json merged = default_config_document();
  if (user.is_null()) return merged;
  merge_into(merged, user, default_config_document(), "");
  return merged;
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' must look like key.path=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  // Build a nested user fragment and merge it, so overrides obey the same strictness as files.
  json fragment = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) fragment = json{{*it, fragment}};
  merge_into(doc, fragment, default_config_document(), "");
}

RunConfig parse_run_config(const json& doc) {
  RunConfig c;

  c.generator.kind = parse_generator_kind(at_path(doc, "generator.kind").get<std::string>());
  c.generator.seed = get_count(doc, "generator.seed", 0);
  c.generator.width = get_count(doc, "generator.width", 1);
  c.generator.height = get_count(doc, "generator.height", 1);
  c.generator.latent_dim = get_count(doc, "generator.latent_dim", 1);
  for (const auto& arg : at_path(doc, "generator.command")) {
    if (!arg.is_string()) throw ValidationError("config: 'generator.command' must be an array of strings");
    c.generator.command.push_back(arg.get<std::string>());
  }
  if (c.generator.kind == GeneratorKind::kExternal && c.generator.command.empty()) {
    throw ValidationError("config: 'generator.command' is required for the external generator");
  }

  c.mask.x0 = get_count(doc, "mask.x0", 0);
  c.mask.y0 = get_count(doc, "mask.y0", 0);
  c.mask.x1 = get_count(doc, "mask.x1", 0);
  c.mask.y1 = get_count(doc, "mask.y1", 0);
  if (!c.mask.valid_for(c.generator.width, c.generator.height)) {
    throw ValidationError("config: 'mask' rectangle is empty or outside the " + std::to_string(c.generator.width) +
                          "x" + std::to_string(c.generator.height) + " image");
  }
  if (c.mask.covers(c.generator.width, c.generator.height)) {
    throw ValidationError("config: 'mask' covers the whole image; its complement would be empty");
  }
  c.mask_params.invert = at_path(doc, "mask.invert").get<bool>();

  c.mask_params.offset = get_nonnegative(doc, "loss.offset");
  c.springs.rest_length = get_nonnegative(doc, "loss.rest_length");
  c.weights.alpha = get_nonnegative(doc, "loss.alpha");
  c.weights.beta = get_nonnegative(doc, "loss.beta");
  c.weights.gamma = get_nonnegative(doc, "loss.gamma");
  if (c.weights.alpha == 0.0 && c.weights.beta == 0.0 && c.weights.gamma == 0.0) {
    throw ValidationError("config: 'loss.alpha', 'loss.beta', 'loss.gamma' must not all be zero");
  }
  c.springs.orders.clear();
  for (const auto& k : at_path(doc, "loss.spring_orders")) {
    if (!k.is_number_integer() || (k.get<std::int64_t>() != 1 && k.get<std::int64_t>() != 2)) {
      throw ValidationError("config: 'loss.spring_orders' entries must be 1 or 2");
    }
    c.springs.orders.push_back(k.get<std::size_t>());
  }
  if (c.springs.orders.empty()) throw ValidationError("config: 'loss.spring_orders' must not be empty");

  c.vertices = get_count(doc, "path.vertices", 1);
  for (std::size_t k : c.springs.orders) {
    if (c.weights.spring_weight(k) != 0.0 && k >= c.vertices) {
      throw ValidationError("config: 'loss.spring_orders' contains " + std::to_string(k) +
                            ", which needs 'path.vertices' > " + std::to_string(k) + " unless its weight is 0");
    }
  }
  c.init_scale = get_nonnegative(doc, "path.init_scale");
  c.rng_seed = get_count(doc, "path.rng_seed", 0);
  const json& z = at_path(doc, "path.z_star");
  if (!z.is_null()) {
    std::vector<double> v;
    for (const auto& x : z) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        throw ValidationError("config: 'path.z_star' must contain finite numbers");
      }
      v.push_back(x.get<double>());
    }
    if (v.size() != c.generator.latent_dim) {
      throw ValidationError("config: 'path.z_star' has " + std::to_string(v.size()) + " entries, latent_dim is " +
                            std::to_string(c.generator.latent_dim));
    }
    c.z_star = std::move(v);
  }

  c.optimizer.memory = get_count(doc, "optimizer.memory", 1);
  c.optimizer.max_iterations = get_count(doc, "optimizer.max_iterations", 1);
  c.optimizer.gradient_tolerance = get_nonnegative(doc, "optimizer.gradient_tolerance");
  c.optimizer.wolfe_c1 = get_number(doc, "optimizer.wolfe_c1");
  c.optimizer.wolfe_c2 = get_number(doc, "optimizer.wolfe_c2");
  c.optimizer.max_line_search_steps = get_count(doc, "optimizer.max_line_search_steps", 1);
  if (!(c.optimizer.wolfe_c1 > 0.0 && c.optimizer.wolfe_c1 < c.optimizer.wolfe_c2 && c.optimizer.wolfe_c2 < 1.0)) {
    throw ValidationError("config: 'optimizer.wolfe_c1' and 'optimizer.wolfe_c2' need 0 < c1 < c2 < 1");
  }

  c.output_dir = at_path(doc, "output.dir").get<std::string>();
  c.contact_every = get_count(doc, "output.contact_every", 1);
  c.threads = get_count(doc, "runtime.threads", 0);

  c.gradcheck.points = get_count(doc, "gradcheck.points", 1);
  c.gradcheck.step = get_number(doc, "gradcheck.step");
  if (!(c.gradcheck.step > 0.0)) throw ValidationError("config: 'gradcheck.step' must be > 0");
  c.gradcheck.tolerance = get_nonnegative(doc, "gradcheck.tolerance");
  c.gradcheck.corrupt_gradient = at_path(doc, "gradcheck.corrupt_gradient").get<bool>();
  return c;
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides,
                          json* merged_out) {
  json user = nullptr;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ValidationError("cannot open config file " + file->string());
    try {
      user = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError("config file " + file->string() + " is not valid JSON: " + e.what());
    }
  }
  json merged = merge_with_defaults(user);
  for (const auto& o : overrides) apply_override(merged, o);
  RunConfig config = parse_run_config(merged);
  if (merged_out) *merged_out = std::move(merged);
  return config;
}

}  // namespace maskpath
