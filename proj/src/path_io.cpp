#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "maskpath/encoding.hpp"
#include "maskpath/errors.hpp"
#include "maskpath/image_io.hpp"
#include "maskpath/path.hpp"

namespace maskpath {

using nlohmann::json;

namespace {

void append_vector(std::string& out, std::span<const double> v) {
  out += '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  out += ']';
}

}  // namespace

// Written by hand rather than through json::dump so every number carries
// exactly 17 significant digits.
std::string serialize_path(const PathDocument& doc) {
  const LatentPath& p = doc.path;
  std::string out;
  out += "{\n";
  out += "  \"format\": \"" + std::string(kPathFormat) + "\",\n";
  out += "  \"version\": " + std::to_string(kPathFormatVersion) + ",\n";
  out += "  \"n\": " + std::to_string(p.size()) + ",\n";
  out += "  \"w\": " + std::to_string(p.dim()) + ",\n";
  out += "  \"sigma\": " + format_double(doc.rest_length) + ",\n";
  out += "  \"seed\": {\n";
  out += "    \"z_star\": ";
  append_vector(out, doc.seed.z_star);
  out += ",\n";
  out += "    \"rng_seed\": " + std::to_string(doc.seed.rng_seed) + ",\n";
  out += "    \"init_scale\": " + format_double(doc.seed.init_scale) + "\n";
  out += "  },\n";
  out += "  \"vertices\": [";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out += i ? ",\n    " : "\n    ";
    append_vector(out, p.vertex(i));
  }
  out += p.size() ? "\n  ]\n" : "]\n";
  out += "}\n";
  return out;
}

namespace {

const json& require(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ValidationError(std::string("path file: missing key '") + key + "'");
  }
  return obj.at(key);
}

std::vector<double> number_array(const json& v, const std::string& what) {
  if (!v.is_array()) throw ValidationError("path file: '" + what + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw ValidationError("path file: '" + what + "' must contain only numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

PathDocument parse_path(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("path file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("path file must be a JSON object");
  if (require(doc, "format") != kPathFormat) throw ValidationError("path file: unexpected format tag");
  if (require(doc, "version") != kPathFormatVersion) throw ValidationError("path file: unsupported version");

  const json& n_json = require(doc, "n");
  const json& w_json = require(doc, "w");
  if (!n_json.is_number_unsigned() || !w_json.is_number_unsigned()) {
    throw ValidationError("path file: 'n' and 'w' must be non-negative integers");
  }
  const auto n = n_json.get<std::size_t>();
  const auto w = w_json.get<std::size_t>();
  if (n == 0) throw ValidationError("path file holds an empty path");
  if (w == 0) throw ValidationError("path file: latent dimension must be positive");

  PathDocument out;
  const json& sigma = require(doc, "sigma");
  if (!sigma.is_number()) throw ValidationError("path file: 'sigma' must be a number");
  out.rest_length = sigma.get<double>();

  const json& seed = require(doc, "seed");
  out.seed.z_star = number_array(require(seed, "z_star"), "seed.z_star");
  const json& rng_seed = require(seed, "rng_seed");
  if (!rng_seed.is_number_unsigned()) throw ValidationError("path file: 'seed.rng_seed' must be an unsigned integer");
  out.seed.rng_seed = rng_seed.get<std::uint64_t>();
  const json& init_scale = require(seed, "init_scale");
  if (!init_scale.is_number()) throw ValidationError("path file: 'seed.init_scale' must be a number");
  out.seed.init_scale = init_scale.get<double>();
  if (out.seed.z_star.size() != w) throw ValidationError("path file: 'seed.z_star' length differs from w");

  const json& vertices = require(doc, "vertices");
  if (!vertices.is_array() || vertices.size() != n) {
    throw ValidationError("path file: 'vertices' must be an array of n vertices");
  }
  std::vector<double> flat;
  flat.reserve(n * w);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = number_array(vertices[i], "vertices[" + std::to_string(i) + "]");
    if (row.size() != w) throw ValidationError("path file: vertex " + std::to_string(i) + " does not have w entries");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  out.path = LatentPath(n, w, std::move(flat));
  return out;
}

void write_path_file(const std::filesystem::path& file, const PathDocument& doc) {
  const std::string text = serialize_path(doc);
  write_file_bytes(file, std::vector<std::uint8_t>(text.begin(), text.end()));
}

PathDocument read_path_file(const std::filesystem::path& file) {
  const auto bytes = read_file_bytes(file);
  return parse_path(std::string(bytes.begin(), bytes.end()));
}

}  // namespace maskpath
