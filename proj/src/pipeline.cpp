#include "maskpath/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <sstream>

#include "maskpath/encoding.hpp"
#include "maskpath/image_io.hpp"
#include "maskpath/kernels.hpp"
#include "maskpath/losses.hpp"
#include "maskpath/rng.hpp"

namespace maskpath {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Seed vectors come from a stream separate from the path-initialization stream.
constexpr std::uint64_t kSeedVectorStream = 0x9E3779B97F4A7C15ULL;

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::vector<std::uint8_t>& bytes) {
    write_file_bytes(dir_ / name, bytes);
    records_.push_back({name, sha256_hex(bytes), bytes.size()});
  }
  void write_text(const std::string& name, const std::string& text) {
    write(name, std::vector<std::uint8_t>(text.begin(), text.end()));
  }
  void write_image(const std::string& stem, const ImageBuffer& image) {
    write(stem + ".pgm", encode_pgm(image));
    write(stem + ".png", encode_png(image));
  }

  const std::vector<FileRecord>& records() const noexcept { return records_; }

 private:
  fs::path dir_;
  std::vector<FileRecord> records_;
};

std::string frame_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu", i);
  return buf;
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json records_json(const std::vector<FileRecord>& records) {
  json files = json::array();
  for (const auto& r : records) files.push_back({{"name", r.name}, {"sha256", r.sha256}, {"bytes", r.bytes}});
  return files;
}

json localization_json(const LocalizationReport& r, bool invert, bool per_vertex) {
  json j = {{"invert", invert},
            {"mean_in_mask", r.mean_in_mask},
            {"mean_out_mask", r.mean_out_mask},
            {"mean_ratio", r.mean_ratio}};
  if (per_vertex) {
    json v = json::array();
    for (std::size_t i = 0; i < r.vertices.size(); ++i) {
      const auto& e = r.vertices[i];
      v.push_back({{"index", i}, {"in_mask", e.in_mask}, {"out_mask", e.out_mask}, {"ratio", e.ratio}});
    }
    j["vertices"] = std::move(v);
  }
  return j;
}

json spacing_json(const PathMetrics& m, bool full) {
  json j = {{"mean_gap", m.mean_gap}, {"gap_cv", m.gap_cv}};
  double max_angle = 0.0;
  json angles = json::array();
  for (const auto& a : m.angles) {
    angles.push_back(a ? json(*a) : json(nullptr));
    if (a) max_angle = std::max(max_angle, *a);
  }
  j["max_angle"] = max_angle;
  if (full) {
    j["gaps"] = m.gaps;
    j["angles"] = std::move(angles);
  }
  return j;
}

std::unique_ptr<Generator> generator_for_path(const RunConfig& config, const PathDocument& doc) {
  auto gen = make_generator(config.generator);
  if (doc.path.dim() != gen->latent_dim()) {
    throw ValidationError("path file has latent dimension " + std::to_string(doc.path.dim()) +
                          " but the generator expects " + std::to_string(gen->latent_dim()));
  }
  return gen;
}

}  // namespace

std::vector<double> resolve_seed_vector(const RunConfig& config) {
  if (config.z_star) return *config.z_star;
  Rng rng(config.rng_seed ^ kSeedVectorStream);
  return rng.normal_vector(config.generator.latent_dim);
}

ImageBuffer mask_overlay(const ImageBuffer& image, const MaskRegion& region) {
  require_region(region, image.width(), image.height());
  ImageBuffer out = image;
  for (std::size_t x = region.x0; x < region.x1; ++x) {
    out.at(x, region.y0) = 1.0;
    out.at(x, region.y1 - 1) = 1.0;
  }
  for (std::size_t y = region.y0; y < region.y1; ++y) {
    out.at(region.x0, y) = 1.0;
    out.at(region.x1 - 1, y) = 1.0;
  }
  return out;
}

ImageBuffer contact_sheet(const std::vector<ImageBuffer>& frames, std::size_t every) {
  if (frames.empty()) throw ValidationError("contact sheet needs at least one frame");
  if (every == 0) throw ValidationError("contact sheet stride must be positive");
  constexpr std::size_t kGutter = 2;
  const std::size_t fw = frames.front().width();
  const std::size_t fh = frames.front().height();
  std::vector<std::size_t> picks;
  for (std::size_t i = 0; i < frames.size(); i += every) picks.push_back(i);
  ImageBuffer sheet(picks.size() * fw + (picks.size() - 1) * kGutter, fh, 1.0);
  for (std::size_t k = 0; k < picks.size(); ++k) {
    const ImageBuffer& f = frames[picks[k]];
    if (f.width() != fw || f.height() != fh) throw DimensionError("contact sheet frames differ in size");
    const std::size_t ox = k * (fw + kGutter);
    for (std::size_t y = 0; y < fh; ++y) {
      for (std::size_t x = 0; x < fw; ++x) sheet.at(ox + x, y) = f.at(x, y);
    }
  }
  return sheet;
}

RunManifest run(const RunConfig& config, const json& config_echo) {
  const auto wall_start = std::chrono::system_clock::now();
  const auto start = std::chrono::steady_clock::now();

  validate(config.mask_params);
  validate(config.springs);
  validate(config.weights);
  validate(config.optimizer);

  auto gen = make_generator(config.generator);
  if (!gen->supports_vjp()) {
    throw OptimizationFailure("the " + to_string(gen->kind()) +
                              " generator is forward-only; optimization needs blob-face or linear");
  }
  const std::vector<double> z_star = resolve_seed_vector(config);
  const ImageBuffer x_star = gen->generate(z_star);
  SeedSpec seed{z_star, config.rng_seed, config.init_scale};

  LatentPath initial;
  if (config.vertices >= 2) {
    initial = initialize_path(seed, config.vertices, config.springs.rest_length);
  } else {
    Rng rng(config.rng_seed);
    std::vector<double> z = z_star;
    for (double& v : z) v += config.init_scale * rng.normal();
    initial = LatentPath(1, z.size(), std::move(z));
  }

  const std::size_t n = initial.size();
  const std::size_t w = initial.dim();
  const ObjectiveOptions objective_options{config.threads};
  Objective objective = [&](std::span<const double> x, std::span<double> g) {
    if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) return std::nan("");
    const LatentPath p(n, w, std::vector<double>(x.begin(), x.end()));
    const ObjectiveEvaluation e = total_objective(p, *gen, x_star, config.mask, config.mask_params, config.springs,
                                                  config.weights, objective_options);
    std::copy(e.gradient.begin(), e.gradient.end(), g.begin());
    return e.value;
  };

  OptimizeResult result;
  try {
    result = minimize(objective, std::vector<double>(initial.flat().begin(), initial.flat().end()), config.optimizer);
  } catch (const Error& e) {
    throw OptimizationFailure(std::string("optimization failed: ") + e.what());
  }

  RunManifest manifest;
  manifest.report = result.report;
  manifest.path = {LatentPath(n, w, std::move(result.x)), config.springs.rest_length, seed};

  const std::vector<ImageBuffer> frames = gen->render_batch(manifest.path.path.rows());
  manifest.localization = localization_report(frames, x_star, config.mask, config.mask_params.invert);

  ArtifactWriter out(config.output_dir);
  out.write_text("path.json", serialize_path(manifest.path));
  out.write_image("reference", x_star);
  out.write_image("reference_mask", mask_overlay(x_star, config.mask));
  for (std::size_t i = 0; i < frames.size(); ++i) out.write_image(frame_stem(i), frames[i]);
  out.write_image("contact_sheet", contact_sheet(frames, config.contact_every));
  manifest.files = out.records();

  const OptimizeReport& r = manifest.report;
  json doc;
  doc["tool"] = "maskpath";
  doc["version"] = MASKPATH_VERSION;
  doc["command"] = "run";
  doc["config"] = config_echo;
  doc["started_at"] = utc_timestamp(wall_start);
  doc["kernel_isa"] = std::string(kernels::isa_name(kernels::active_isa()));
  doc["optimizer"] = {{"status", to_string(r.status)},
                      {"initial_value", r.value_trace.front()},
                      {"final_value", r.final_value},
                      {"final_gradient_norm", r.final_gradient_norm},
                      {"iterations", r.iterations},
                      {"evaluations", r.evaluations},
                      {"line_search_failures", r.line_search_failures},
                      {"steepest_descent_fallbacks", r.steepest_descent_fallbacks},
                      {"skipped_curvature_pairs", r.skipped_curvature_pairs},
                      {"value_trace", r.value_trace}};
  doc["localization"] = localization_json(manifest.localization, config.mask_params.invert, false);
  if (n >= 3) doc["path_metrics"] = spacing_json(path_metrics(manifest.path.path), false);
  doc["files"] = records_json(manifest.files);
  doc["duration_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest.document = doc;
  out.write_text("manifest.json", doc.dump(2) + "\n");
  return manifest;
}

std::vector<FileRecord> render(const fs::path& path_file, const RunConfig& config, const fs::path& output_dir) {
  const PathDocument doc = read_path_file(path_file);
  auto gen = generator_for_path(config, doc);
  const std::vector<ImageBuffer> frames = gen->render_batch(doc.path.rows());

  ArtifactWriter out(output_dir);
  for (std::size_t i = 0; i < frames.size(); ++i) out.write_image(frame_stem(i), frames[i]);
  out.write_image("contact_sheet", contact_sheet(frames, config.contact_every));
  return out.records();
}

json metrics(const fs::path& path_file, const RunConfig& config, const fs::path& output_dir) {
  const PathDocument doc = read_path_file(path_file);
  auto gen = generator_for_path(config, doc);
  const ImageBuffer x_star = gen->generate(doc.seed.z_star);
  const std::vector<ImageBuffer> frames = gen->render_batch(doc.path.rows());
  const LocalizationReport loc = localization_report(frames, x_star, config.mask, config.mask_params.invert);

  json report;
  report["format"] = "maskpath.metrics";
  report["version"] = 1;
  report["path"] = {{"n", doc.path.size()}, {"w", doc.path.dim()}, {"sigma", doc.rest_length}};
  report["mask"] = {{"x0", config.mask.x0}, {"y0", config.mask.y0}, {"x1", config.mask.x1}, {"y1", config.mask.y1}};
  std::optional<PathMetrics> spacing;
  if (doc.path.size() >= 3) {
    spacing = path_metrics(doc.path);
    report["spacing"] = spacing_json(*spacing, true);
  } else {
    report["spacing"] = nullptr;
  }
  report["localization"] = localization_json(loc, config.mask_params.invert, true);

  std::ostringstream text;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %-14s %-14s %-14s %-14s\n", "vertex", "in_mask", "out_mask", "ratio",
                "gap_to_next");
  text << line;
  for (std::size_t i = 0; i < loc.vertices.size(); ++i) {
    const auto& v = loc.vertices[i];
    const bool has_gap = spacing && i < spacing->gaps.size();
    std::snprintf(line, sizeof line, "%-8zu %-14.6g %-14.6g %-14.6g ", i, v.in_mask, v.out_mask, v.ratio);
    text << line;
    if (has_gap) {
      std::snprintf(line, sizeof line, "%-14.6g\n", spacing->gaps[i]);
      text << line;
    } else {
      text << "-\n";
    }
  }
  std::snprintf(line, sizeof line, "%-8s %-14.6g %-14.6g %-14.6g\n", "mean", loc.mean_in_mask, loc.mean_out_mask,
                loc.mean_ratio);
  text << line;
  if (spacing) {
    std::snprintf(line, sizeof line, "mean gap %.6g (sigma %.6g), gap CV %.6g\n", spacing->mean_gap, doc.rest_length,
                  spacing->gap_cv);
    text << line;
  }

  ArtifactWriter out(output_dir);
  out.write_text("metrics.json", report.dump(2) + "\n");
  out.write_text("metrics.txt", text.str());
  return report;
}

// ---------------------------------------------------------------------------

bool GradcheckSummary::passed() const noexcept {
  return std::all_of(components.begin(), components.end(), [](const auto& c) { return c.passed; });
}

json GradcheckSummary::to_json() const {
  json comps = json::array();
  for (const auto& c : components) {
    comps.push_back({{"name", c.name},
                     {"points", c.points},
                     {"max_relative_error", std::isfinite(c.max_relative_error) ? json(c.max_relative_error)
                                                                                : json(nullptr)},
                     {"passed", c.passed}});
  }
  return {{"passed", passed()}, {"components", std::move(comps)}};
}

namespace {

struct Instance {
  Objective objective;
  std::vector<double> x;
};

Objective maybe_corrupt(Objective f, bool corrupt) {
  if (!corrupt) return f;
  return [f = std::move(f)](std::span<const double> x, std::span<double> g) {
    const double v = f(x, g);
    for (double& gi : g) gi *= 2.0;
    return v;
  };
}

ImageBuffer random_image(Rng& rng, std::size_t w, std::size_t h) {
  ImageBuffer img(w, h);
  for (double& p : img.pixels()) p = rng.uniform();
  return img;
}

MaskRegion random_partial_region(Rng& rng, std::size_t w, std::size_t h) {
  for (;;) {
    MaskRegion r;
    r.x0 = rng.next_u64() % w;
    r.x1 = r.x0 + 1 + rng.next_u64() % (w - r.x0);
    r.y0 = rng.next_u64() % h;
    r.y1 = r.y0 + 1 + rng.next_u64() % (h - r.y0);
    if (!r.covers(w, h)) return r;
  }
}

// Offset kept at least 1e-3 away from every listed in-mask distance.
double offset_avoiding_kink(Rng& rng, const std::vector<double>& distances) {
  for (;;) {
    const double c = rng.uniform(0.0, 0.3);
    if (std::all_of(distances.begin(), distances.end(), [c](double d) { return std::fabs(d - c) >= 1e-3; })) {
      return c;
    }
  }
}

Instance masked_loss_instance(Rng& rng) {
  constexpr std::size_t kSize = 8;
  auto x_star = std::make_shared<ImageBuffer>(random_image(rng, kSize, kSize));
  const ImageBuffer x = random_image(rng, kSize, kSize);
  const MaskRegion region = random_partial_region(rng, kSize, kSize);
  MaskedLossParams params;
  params.invert = rng.uniform() < 0.5;
  params.offset = offset_avoiding_kink(rng, {masked_distance(*x_star, x, mask_roles(region, params.invert).changed)});
  Objective f = [=](std::span<const double> px, std::span<double> g) {
    const ImageBuffer img(kSize, kSize, std::vector<double>(px.begin(), px.end()));
    const ImageBuffer grad = masked_loss_gradient(*x_star, img, region, params);
    std::copy(grad.pixels().begin(), grad.pixels().end(), g.begin());
    return masked_loss(*x_star, img, region, params);
  };
  return {f, std::vector<double>(x.pixels().begin(), x.pixels().end())};
}

Instance spring_instance(Rng& rng, std::size_t order) {
  constexpr std::size_t kN = 5;
  constexpr std::size_t kW = 3;
  const double sigma = rng.uniform(0.2, 1.0);
  Objective f = [=](std::span<const double> x, std::span<double> g) {
    const LatentPath p(kN, kW, std::vector<double>(x.begin(), x.end()));
    const auto grad = spring_loss_gradient(p, order, sigma);
    std::copy(grad.begin(), grad.end(), g.begin());
    return spring_loss(p, order, sigma);
  };
  return {f, rng.normal_vector(kN * kW)};
}

// A blob with near-zero intensity has near-zero derivatives in its center and radius,
// which leaves only rounding noise for the relative error to compare.
bool has_vanishing_blob(const Generator& gen, std::span<const double> z) {
  const auto* blob = dynamic_cast<const BlobFaceGenerator*>(&gen);
  if (!blob) return false;
  const auto params = blob->blob_params(z);
  return std::any_of(params.begin(), params.end(), [](const BlobParams& b) { return std::fabs(b.intensity) < 0.02; });
}

// f(z) = ⟨u, G(z)⟩, whose gradient is vjp(z, u).
Instance vjp_instance(Rng& rng, std::shared_ptr<const Generator> gen) {
  auto upstream = std::make_shared<ImageBuffer>(gen->output_width(), gen->output_height());
  for (double& p : upstream->pixels()) p = rng.normal();
  std::vector<double> z = rng.normal_vector(gen->latent_dim());
  while (has_vanishing_blob(*gen, z)) z = rng.normal_vector(gen->latent_dim());
  Objective f = [gen, upstream](std::span<const double> z, std::span<double> g) {
    const auto grad = gen->vjp(z, *upstream);
    std::copy(grad.begin(), grad.end(), g.begin());
    return kernels::dot(gen->generate(z).pixels(), upstream->pixels());
  };
  return {f, std::move(z)};
}

Instance total_objective_instance(Rng& rng, std::shared_ptr<const Generator> gen, const RunConfig& config) {
  constexpr std::size_t kN = 3;
  SeedSpec seed{rng.normal_vector(gen->latent_dim()), rng.next_u64(), 0.5};
  auto x_star = std::make_shared<ImageBuffer>(gen->generate(seed.z_star));
  const LatentPath start = initialize_path(seed, kN, config.springs.rest_length);
  MaskedLossParams params = config.mask_params;
  std::vector<double> in_mask;
  const auto roles = mask_roles(config.mask, params.invert);
  for (std::size_t i = 0; i < kN; ++i) in_mask.push_back(masked_distance(*x_star, gen->generate(start.vertex(i)), roles.changed));
  params.offset = offset_avoiding_kink(rng, in_mask);
  const MaskRegion region = config.mask;
  const SpringParams springs = config.springs;
  const ObjectiveWeights weights = config.weights;
  const std::size_t w = gen->latent_dim();
  Objective f = [=](std::span<const double> x, std::span<double> g) {
    const LatentPath p(kN, w, std::vector<double>(x.begin(), x.end()));
    const auto e = total_objective(p, *gen, *x_star, region, params, springs, weights);
    std::copy(e.gradient.begin(), e.gradient.end(), g.begin());
    return e.value;
  };
  return {f, std::vector<double>(start.flat().begin(), start.flat().end())};
}

}  // namespace

GradcheckSummary gradcheck(const RunConfig& config) {
  const GradcheckConfig& gc = config.gradcheck;
  GeneratorConfig blob_cfg = config.generator;
  blob_cfg.kind = GeneratorKind::kBlobFace;
  GeneratorConfig linear_cfg = config.generator;
  linear_cfg.kind = GeneratorKind::kLinear;
  std::shared_ptr<const Generator> blob = make_generator(blob_cfg);
  std::shared_ptr<const Generator> linear = make_generator(linear_cfg);
  std::shared_ptr<const Generator> objective_gen =
      config.generator.kind == GeneratorKind::kLinear ? linear : blob;

  using Factory = std::function<Instance(Rng&)>;
  const std::vector<std::pair<std::string, Factory>> suites = {
      {"masked_loss", [](Rng& r) { return masked_loss_instance(r); }},
      {"spring_loss_k1", [](Rng& r) { return spring_instance(r, 1); }},
      {"spring_loss_k2", [](Rng& r) { return spring_instance(r, 2); }},
      {"blob_face_vjp", [&](Rng& r) { return vjp_instance(r, blob); }},
      {"linear_vjp", [&](Rng& r) { return vjp_instance(r, linear); }},
      {"total_objective", [&](Rng& r) { return total_objective_instance(r, objective_gen, config); }},
  };

  GradcheckSummary summary;
  std::uint64_t stream = 0;
  for (const auto& [name, factory] : suites) {
    Rng rng(config.rng_seed * 1000003ULL + (++stream));
    GradcheckComponent comp{name, gc.points, 0.0, true};
    for (std::size_t p = 0; p < gc.points; ++p) {
      Instance inst = factory(rng);
      const auto report = check_gradient(maybe_corrupt(std::move(inst.objective), gc.corrupt_gradient), inst.x,
                                         gc.step, gc.tolerance);
      comp.max_relative_error = std::max(comp.max_relative_error, report.max_relative_error);
      if (!report.passed()) comp.passed = false;
    }
    summary.components.push_back(comp);
  }
  return summary;
}

}  // namespace maskpath
