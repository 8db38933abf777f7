#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maskpath/config.hpp"
#include "maskpath/errors.hpp"
#include "maskpath/image_io.hpp"
#include "maskpath/kernels.hpp"
#include "maskpath/pipeline.hpp"

namespace {

enum ExitCode : int { kOk = 0, kValidation = 1, kOptimizer = 2, kGradcheck = 3 };

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string out_dir;
  bool print_defaults = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_file, "JSON config file layered over the defaults")->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.overrides, "Override one key, e.g. --set loss.offset=0.35")->take_all();
  cmd->add_option("--out", opts.out_dir, "Output directory (overrides output.dir)");
  cmd->add_flag("--print-default-config", opts.print_defaults, "Print the embedded default config and exit");
}

maskpath::RunConfig load(const CommonOptions& opts, nlohmann::json* merged) {
  std::optional<std::filesystem::path> file;
  if (!opts.config_file.empty()) file = opts.config_file;
  auto overrides = opts.overrides;
  if (!opts.out_dir.empty()) overrides.push_back("output.dir=" + nlohmann::json(opts.out_dir).dump());
  return maskpath::load_run_config(file, overrides, merged);
}

int cmd_run(const CommonOptions& opts) {
  nlohmann::json merged;
  const auto config = load(opts, &merged);
  const auto manifest = maskpath::run(config, merged);
  const auto& r = manifest.report;
  std::printf("status        %s\n", maskpath::to_string(r.status).c_str());
  std::printf("iterations    %zu (%zu evaluations)\n", r.iterations, r.evaluations);
  std::printf("objective     %.6g -> %.6g\n", r.value_trace.front(), r.final_value);
  std::printf("in-mask D     %.6g (target %.6g)\n", manifest.localization.mean_in_mask, config.mask_params.offset);
  std::printf("out-mask D    %.6g\n", manifest.localization.mean_out_mask);
  std::printf("mean ratio    %.6g\n", manifest.localization.mean_ratio);
  std::printf("wrote %zu files to %s\n", manifest.files.size() + 1, config.output_dir.string().c_str());
  return kOk;
}

int cmd_render(const CommonOptions& opts, const std::string& path_file) {
  const auto config = load(opts, nullptr);
  const auto files = maskpath::render(path_file, config, config.output_dir);
  for (const auto& f : files) std::printf("%s  %s\n", f.sha256.c_str(), f.name.c_str());
  return kOk;
}

int cmd_metrics(const CommonOptions& opts, const std::string& path_file) {
  const auto config = load(opts, nullptr);
  const auto report = maskpath::metrics(path_file, config, config.output_dir);
  std::cout << report.dump(2) << "\n";
  return kOk;
}

int cmd_gradcheck(const CommonOptions& opts) {
  const auto config = load(opts, nullptr);
  const auto summary = maskpath::gradcheck(config);
  nlohmann::json doc = summary.to_json();
  doc["step"] = config.gradcheck.step;
  doc["tolerance"] = config.gradcheck.tolerance;
  doc["points"] = config.gradcheck.points;
  doc["corrupt_gradient"] = config.gradcheck.corrupt_gradient;
  for (const auto& c : summary.components) {
    std::printf("%-18s max_rel_err %-12.4g %s\n", c.name.c_str(), c.max_relative_error, c.passed ? "pass" : "FAIL");
  }
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    const std::string text = doc.dump(2) + "\n";
    maskpath::write_file_bytes(std::filesystem::path(opts.out_dir) / "gradcheck.json",
                               std::vector<std::uint8_t>(text.begin(), text.end()));
  }
  return summary.passed() ? kOk : kGradcheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Masked latent-path discovery"};
  app.set_version_flag("--version", MASKPATH_VERSION);
  app.require_subcommand(1);

  CommonOptions run_opts, render_opts, metrics_opts, grad_opts;
  std::string render_path, metrics_path;

  auto* run = app.add_subcommand("run", "Optimize a latent path and write frames, path file and manifest");
  add_common(run, run_opts);
  auto* render = app.add_subcommand("render", "Render frames and a contact sheet from a path file");
  add_common(render, render_opts);
  render->add_option("--path", render_path, "Path file written by run");
  auto* metrics = app.add_subcommand("metrics", "Spacing and localization report for a path file");
  add_common(metrics, metrics_opts);
  metrics->add_option("--path", metrics_path, "Path file written by run");
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every analytic gradient");
  add_common(grad, grad_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  const CommonOptions& active = run->parsed()      ? run_opts
                                : render->parsed() ? render_opts
                                : metrics->parsed() ? metrics_opts
                                                    : grad_opts;
  if (active.print_defaults) {
    std::cout << maskpath::default_config_document().dump(2) << "\n";
    return kOk;
  }

  try {
    if (run->parsed()) return cmd_run(active);
    if (render->parsed() || metrics->parsed()) {
      const std::string& path_file = render->parsed() ? render_path : metrics_path;
      if (path_file.empty()) throw maskpath::ValidationError("--path is required");
      return render->parsed() ? cmd_render(active, path_file) : cmd_metrics(active, path_file);
    }
    return cmd_gradcheck(active);
  } catch (const maskpath::OptimizationFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOptimizer;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kValidation;
  }
}
