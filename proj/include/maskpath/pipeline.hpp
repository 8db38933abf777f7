#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "maskpath/config.hpp"
#include "maskpath/errors.hpp"
#include "maskpath/optimizer.hpp"
#include "maskpath/path.hpp"

namespace maskpath {

/// The optimization stage could not run (bad starting point, forward-only generator, ...).
/// No artifacts are written.
class OptimizationFailure : public Error {
 public:
  using Error::Error;
};

struct FileRecord {
  std::string name;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

struct RunManifest {
  nlohmann::json document;  // what manifest.json contains
  std::vector<FileRecord> files;
  OptimizeReport report;
  LocalizationReport localization;
  PathDocument path;
};

/// z* for a config: the explicit vector if given, otherwise drawn from a stream derived from path.rng_seed.
std::vector<double> resolve_seed_vector(const RunConfig& config);

/// Optimize the latent path for `config` and write every artifact into config.output_dir:
/// path.json, frame_NNNN.{pgm,png}, contact_sheet.{pgm,png}, reference.{pgm,png},
/// reference_mask.{pgm,png}, manifest.json.
RunManifest run(const RunConfig& config, const nlohmann::json& config_echo);

/// x* with the mask rectangle outlined at intensity 1.0.
ImageBuffer mask_overlay(const ImageBuffer& image, const MaskRegion& region);

/// Frames side by side, every `every`-th one starting at frame 0, separated by 2-pixel white gutters.
ImageBuffer contact_sheet(const std::vector<ImageBuffer>& frames, std::size_t every);

/// Render one frame per vertex of a path file plus a contact sheet. Validates before writing anything.
std::vector<FileRecord> render(const std::filesystem::path& path_file, const RunConfig& config,
                               const std::filesystem::path& output_dir);

/// Spacing and localization report for a path file; writes metrics.json and metrics.txt.
nlohmann::json metrics(const std::filesystem::path& path_file, const RunConfig& config,
                       const std::filesystem::path& output_dir);

struct GradcheckComponent {
  std::string name;
  std::size_t points = 0;
  double max_relative_error = 0.0;
  bool passed = false;
};

struct GradcheckSummary {
  std::vector<GradcheckComponent> components;
  bool passed() const noexcept;
  nlohmann::json to_json() const;
};

/// Finite-difference checks of every analytic gradient at seeded random points.
GradcheckSummary gradcheck(const RunConfig& config);

}  // namespace maskpath
