#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "maskpath/generator.hpp"
#include "maskpath/image.hpp"
#include "maskpath/latent_path.hpp"

namespace maskpath {

struct SeedSpec {
  std::vector<double> z_star;
  std::uint64_t rng_seed = 1;
  double init_scale = 0.05;  // η
};

/// Noisy straight line through z*:
///   z_i = z* + (i − (n−1)/2)·σ·u + η·g_i      (i = 0 … n−1)
/// with u a seeded random unit direction and g_i seeded standard normals.
/// With η = 0 consecutive vertices are exactly σ apart.
LatentPath initialize_path(const SeedSpec& seed, std::size_t n, double rest_length);

struct PathMetrics {
  std::vector<double> gaps;                  // ‖z_{i+1} − z_i‖
  double mean_gap = 0.0;
  double gap_cv = 0.0;                       // population std / mean
  std::vector<std::optional<double>> angles; // radians between successive segments; empty when undefined
};

/// Requires n ≥ 3.
PathMetrics path_metrics(const LatentPath& path);

struct VertexLocalization {
  double in_mask = 0.0;   // D over the changed region
  double out_mask = 0.0;  // D over the preserved region
  double ratio = 0.0;     // out_mask / max(in_mask, 1e-12)
};

struct LocalizationReport {
  std::vector<VertexLocalization> vertices;
  double mean_in_mask = 0.0;
  double mean_out_mask = 0.0;
  double mean_ratio = 0.0;
};

/// Per-vertex change inside vs. outside the mask, relative to x*.
/// `invert` swaps the roles of the rectangle and its complement, as in the masked loss.
LocalizationReport localization_report(const LatentPath& path, const Generator& gen, const ImageBuffer& x_star,
                                       const MaskRegion& region, bool invert = false);

/// Same report from images that were already rendered.
LocalizationReport localization_report(const std::vector<ImageBuffer>& frames, const ImageBuffer& x_star,
                                       const MaskRegion& region, bool invert = false);

// ---------------------------------------------------------------------------
// Path interchange document

struct PathDocument {
  LatentPath path;
  double rest_length = 0.0;
  SeedSpec seed;
};

inline constexpr const char* kPathFormat = "maskpath.latent-path";
inline constexpr int kPathFormatVersion = 1;

/// JSON with every number written to 17 significant digits.
std::string serialize_path(const PathDocument& doc);
/// Throws ValidationError on schema violations (including an empty vertex list).
PathDocument parse_path(const std::string& text);

void write_path_file(const std::filesystem::path& file, const PathDocument& doc);
PathDocument read_path_file(const std::filesystem::path& file);

}  // namespace maskpath
