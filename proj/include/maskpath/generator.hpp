#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "maskpath/image.hpp"

namespace maskpath {

enum class GeneratorKind { kBlobFace, kLinear, kExternal };

std::string to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(const std::string& name);

/// A latent-to-image map G: R^w → images of a fixed size.
///
/// Built-in generators are immutable after construction and may be shared
/// across threads. They also provide the vector-Jacobian product used to
/// chain image-space gradients back to the latent space.
class Generator {
 public:
  virtual ~Generator() = default;

  std::size_t latent_dim() const noexcept { return latent_dim_; }
  std::size_t output_width() const noexcept { return width_; }
  std::size_t output_height() const noexcept { return height_; }
  GeneratorKind kind() const noexcept { return kind_; }
  virtual bool supports_vjp() const noexcept { return true; }

  /// Throws DimensionError on wrong length, ValidationError on non-finite entries.
  virtual ImageBuffer generate(std::span<const double> z) const = 0;

  /// Jᵀ·upstream, J = ∂generate/∂z at z.
  virtual std::vector<double> vjp(std::span<const double> z, const ImageBuffer& upstream) const = 0;

  /// One image per latent, in order. Built-ins loop over generate().
  virtual std::vector<ImageBuffer> render_batch(std::span<const std::vector<double>> latents) const;

 protected:
  Generator(GeneratorKind kind, std::size_t latent_dim, std::size_t width, std::size_t height);
  void check_latent(std::span<const double> z) const;
  void check_upstream(const ImageBuffer& upstream) const;

 private:
  GeneratorKind kind_;
  std::size_t latent_dim_;
  std::size_t width_;
  std::size_t height_;
};

// ---------------------------------------------------------------------------
// Blob-face generator

enum class BlobRole : std::size_t { kHead = 0, kLeftEye, kRightEye, kNose, kMouth };
inline constexpr std::size_t kBlobCount = 5;

/// Rendered parameters of one blob, in normalized image coordinates.
struct BlobParams {
  double center_x = 0.5;
  double center_y = 0.5;
  double radius = 0.1;
  double intensity = 0.0;
};

/// Per-blob slice of the latent → parameter map:
///   param_k = mid_k + half_k · tanh(pre_k),   pre = weights · [z_block; z_shared] + bias
struct BlobSpec {
  BlobRole role;
  std::size_t block_offset;  // first latent coordinate owned by this blob
  std::size_t block_size;
  std::array<double, 4> mid;   // center_x, center_y, radius, intensity
  std::array<double, 4> half;
  std::vector<double> weights;  // 4 × (block_size + shared_size), row-major
  std::array<double, 4> bias;
};

struct BlobFaceOptions {
  std::uint64_t seed = 7;
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t latent_dim = 16;
};

/// Procedural "face" of five soft blobs over a background.
///
/// Each blob adds intensity · exp(−t/2) · (1 − t/9)³ for t = d²/r² < 9 (zero
/// beyond three radii), and the sum is squashed into (0,1) by a logistic
/// curve. Latent coordinates are split into a shared block (first
/// coordinates, feeding every blob) and one disjoint block per blob.
class BlobFaceGenerator final : public Generator {
 public:
  static constexpr double kBackground = 0.23;
  static constexpr double kSquashGain = 7.5;
  static constexpr double kSupportRadii = 3.0;

  explicit BlobFaceGenerator(const BlobFaceOptions& options = {});

  ImageBuffer generate(std::span<const double> z) const override;
  std::vector<double> vjp(std::span<const double> z, const ImageBuffer& upstream) const override;

  std::array<BlobParams, kBlobCount> blob_params(std::span<const double> z) const;
  const BlobSpec& spec(BlobRole role) const noexcept { return specs_[static_cast<std::size_t>(role)]; }
  std::size_t shared_size() const noexcept { return shared_size_; }
  const BlobFaceOptions& options() const noexcept { return options_; }

  /// Latent indices that feed only `role`.
  std::vector<std::size_t> block_indices(BlobRole role) const;

 private:
  void accumulate_field(const std::array<BlobParams, kBlobCount>& params, std::vector<double>& field) const;

  BlobFaceOptions options_;
  std::size_t shared_size_ = 0;
  std::array<BlobSpec, kBlobCount> specs_;
};

// ---------------------------------------------------------------------------
// Linear oracle generator

struct LinearOptions {
  std::uint64_t seed = 7;
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t latent_dim = 16;
};

/// image = offset + gain · (A·z + b), no clamping. A and b come from the seeded stream.
class LinearGenerator final : public Generator {
 public:
  static constexpr double kOffset = 0.5;
  static constexpr double kGain = 0.25;

  explicit LinearGenerator(const LinearOptions& options = {});

  ImageBuffer generate(std::span<const double> z) const override;
  std::vector<double> vjp(std::span<const double> z, const ImageBuffer& upstream) const override;

  /// Row-major pixels × latent_dim.
  std::span<const double> matrix() const noexcept { return matrix_; }
  std::span<const double> bias() const noexcept { return bias_; }

 private:
  std::vector<double> matrix_;
  std::vector<double> bias_;
};

// ---------------------------------------------------------------------------
// External adapter (forward-only)

struct ExternalOptions {
  std::vector<std::string> command;  // argv of the adapter process
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t latent_dim = 16;
};

/// Child process speaking the newline-delimited JSON adapter protocol on its stdin/stdout.
///
/// Handshake on construction; one request in flight at a time. Not thread-safe:
/// callers serialize access.
class AdapterConnection {
 public:
  AdapterConnection(const ExternalOptions& options);
  ~AdapterConnection();
  AdapterConnection(const AdapterConnection&) = delete;
  AdapterConnection& operator=(const AdapterConnection&) = delete;

  std::vector<ImageBuffer> request(std::span<const std::vector<double>> latents);

 private:
  void send_line(const std::string& line);
  std::string read_line();
  void shutdown() noexcept;

  ExternalOptions options_;
  int fd_ = -1;
  int pid_ = -1;
  std::uint64_t next_id_ = 1;
  std::string buffer_;
};

class ExternalGenerator final : public Generator {
 public:
  explicit ExternalGenerator(const ExternalOptions& options);

  bool supports_vjp() const noexcept override { return false; }
  ImageBuffer generate(std::span<const double> z) const override;
  /// Always throws UnsupportedGradientError.
  std::vector<double> vjp(std::span<const double> z, const ImageBuffer& upstream) const override;
  std::vector<ImageBuffer> render_batch(std::span<const std::vector<double>> latents) const override;

 private:
  mutable std::mutex mutex_;
  std::unique_ptr<AdapterConnection> connection_;
};

/// Everything needed to construct any generator kind.
struct GeneratorConfig {
  GeneratorKind kind = GeneratorKind::kBlobFace;
  std::uint64_t seed = 7;
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t latent_dim = 16;
  std::vector<std::string> command;  // external only
};

std::unique_ptr<Generator> make_generator(const GeneratorConfig& config);

/// Forward-only batch rendering through an external generator.
std::vector<ImageBuffer> external_render(const Generator& gen, std::span<const std::vector<double>> batch);

}  // namespace maskpath
