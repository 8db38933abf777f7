#include "maskpath/generator.hpp"

namespace maskpath {

std::unique_ptr<Generator> make_generator(const GeneratorConfig& config) {
  switch (config.kind) {
    case GeneratorKind::kBlobFace:
      return std::make_unique<BlobFaceGenerator>(
          BlobFaceOptions{config.seed, config.width, config.height, config.latent_dim});
    case GeneratorKind::kLinear:
      return std::make_unique<LinearGenerator>(
          LinearOptions{config.seed, config.width, config.height, config.latent_dim});
    case GeneratorKind::kExternal:
      return std::make_unique<ExternalGenerator>(
          ExternalOptions{config.command, config.width, config.height, config.latent_dim});
  }
  return nullptr;
}

}  // namespace maskpath
