#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "maskpath/image.hpp"

namespace maskpath {

/// [0,1] → [0,255]: clamp, then round half up. Non-[0,1] values saturate.
std::uint8_t quantize_pixel(double v) noexcept;

/// Binary PGM (P5, maxval 255). Decoding maps byte b to b/255.
std::vector<std::uint8_t> encode_pgm(const ImageBuffer& image);
ImageBuffer decode_pgm(const std::vector<std::uint8_t>& bytes);

/// 8-bit grayscale PNG.
std::vector<std::uint8_t> encode_png(const ImageBuffer& image);
ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes);

void write_pgm(const std::filesystem::path& file, const ImageBuffer& image);
ImageBuffer read_pgm(const std::filesystem::path& file);
void write_png(const std::filesystem::path& file, const ImageBuffer& image);
ImageBuffer read_png(const std::filesystem::path& file);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& file);
void write_file_bytes(const std::filesystem::path& file, const std::vector<std::uint8_t>& bytes);

}  // namespace maskpath
