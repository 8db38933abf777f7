#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace maskpath {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ValidationError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Little-endian IEEE-754 binary32 raster, as carried by the adapter protocol.
std::vector<std::uint8_t> pack_f32_le(std::span<const double> values);
std::vector<double> unpack_f32_le(std::span<const std::uint8_t> bytes);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// "%.17g" formatting: round-trips every finite double.
std::string format_double(double v);

}  // namespace maskpath
