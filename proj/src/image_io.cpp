#include "maskpath/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "maskpath/errors.hpp"

namespace maskpath {

std::uint8_t quantize_pixel(double v) noexcept {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

namespace {

std::vector<double> dequantize(const std::uint8_t* bytes, std::size_t count) {
  std::vector<double> px(count);
  for (std::size_t i = 0; i < count; ++i) px[i] = static_cast<double>(bytes[i]) / 255.0;
  return px;
}

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string next_token(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  for (;;) {
    while (pos < b.size() && std::isspace(b[pos])) ++pos;
    if (pos < b.size() && b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string tok;
  while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#') tok.push_back(static_cast<char>(b[pos++]));
  if (tok.empty()) throw ValidationError("truncated PGM header");
  return tok;
}

std::size_t parse_dim(const std::string& tok) {
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(tok, &used);
  } catch (const std::exception&) {
    throw ValidationError("bad PGM header field '" + tok + "'");
  }
  if (used != tok.size() || v == 0) throw ValidationError("bad PGM header field '" + tok + "'");
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_pgm(const ImageBuffer& image) {
  const std::string header =
      "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + image.size());
  for (double v : image.pixels()) out.push_back(quantize_pixel(v));
  return out;
}

ImageBuffer decode_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  if (next_token(bytes, pos) != "P5") throw ValidationError("not a binary PGM (P5) file");
  const std::size_t w = parse_dim(next_token(bytes, pos));
  const std::size_t h = parse_dim(next_token(bytes, pos));
  if (parse_dim(next_token(bytes, pos)) != 255) throw ValidationError("only maxval 255 PGM is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ValidationError("truncated PGM header");
  ++pos;  // single whitespace before raster
  if (bytes.size() - pos != w * h) {
    throw ValidationError("PGM raster has " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                          std::to_string(w * h));
  }
  return ImageBuffer(w, h, dequantize(bytes.data() + pos, w * h));
}

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

struct PngReadCursor {
  const std::vector<std::uint8_t>* bytes;
  std::size_t pos;
};

void png_read_from_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + length > cur->bytes->size()) png_error(png, "truncated PNG stream");
  std::memcpy(data, cur->bytes->data() + cur->pos, length);
  cur->pos += length;
}

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw ValidationError(std::string("PNG: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageBuffer& image) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (png == nullptr) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> raster(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) raster[i] = quantize_pixel(image.pixels()[i]);
  try {
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < image.height(); ++y) png_write_row(png, raster.data() + y * image.width());
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

ImageBuffer decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw ValidationError("not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (png == nullptr) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngReadCursor cursor{&bytes, 0};
  std::vector<std::uint8_t> raster;
  std::size_t w = 0;
  std::size_t h = 0;
  try {
    png_set_read_fn(png, &cursor, png_read_from_vector);
    png_read_info(png, info);
    w = png_get_image_width(png, info);
    h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY || depth != 8) throw ValidationError("only 8-bit grayscale PNG is supported");
    raster.resize(w * h);
    for (std::size_t y = 0; y < h; ++y) png_read_row(png, raster.data() + y * w, nullptr);
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return ImageBuffer(w, h, dequantize(raster.data(), raster.size()));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + file.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& file, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("short write to " + file.string());
}

void write_pgm(const std::filesystem::path& file, const ImageBuffer& image) {
  write_file_bytes(file, encode_pgm(image));
}
ImageBuffer read_pgm(const std::filesystem::path& file) { return decode_pgm(read_file_bytes(file)); }
void write_png(const std::filesystem::path& file, const ImageBuffer& image) {
  write_file_bytes(file, encode_png(image));
}
ImageBuffer read_png(const std::filesystem::path& file) { return decode_png(read_file_bytes(file)); }

}  // namespace maskpath
