#include "nidfusion/png_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <memory>

#include <png.h>

#include "nidfusion/error.hpp"

namespace nidfusion {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return f;
}

}  // namespace

RawImage read_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorKind::Format, path.string() + " is not a PNG file");
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorKind::Io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorKind::Io, "png_create_info_struct failed");
  }

  RawImage out;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Format, "corrupt PNG data in " + path.string());
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(n);
  if (out.bit_depth == 16) {
    // PNG stores 16-bit samples big-endian.
    for (std::size_t i = 0; i < n; ++i) {
      out.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = buffer[i];
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RawImage& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorKind::Format, "write_png supports 1 or 3 channels");
  }
  if (image.bit_depth != 8 && image.bit_depth != 16) {
    throw Error(ErrorKind::Format, "write_png supports 8 or 16 bit depth");
  }
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height * image.channels;
  if (image.samples.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "write_png: sample count does not match size");
  }

  const int bytes = image.bit_depth / 8;
  std::vector<png_byte> buffer(n * bytes);
  for (std::size_t i = 0; i < n; ++i) {
    if (bytes == 2) {
      buffer[2 * i] = static_cast<png_byte>(image.samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(image.samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(image.samples[i]);
    }
  }
  const std::size_t rowbytes = static_cast<std::size_t>(image.width) * image.channels * bytes;
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y) rows[y] = buffer.data() + rowbytes * y;

  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorKind::Io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorKind::Io, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, image.bit_depth,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace nidfusion
