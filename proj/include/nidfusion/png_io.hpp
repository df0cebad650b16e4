#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace nidfusion {

/// Decoded PNG samples, interleaved by channel, one uint16 per sample
/// regardless of bit depth.
struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;
};

/// Reads gray, gray+alpha, RGB, or RGBA PNGs at 8 or 16 bits. Palette images
/// are expanded to RGB. Throws Error(Io) or Error(Format).
RawImage read_png(const std::filesystem::path& path);

/// Writes `image` with its declared channel count (1 or 3) and bit depth
/// (8 or 16).
void write_png(const std::filesystem::path& path, const RawImage& image);

}  // namespace nidfusion
