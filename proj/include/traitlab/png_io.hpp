#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "traitlab/image.hpp"

namespace traitlab::img {

// Minimal PNG codec backed by zlib. Writes 8-bit RGB, non-interlaced;
// reads back 8-bit gray/RGB/RGBA non-interlaced images (palette and 16-bit
// depths are out of scope for this pipeline).
std::vector<std::uint8_t> encode_png(const FrameImage& image);
FrameImage decode_png(std::span<const std::uint8_t> bytes);

void write_png(const std::string& path, const FrameImage& image);
FrameImage read_png(const std::string& path);

}  // namespace traitlab::img
