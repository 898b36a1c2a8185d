#include "traitlab/png_io.hpp"

#include <zlib.h>

#include <cstdlib>
#include <cstring>
#include <fstream>

namespace traitlab::img {

namespace {

constexpr std::uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) |
         (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::uint8_t* data, std::size_t size) {
  put_u32(out, static_cast<std::uint32_t>(size));
  const std::size_t type_offset = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data, data + size);
  const uLong crc =
      crc32(0, out.data() + type_offset, static_cast<uInt>(4 + size));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const FrameImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() !=
          static_cast<std::size_t>(image.width) * image.height * 3)
    throw Error(errc::dimension_mismatch, "encode_png: inconsistent raster");

  const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * image.height);
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);  // filter type None
    const std::uint8_t* row = image.pixels.data() + y * stride;
    raw.insert(raw.end(), row, row + stride);
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw Error(errc::io_failure, "encode_png: deflate failed");
  compressed.resize(bound);

  std::vector<std::uint8_t> out(kSignature, kSignature + 8);
  std::uint8_t ihdr[13];
  ihdr[0] = static_cast<std::uint8_t>(image.width >> 24);
  ihdr[1] = static_cast<std::uint8_t>(image.width >> 16);
  ihdr[2] = static_cast<std::uint8_t>(image.width >> 8);
  ihdr[3] = static_cast<std::uint8_t>(image.width);
  ihdr[4] = static_cast<std::uint8_t>(image.height >> 24);
  ihdr[5] = static_cast<std::uint8_t>(image.height >> 16);
  ihdr[6] = static_cast<std::uint8_t>(image.height >> 8);
  ihdr[7] = static_cast<std::uint8_t>(image.height);
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 2;   // color type: truecolor RGB
  ihdr[10] = 0;  // compression
  ihdr[11] = 0;  // filter
  ihdr[12] = 0;  // interlace
  append_chunk(out, "IHDR", ihdr, sizeof(ihdr));
  append_chunk(out, "IDAT", compressed.data(), compressed.size());
  append_chunk(out, "IEND", nullptr, 0);
  return out;
}

FrameImage decode_png(std::span<const std::uint8_t> bytes) {
  const auto fail = [](const std::string& why) -> FrameImage {
    throw Error(errc::parse_failure, "decode_png: " + why);
  };

  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
    return fail("bad signature");

  std::size_t pos = 8;
  int width = 0, height = 0, color_type = -1;
  std::vector<std::uint8_t> idat;
  bool seen_end = false;
  while (pos + 8 <= bytes.size() && !seen_end) {
    const std::uint32_t length = read_u32(bytes.data() + pos);
    if (pos + 12 + length > bytes.size()) return fail("truncated chunk");
    const std::uint8_t* type = bytes.data() + pos + 4;
    const std::uint8_t* data = bytes.data() + pos + 8;
    const std::uint32_t crc_stored = read_u32(data + length);
    const uLong crc_actual = crc32(0, type, static_cast<uInt>(4 + length));
    if (crc_stored != static_cast<std::uint32_t>(crc_actual))
      return fail("chunk crc mismatch");

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (length != 13) return fail("bad IHDR length");
      width = static_cast<int>(read_u32(data));
      height = static_cast<int>(read_u32(data + 4));
      const int bit_depth = data[8];
      color_type = data[9];
      if (bit_depth != 8) return fail("unsupported bit depth");
      if (color_type != 0 && color_type != 2 && color_type != 6)
        return fail("unsupported color type");
      if (data[12] != 0) return fail("interlaced images unsupported");
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + length);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      seen_end = true;
    }
    pos += 12 + length;
  }
  if (width <= 0 || height <= 0 || idat.empty())
    return fail("missing IHDR or IDAT");

  const int channels = color_type == 2 ? 3 : (color_type == 6 ? 4 : 1);
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  std::vector<std::uint8_t> raw((stride + 1) * height);
  uLongf raw_size = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_size, idat.data(),
                 static_cast<uLong>(idat.size())) != Z_OK ||
      raw_size != raw.size())
    return fail("inflate failed");

  // Undo per-row filters in place, then convert to RGB.
  std::vector<std::uint8_t> prev(stride, 0);
  FrameImage image(width, height);
  for (int y = 0; y < height; ++y) {
    std::uint8_t* row = raw.data() + y * (stride + 1);
    const int filter = row[0];
    std::uint8_t* cur = row + 1;
    for (std::size_t i = 0; i < stride; ++i) {
      const int left = i >= static_cast<std::size_t>(channels)
                           ? cur[i - channels]
                           : 0;
      const int up = prev[i];
      const int up_left = i >= static_cast<std::size_t>(channels)
                              ? prev[i - channels]
                              : 0;
      int value = cur[i];
      switch (filter) {
        case 0:
          break;
        case 1:
          value += left;
          break;
        case 2:
          value += up;
          break;
        case 3:
          value += (left + up) / 2;
          break;
        case 4:
          value += paeth(left, up, up_left);
          break;
        default:
          return fail("unknown filter type");
      }
      cur[i] = static_cast<std::uint8_t>(value);
    }
    std::memcpy(prev.data(), cur, stride);

    std::uint8_t* dst = image.at(0, y);
    if (channels == 3) {
      std::memcpy(dst, cur, stride);
    } else if (channels == 4) {
      for (int x = 0; x < width; ++x) {
        dst[x * 3] = cur[x * 4];
        dst[x * 3 + 1] = cur[x * 4 + 1];
        dst[x * 3 + 2] = cur[x * 4 + 2];
      }
    } else {
      for (int x = 0; x < width; ++x) {
        dst[x * 3] = dst[x * 3 + 1] = dst[x * 3 + 2] = cur[x];
      }
    }
  }
  return image;
}

void write_png(const std::string& path, const FrameImage& image) {
  const std::vector<std::uint8_t> bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(errc::io_failure, "cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(errc::io_failure, "short write: " + path);
}

FrameImage read_png(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_failure, "cannot open for reading: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

}  // namespace traitlab::img
