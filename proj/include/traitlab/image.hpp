#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "traitlab/errors.hpp"

namespace traitlab::img {

// 8-bit RGB raster, row-major, channel order R,G,B.
struct FrameImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  FrameImage() = default;
  FrameImage(int w, int h)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  static FrameImage constant(int w, int h, std::uint8_t r, std::uint8_t g,
                             std::uint8_t b) {
    FrameImage out(w, h);
    for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
      out.pixels[i] = r;
      out.pixels[i + 1] = g;
      out.pixels[i + 2] = b;
    }
    return out;
  }

  std::uint8_t* at(int x, int y) {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  friend bool operator==(const FrameImage&, const FrameImage&) = default;
};

struct Point {
  double x = 0;
  double y = 0;
};

inline constexpr int kLandmarkCount = 68;

// 68-point facial geometry in pixel units (iBUG annotation layout).
struct LandmarkSet {
  std::array<Point, kLandmarkCount> points{};
};

// Half-open pixel box [left, right) x [top, bottom).
struct BoundingBox {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  int width() const { return right - left; }
  int height() const { return bottom - top; }
  bool contains(int x, int y) const {
    return x >= left && x < right && y >= top && y < bottom;
  }
  BoundingBox clamped(int frame_width, int frame_height) const;
};

}  // namespace traitlab::img
