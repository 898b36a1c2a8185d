#include "traitlab/imageops.hpp"

#include <algorithm>
#include <cmath>

namespace traitlab::img {

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(
      std::clamp<long long>(std::llround(v), 0, 255));
}

void require_finite(const LandmarkSet& set, const char* which) {
  for (const Point& p : set.points)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw Error(errc::out_of_range,
                  std::string("non-finite coordinate in ") + which +
                      " landmark set");
}

}  // namespace

BoundingBox BoundingBox::clamped(int frame_width, int frame_height) const {
  BoundingBox b;
  b.left = std::clamp(left, 0, frame_width);
  b.right = std::clamp(right, 0, frame_width);
  b.top = std::clamp(top, 0, frame_height);
  b.bottom = std::clamp(bottom, 0, frame_height);
  if (b.right < b.left) b.right = b.left;
  if (b.bottom < b.top) b.bottom = b.top;
  return b;
}

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = {rotation[0], rotation[2], rotation[1], rotation[3]};
  inv.translation = {
      -inv.scale * (inv.rotation[0] * translation.x +
                    inv.rotation[1] * translation.y),
      -inv.scale * (inv.rotation[2] * translation.x +
                    inv.rotation[3] * translation.y)};
  return inv;
}

SimilarityTransform SimilarityTransform::from_angle(double scale,
                                                    double radians,
                                                    Point translation) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {scale, {c, -s, s, c}, translation};
}

SimilarityTransform estimate_similarity_transform(const LandmarkSet& src,
                                                  const LandmarkSet& dst) {
  require_finite(src, "source");
  require_finite(dst, "destination");

  double mx_s = 0, my_s = 0, mx_d = 0, my_d = 0;
  for (int i = 0; i < kLandmarkCount; ++i) {
    mx_s += src.points[i].x;
    my_s += src.points[i].y;
    mx_d += dst.points[i].x;
    my_d += dst.points[i].y;
  }
  mx_s /= kLandmarkCount;
  my_s /= kLandmarkCount;
  mx_d /= kLandmarkCount;
  my_d /= kLandmarkCount;

  // Treat points as complex numbers; the least-squares map dst ≈ a·src + t
  // over complex a is exactly uniform scale + rotation (no reflection).
  double den = 0, num_re = 0, num_im = 0;
  for (int i = 0; i < kLandmarkCount; ++i) {
    const double sx = src.points[i].x - mx_s;
    const double sy = src.points[i].y - my_s;
    const double dx = dst.points[i].x - mx_d;
    const double dy = dst.points[i].y - my_d;
    den += sx * sx + sy * sy;
    num_re += sx * dx + sy * dy;
    num_im += sx * dy - sy * dx;
  }
  if (den == 0.0)
    throw Error(errc::degenerate_configuration,
                "source landmarks are coincident");

  const double a_re = num_re / den;
  const double a_im = num_im / den;
  SimilarityTransform t;
  t.scale = std::hypot(a_re, a_im);
  if (t.scale == 0.0)
    throw Error(errc::degenerate_configuration,
                "similarity fit collapses to zero scale");
  const double c = a_re / t.scale;
  const double s = a_im / t.scale;
  t.rotation = {c, -s, s, c};
  t.translation = {mx_d - (a_re * mx_s - a_im * my_s),
                   my_d - (a_im * mx_s + a_re * my_s)};
  return t;
}

LandmarkSet compute_template(const std::vector<LandmarkSet>& landmark_sets) {
  if (landmark_sets.empty())
    throw Error(errc::empty_input, "no landmark sets to average");
  LandmarkSet mean;
  for (const LandmarkSet& set : landmark_sets)
    for (int i = 0; i < kLandmarkCount; ++i) {
      mean.points[i].x += set.points[i].x;
      mean.points[i].y += set.points[i].y;
    }
  const double n = static_cast<double>(landmark_sets.size());
  for (Point& p : mean.points) {
    p.x /= n;
    p.y /= n;
  }
  return mean;
}

LandmarkSet normalize_template(const LandmarkSet& mean_landmarks,
                               int out_size, double fill_fraction) {
  require_finite(mean_landmarks, "template");
  double min_x = mean_landmarks.points[0].x, max_x = min_x;
  double min_y = mean_landmarks.points[0].y, max_y = min_y;
  for (const Point& p : mean_landmarks.points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double extent = std::max(max_x - min_x, max_y - min_y);
  if (extent == 0.0)
    throw Error(errc::degenerate_configuration,
                "template landmarks are coincident");
  const double scale = fill_fraction * out_size / extent;
  const double cx = (min_x + max_x) / 2, cy = (min_y + max_y) / 2;
  const double half = out_size / 2.0;
  LandmarkSet out;
  for (int i = 0; i < kLandmarkCount; ++i) {
    out.points[i].x = (mean_landmarks.points[i].x - cx) * scale + half;
    out.points[i].y = (mean_landmarks.points[i].y - cy) * scale + half;
  }
  return out;
}

std::array<double, 3> sample_bilinear(const FrameImage& frame, double x,
                                      double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const auto texel = [&frame](int xi, int yi) -> std::array<double, 3> {
    if (xi < 0 || xi >= frame.width || yi < 0 || yi >= frame.height)
      return {0.0, 0.0, 0.0};  // black outside the source
    const std::uint8_t* p = frame.at(xi, yi);
    return {static_cast<double>(p[0]), static_cast<double>(p[1]),
            static_cast<double>(p[2])};
  };
  const std::array<double, 3> p00 = texel(x0, y0);
  const std::array<double, 3> p10 = texel(x0 + 1, y0);
  const std::array<double, 3> p01 = texel(x0, y0 + 1);
  const std::array<double, 3> p11 = texel(x0 + 1, y0 + 1);
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c)
    out[c] = (1 - fy) * ((1 - fx) * p00[c] + fx * p10[c]) +
             fy * ((1 - fx) * p01[c] + fx * p11[c]);
  return out;
}

FrameImage make_face_condition(const FrameImage& frame,
                               const LandmarkSet& landmarks,
                               const LandmarkSet& face_template) {
  LandmarkSet clamped = landmarks;
  for (Point& p : clamped.points) {
    p.x = std::clamp(p.x, 0.0, static_cast<double>(frame.width - 1));
    p.y = std::clamp(p.y, 0.0, static_cast<double>(frame.height - 1));
  }
  const SimilarityTransform to_template =
      estimate_similarity_transform(clamped, face_template);
  const SimilarityTransform to_frame = to_template.inverse();

  FrameImage out(kConditionSize, kConditionSize);
  for (int y = 0; y < kConditionSize; ++y)
    for (int x = 0; x < kConditionSize; ++x) {
      const Point src = to_frame.apply({static_cast<double>(x),
                                        static_cast<double>(y)});
      const std::array<double, 3> v = sample_bilinear(frame, src.x, src.y);
      std::uint8_t* dst = out.at(x, y);
      dst[0] = to_byte(v[0]);
      dst[1] = to_byte(v[1]);
      dst[2] = to_byte(v[2]);
    }
  return out;
}

BackgroundResult make_background_condition(const FrameImage& frame,
                                           BoundingBox face_box) {
  if (frame.width < kConditionSize || frame.height < kConditionSize)
    throw Error(errc::frame_too_small,
                "background condition needs at least a 256x256 frame");
  if (face_box.left > face_box.right || face_box.top > face_box.bottom)
    throw Error(errc::out_of_range, "face box edges are inverted");
  const BoundingBox box = face_box.clamped(frame.width, frame.height);

  const std::size_t total =
      static_cast<std::size_t>(frame.width) * frame.height;
  const std::size_t inside =
      static_cast<std::size_t>(box.width()) * box.height();

  BackgroundResult result;
  result.used_global_mean = inside == total;

  double sum[3] = {0, 0, 0};
  std::size_t counted = 0;
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x) {
      if (!result.used_global_mean && box.contains(x, y)) continue;
      const std::uint8_t* p = frame.at(x, y);
      sum[0] += p[0];
      sum[1] += p[1];
      sum[2] += p[2];
      ++counted;
    }
  for (int c = 0; c < 3; ++c)
    result.fill[c] =
        static_cast<std::uint8_t>(std::llround(sum[c] / counted));

  FrameImage filled = frame;
  for (int y = box.top; y < box.bottom; ++y)
    for (int x = box.left; x < box.right; ++x) {
      std::uint8_t* p = filled.at(x, y);
      p[0] = result.fill[0];
      p[1] = result.fill[1];
      p[2] = result.fill[2];
    }

  const double face_center = (box.left + box.right) / 2.0;
  const double frame_center = frame.width / 2.0;
  result.right_anchored = face_center < frame_center;
  const int x0 = result.right_anchored ? frame.width - kConditionSize : 0;

  result.image = FrameImage(kConditionSize, kConditionSize);
  for (int y = 0; y < kConditionSize; ++y)
    for (int x = 0; x < kConditionSize; ++x) {
      const std::uint8_t* src = filled.at(x0 + x, y);
      std::uint8_t* dst = result.image.at(x, y);
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
    }
  return result;
}

FrameImage make_entire_frame_condition(const FrameImage& frame) {
  if (frame.width <= 0 || frame.height <= 0)
    throw Error(errc::empty_input, "cannot resize an empty frame");
  FrameImage out(kEntireFrameWidth, kEntireFrameHeight);
  if (frame.width == kEntireFrameWidth &&
      frame.height == kEntireFrameHeight)
    return frame;
  const double rx = static_cast<double>(frame.width) / kEntireFrameWidth;
  const double ry = static_cast<double>(frame.height) / kEntireFrameHeight;
  for (int y = 0; y < kEntireFrameHeight; ++y) {
    // Clamp the sample point into the frame (edge replication): the border
    // output pixels map just outside the source and must not mix in black.
    const double sy =
        std::clamp((y + 0.5) * ry - 0.5, 0.0, frame.height - 1.0);
    for (int x = 0; x < kEntireFrameWidth; ++x) {
      const double sx =
          std::clamp((x + 0.5) * rx - 0.5, 0.0, frame.width - 1.0);
      const std::array<double, 3> v = sample_bilinear(frame, sx, sy);
      std::uint8_t* dst = out.at(x, y);
      dst[0] = to_byte(v[0]);
      dst[1] = to_byte(v[1]);
      dst[2] = to_byte(v[2]);
    }
  }
  return out;
}

SimilarityStat image_set_sigma(const std::vector<FrameImage>& images) {
  if (images.empty())
    throw Error(errc::empty_input, "sigma needs at least one image");
  const int w = images.front().width;
  const int h = images.front().height;
  for (const FrameImage& image : images)
    if (image.width != w || image.height != h ||
        image.pixels.size() != images.front().pixels.size())
      throw Error(errc::dimension_mismatch,
                  "sigma requires equally sized images");

  const std::size_t size = images.front().pixels.size();
  if (size == 0)
    throw Error(errc::empty_input, "sigma over zero-pixel images");

  // Fixed image-major, raster-order summation for bit-stable results.
  std::vector<double> mean(size, 0.0);
  for (const FrameImage& image : images)
    for (std::size_t i = 0; i < size; ++i) mean[i] += image.pixels[i];
  const double n = static_cast<double>(images.size());
  for (double& m : mean) m /= n;

  double acc = 0.0;
  for (const FrameImage& image : images)
    for (std::size_t i = 0; i < size; ++i) {
      const double d = image.pixels[i] - mean[i];
      acc += d * d;
    }
  return {std::sqrt(acc / (n * static_cast<double>(size)))};
}

}  // namespace traitlab::img
