#pragma once

#include <array>
#include <vector>

#include "traitlab/image.hpp"

namespace traitlab::img {

// Rotation + uniform scale + translation. rotation is row-major 2x2,
// orthonormal with determinant +1 (reflections never produced).
struct SimilarityTransform {
  double scale = 1.0;
  std::array<double, 4> rotation{1.0, 0.0, 0.0, 1.0};
  Point translation{};

  Point apply(Point p) const {
    return {scale * (rotation[0] * p.x + rotation[1] * p.y) + translation.x,
            scale * (rotation[2] * p.x + rotation[3] * p.y) + translation.y};
  }
  SimilarityTransform inverse() const;
  static SimilarityTransform from_angle(double scale, double radians,
                                        Point translation);
};

// Pooled standard deviation of an image set about its mean image.
struct SimilarityStat {
  double sigma = 0.0;
};

// Background-condition output plus the bookkeeping the pipeline logs.
struct BackgroundResult {
  FrameImage image;                    // 256x256 crop
  std::array<std::uint8_t, 3> fill{};  // value written over the face box
  bool used_global_mean = false;       // box covered the frame; global mean
  bool right_anchored = false;         // crop window hugged the right edge
};

inline constexpr int kConditionSize = 256;
inline constexpr int kEntireFrameWidth = 465;
inline constexpr int kEntireFrameHeight = 256;

// Least-squares fit of dst ≈ scale·R·src + t over all 68 points
// (closed form on centroid-demeaned coordinates, reflection-free).
// Throws DegenerateConfiguration when src (or the fit) collapses.
SimilarityTransform estimate_similarity_transform(const LandmarkSet& src,
                                                  const LandmarkSet& dst);

// Pointwise arithmetic mean of the given landmark sets.
LandmarkSet compute_template(const std::vector<LandmarkSet>& landmark_sets);

// Maps a mean landmark set into the out_size x out_size output frame:
// uniform scale so the landmark bounding box's larger side spans
// fill_fraction of the output, centered.
LandmarkSet normalize_template(const LandmarkSet& mean_landmarks,
                               int out_size = kConditionSize,
                               double fill_fraction = 0.6);

// Bilinear sample at real-valued coordinates; out-of-bounds reads are black.
std::array<double, 3> sample_bilinear(const FrameImage& frame, double x,
                                      double y);

// Aligns the face onto the template frame: output(x, y) is the frame
// sampled at T⁻¹(x, y) where T = estimate_similarity_transform(landmarks,
// the template). Landmarks are clamped to frame bounds on use.
FrameImage make_face_condition(const FrameImage& frame,
                               const LandmarkSet& landmarks,
                               const LandmarkSet& face_template);

// Blanks the face box with the mean of everything outside it, then crops a
// 256-wide window from the edge away from the face (top-anchored
// vertically). A box that covers the frame falls back to the global mean
// and is flagged rather than rejected.
BackgroundResult make_background_condition(const FrameImage& frame,
                                           BoundingBox face_box);

// Bilinear resize of the whole frame to 465x256 (width x height).
FrameImage make_entire_frame_condition(const FrameImage& frame);

// σ = sqrt(mean over images/pixels/channels of (value − mean image)²).
// Deterministic summation order: image-major, raster order.
SimilarityStat image_set_sigma(const std::vector<FrameImage>& images);

}  // namespace traitlab::img
