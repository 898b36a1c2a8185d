// Python bindings for the analysis core: split building and leak auditing,
// condition image construction, set statistics, and the correlation
// machinery. Images cross the boundary as (h, w, 3) uint8 numpy arrays,
// landmark sets as (68, 2) float64.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "traitlab/corpus.hpp"
#include "traitlab/errors.hpp"
#include "traitlab/image.hpp"
#include "traitlab/imageops.hpp"
#include "traitlab/stats.hpp"
#include "traitlab/trainkit.hpp"

namespace py = pybind11;
using namespace traitlab;

namespace {

using ImageArray = py::array_t<std::uint8_t, py::array::c_style |
                                                 py::array::forcecast>;
using CoordArray =
    py::array_t<double, py::array::c_style | py::array::forcecast>;

img::FrameImage to_frame(const ImageArray& array) {
  if (array.ndim() != 3 || array.shape(2) != 3)
    throw Error(errc::dimension_mismatch,
                "expected an (h, w, 3) uint8 image array");
  img::FrameImage frame(static_cast<int>(array.shape(1)),
                        static_cast<int>(array.shape(0)));
  std::memcpy(frame.pixels.data(), array.data(), frame.pixels.size());
  return frame;
}

py::array_t<std::uint8_t> from_frame(const img::FrameImage& frame) {
  py::array_t<std::uint8_t> out({frame.height, frame.width, 3});
  std::memcpy(out.mutable_data(), frame.pixels.data(), frame.pixels.size());
  return out;
}

img::LandmarkSet to_landmarks(const CoordArray& array) {
  if (array.ndim() != 2 || array.shape(0) != img::kLandmarkCount ||
      array.shape(1) != 2)
    throw Error(errc::dimension_mismatch,
                "expected a (68, 2) landmark array");
  img::LandmarkSet set;
  const double* data = array.data();
  for (int i = 0; i < img::kLandmarkCount; ++i)
    set.points[i] = {data[2 * i], data[2 * i + 1]};
  return set;
}

py::array_t<double> from_landmarks(const img::LandmarkSet& set) {
  py::array_t<double> out({img::kLandmarkCount, 2});
  double* data = out.mutable_data();
  for (int i = 0; i < img::kLandmarkCount; ++i) {
    data[2 * i] = set.points[i].x;
    data[2 * i + 1] = set.points[i].y;
  }
  return out;
}

std::vector<corpus::ClipRef> parse_all(const std::vector<std::string>& names) {
  std::vector<corpus::ClipRef> clips;
  clips.reserve(names.size());
  for (const std::string& name : names)
    clips.push_back(corpus::parse_clip_id(name));
  return clips;
}

std::vector<std::string> names_of(const std::vector<corpus::ClipRef>& clips) {
  std::vector<std::string> names;
  names.reserve(clips.size());
  for (const corpus::ClipRef& c : clips) names.push_back(c.clip_id);
  return names;
}

py::dict correlation_dict(const stats::CorrelationResult& r) {
  py::dict out;
  out["rho"] = r.rho;
  out["n"] = r.n;
  out["z_prime"] = r.z_prime;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "traitlab core: leakage-aware splits, condition images, "
            "correlation statistics";

  py::register_exception<Error>(m, "TraitlabError");

  // ---- corpus ----
  m.def(
      "parse_clip_id",
      [](const std::string& name) {
        const corpus::ClipRef ref = corpus::parse_clip_id(name);
        return py::make_tuple(ref.uid, ref.segment);
      },
      py::arg("name"),
      "Split a '<video>.<segment>.<ext>' clip name into (uid, segment).");

  m.def(
      "build_splits",
      [](const std::vector<std::string>& names, int training, int testing,
         int validation) {
        const corpus::SplitManifest manifest = corpus::build_splits(
            parse_all(names), {training, testing, validation});
        py::dict out;
        out["training"] = names_of(manifest.training);
        out["testing"] = names_of(manifest.testing);
        out["validation"] = names_of(manifest.validation);
        return out;
      },
      py::arg("names"), py::arg("training"), py::arg("testing"),
      py::arg("validation"),
      "Group clips by uid and assign whole uids to splits per the quotas.");

  m.def(
      "overlap_stats",
      [](const std::vector<std::string>& train,
         const std::vector<std::string>& test) {
        const corpus::OverlapReport report =
            corpus::overlap_stats(parse_all(train), parse_all(test));
        py::dict out;
        out["test_contaminated_fraction"] = report.test_contaminated_fraction;
        out["train_contaminated_fraction"] =
            report.train_contaminated_fraction;
        out["shared_uids"] = report.shared_uids;
        return out;
      },
      py::arg("train"), py::arg("test"),
      "Fraction of each side whose uid also appears on the other side.");

  // ---- imageops ----
  m.def(
      "entire_frame_condition",
      [](const ImageArray& frame) {
        return from_frame(img::make_entire_frame_condition(to_frame(frame)));
      },
      py::arg("frame"), "Bilinear resize of the whole frame to 465x256.");

  m.def(
      "background_condition",
      [](const ImageArray& frame, int left, int top, int right, int bottom) {
        const img::BackgroundResult result = img::make_background_condition(
            to_frame(frame), {left, top, right, bottom});
        py::dict meta;
        meta["fill"] = py::make_tuple(result.fill[0], result.fill[1],
                                      result.fill[2]);
        meta["used_global_mean"] = result.used_global_mean;
        meta["right_anchored"] = result.right_anchored;
        return py::make_tuple(from_frame(result.image), meta);
      },
      py::arg("frame"), py::arg("left"), py::arg("top"), py::arg("right"),
      py::arg("bottom"),
      "Blank the face box with the outside mean and crop 256x256 away from "
      "it; returns (image, meta).");

  m.def(
      "face_condition",
      [](const ImageArray& frame, const CoordArray& landmarks,
         const CoordArray& face_template) {
        return from_frame(img::make_face_condition(
            to_frame(frame), to_landmarks(landmarks),
            to_landmarks(face_template)));
      },
      py::arg("frame"), py::arg("landmarks"), py::arg("template"),
      "Warp the face onto the aligned template frame (256x256).");

  m.def(
      "compute_template",
      [](const std::vector<CoordArray>& landmark_sets) {
        std::vector<img::LandmarkSet> sets;
        sets.reserve(landmark_sets.size());
        for (const CoordArray& array : landmark_sets)
          sets.push_back(to_landmarks(array));
        return from_landmarks(img::compute_template(sets));
      },
      py::arg("landmark_sets"),
      "Pointwise mean of the given landmark sets.");

  m.def(
      "normalize_template",
      [](const CoordArray& mean_landmarks, int out_size,
         double fill_fraction) {
        return from_landmarks(img::normalize_template(
            to_landmarks(mean_landmarks), out_size, fill_fraction));
      },
      py::arg("mean_landmarks"), py::arg("out_size") = img::kConditionSize,
      py::arg("fill_fraction") = 0.6,
      "Scale and center a mean landmark set inside the output frame.");

  m.def(
      "image_set_sigma",
      [](const std::vector<ImageArray>& arrays) {
        std::vector<img::FrameImage> images;
        images.reserve(arrays.size());
        for (const ImageArray& array : arrays)
          images.push_back(to_frame(array));
        return img::image_set_sigma(images).sigma;
      },
      py::arg("images"),
      "Pooled standard deviation of an image set about its mean image.");

  m.def(
      "extract_features",
      [](const ImageArray& frame) {
        const train::Features features =
            train::extract_features(to_frame(frame));
        py::array_t<double> out(static_cast<py::ssize_t>(features.size()));
        std::copy(features.begin(), features.end(), out.mutable_data());
        return out;
      },
      py::arg("frame"),
      "8x8 grayscale feature map in [0,1], flattened to 64 values.");

  // ---- stats ----
  m.def(
      "pearson",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        return correlation_dict(stats::pearson(x, y));
      },
      py::arg("x"), py::arg("y"),
      "Pearson correlation with sample count and Fisher z'.");

  m.def("fisher_z", &stats::fisher_z, py::arg("rho"),
        "arctanh transform of a correlation coefficient.");
  m.def("p_from_z", &stats::p_from_z, py::arg("z_obs"),
        "One-tailed upper probability of |z_obs| under the standard normal.");

  m.def(
      "compare_correlations",
      [](double rho1, int n1, double rho2, int n2) {
        stats::CorrelationResult r1, r2;
        r1.rho = rho1;
        r1.n = n1;
        r1.z_prime = stats::fisher_z(rho1);
        r2.rho = rho2;
        r2.n = n2;
        r2.z_prime = stats::fisher_z(rho2);
        const stats::ComparisonResult cmp =
            stats::compare_correlations(r1, r2);
        py::dict out;
        out["z_obs"] = cmp.z_obs;
        out["p"] = cmp.p;
        return out;
      },
      py::arg("rho1"), py::arg("n1"), py::arg("rho2"), py::arg("n2"),
      "Fisher z comparison of two correlations: z_obs and its p-value.");

  m.def(
      "significance",
      [](double p, double alpha, int num_models) {
        const stats::SignificanceDecision d =
            stats::significance(p, alpha, num_models);
        py::dict out;
        out["alpha_corrected"] = d.alpha_corrected;
        out["significant"] = d.significant;
        return out;
      },
      py::arg("p"), py::arg("alpha") = 0.05, py::arg("num_models") = 3,
      "Bonferroni-corrected significance decision.");
}
