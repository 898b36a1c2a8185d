#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "traitlab/conditions.hpp"
#include "traitlab/corpus.hpp"
#include "traitlab/trainkit.hpp"

namespace traitlab::cli {

// Everything the six commands can consume. Each command validates the
// subset it needs; a config file fills values the command line left unset.
struct Options {
  std::string manifest;     // corpus manifest (split)
  std::string landmarks;    // landmark records (preprocess)
  std::string frames;       // raw frame directory (preprocess)
  std::string splits;       // split manifest file, or directory of three
  std::string images;       // preprocessed image directory
  std::string truth;        // ground-truth trait table
  std::string predictions;  // prediction directory (evaluate)
  std::string checkpoint;   // model file (predict)
  std::string legacy;       // user-supplied split manifest to audit (split)
  std::string init_face;    // frozen face branch checkpoint (train face_bg)
  std::string init_bg;      // frozen bg branch checkpoint (train face_bg)
  std::string out;          // output file or directory

  std::string condition = "face";  // face|background|face_bg|entire_frame
  std::string preprocess_set;      // preprocess: condition or "all"
  std::string sigma_filter;        // sigma: optional condition filter
  std::string split = "testing";   // split predicted by cmd_predict
  std::string quotas;              // "training,testing,validation" uid counts

  train::TrainConfig train_config;
  double alpha = 0.05;
  int num_models = 3;
  bool strict = true;  // confound guard; --allow-leakage flips it
};

int cmd_split(const Options& opt);
int cmd_preprocess(const Options& opt);
int cmd_train(const Options& opt);
int cmd_predict(const Options& opt);
int cmd_evaluate(const Options& opt);
int cmd_sigma(const Options& opt);

// Parse args (program name already removed), overlay --config values,
// dispatch, and map thrown Errors onto process exit codes.
int run_cli(const std::vector<std::string>& args);

// "<clip_id>.<frame_index>.<token>.png"
std::string condition_image_name(const std::string& clip_id, int frame_index,
                                 Condition condition);

// Inverse of the naming conventions; nullopt when the name does not match.
std::optional<std::pair<std::string, int>> parse_frame_image_name(
    const std::string& filename);
std::optional<std::tuple<std::string, int, Condition>>
parse_condition_image_name(const std::string& filename);

// Accepts a combined split manifest file or a directory holding
// training.csv / testing.csv / validation.csv.
corpus::SplitManifest read_splits(const std::filesystem::path& path);

// Preprocessed image tree indexed as clip_id -> condition -> frames,
// each condition's list sorted by frame index.
struct ImageIndex {
  std::map<std::string,
           std::array<std::vector<std::pair<int, std::string>>, 4>>
      clips;

  const std::vector<std::pair<int, std::string>>& frames(
      const std::string& clip_id, Condition condition) const;
};
ImageIndex scan_condition_images(const std::filesystem::path& dir);

// "a,b,c" -> per-split uid quotas.
corpus::SplitQuota parse_quotas(const std::string& text);

}  // namespace traitlab::cli
