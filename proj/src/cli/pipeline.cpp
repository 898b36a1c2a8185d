#include <algorithm>
#include <charconv>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "traitlab/commands.hpp"
#include "traitlab/errors.hpp"
#include "traitlab/formats.hpp"

namespace traitlab::cli {
namespace {

namespace fs = std::filesystem;

template <typename T>
T parse_value(const std::string& text, const char* key) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw Error(errc::parse_failure,
                std::string("config key ") + key + ": bad value '" + text + "'");
  return value;
}

bool parse_bool(const std::string& text, const char* key) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error(errc::parse_failure, std::string("config key ") + key +
                                       ": expected true/false, got '" + text +
                                       "'");
}

// One subcommand's config surface: key -> setter, applied only for keys the
// command line did not provide.
using Setters = std::map<std::string, std::function<void(const std::string&)>>;

void overlay_config(const std::string& config_path, CLI::App* sub,
                    const Setters& setters, const std::set<std::string>& vocab) {
  if (config_path.empty()) return;
  for (const auto& [key, value] : formats::read_config_file(config_path)) {
    if (!vocab.count(key))
      throw Error(errc::parse_failure, "unknown config key '" + key + "'");
    const auto it = setters.find(key);
    if (it == setters.end()) continue;  // belongs to another command
    const CLI::Option* flag = sub->get_option_no_throw("--" + key);
    if (flag && flag->count() > 0) continue;  // flags override the file
    it->second(value);
  }
}

}  // namespace

std::string condition_image_name(const std::string& clip_id, int frame_index,
                                 Condition condition) {
  return clip_id + "." + std::to_string(frame_index) + "." +
         condition_token(condition) + ".png";
}

namespace {

// Splits "<stem>.<digits>" off the end; nullopt unless digits are present.
std::optional<std::pair<std::string, int>> split_trailing_index(
    const std::string& stem) {
  const std::size_t dot = stem.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == stem.size())
    return std::nullopt;
  const std::string digits = stem.substr(dot + 1);
  int index = 0;
  const char* first = digits.data();
  const char* last = first + digits.size();
  const auto [ptr, ec] = std::from_chars(first, last, index);
  if (ec != std::errc() || ptr != last || index < 0) return std::nullopt;
  return std::make_pair(stem.substr(0, dot), index);
}

}  // namespace

std::optional<std::pair<std::string, int>> parse_frame_image_name(
    const std::string& filename) {
  constexpr const char* kExt = ".png";
  if (filename.size() <= 4 || filename.substr(filename.size() - 4) != kExt)
    return std::nullopt;
  return split_trailing_index(filename.substr(0, filename.size() - 4));
}

std::optional<std::tuple<std::string, int, Condition>>
parse_condition_image_name(const std::string& filename) {
  if (filename.size() <= 4 || filename.substr(filename.size() - 4) != ".png")
    return std::nullopt;
  const std::string stem = filename.substr(0, filename.size() - 4);
  const std::size_t dot = stem.rfind('.');
  if (dot == std::string::npos || dot == 0) return std::nullopt;
  const std::string token = stem.substr(dot + 1);
  Condition condition;
  try {
    condition = condition_from_token(token);
  } catch (const Error&) {
    return std::nullopt;
  }
  const auto clip_and_index = split_trailing_index(stem.substr(0, dot));
  if (!clip_and_index) return std::nullopt;
  return std::make_tuple(clip_and_index->first, clip_and_index->second,
                         condition);
}

corpus::SplitManifest read_splits(const fs::path& path) {
  if (!fs::exists(path))
    throw Error(errc::io_failure, "split manifest not found: " + path.string());
  if (!fs::is_directory(path)) return formats::read_split_manifest(path);

  corpus::SplitManifest merged;
  std::set<std::string> seen_ids;
  for (corpus::Split s : corpus::kSplits) {
    const fs::path file =
        path / (std::string(corpus::split_name(s)) + ".csv");
    if (!fs::exists(file))
      throw Error(errc::io_failure,
                  "split manifest directory is missing " + file.string());
    corpus::SplitManifest part = formats::read_split_manifest(file);
    for (corpus::Split t : corpus::kSplits)
      for (corpus::ClipRef& clip : part.split(t)) {
        if (!seen_ids.insert(clip.clip_id).second)
          throw Error(errc::duplicate_clip,
                      "clip " + clip.clip_id + " appears in two split files");
        merged.split(t).push_back(std::move(clip));
      }
  }
  return merged;
}

const std::vector<std::pair<int, std::string>>& ImageIndex::frames(
    const std::string& clip_id, Condition condition) const {
  static const std::vector<std::pair<int, std::string>> kEmpty;
  const auto it = clips.find(clip_id);
  if (it == clips.end()) return kEmpty;
  return it->second[static_cast<int>(condition)];
}

ImageIndex scan_condition_images(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw Error(errc::io_failure, "image directory not found: " + dir.string());
  ImageIndex index;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto parsed =
        parse_condition_image_name(entry.path().filename().string());
    if (!parsed) continue;
    const auto& [clip_id, frame_index, condition] = *parsed;
    index.clips[clip_id][static_cast<int>(condition)].emplace_back(
        frame_index, entry.path().string());
  }
  for (auto& [clip_id, by_condition] : index.clips)
    for (auto& frames : by_condition)
      std::sort(frames.begin(), frames.end());
  return index;
}

corpus::SplitQuota parse_quotas(const std::string& text) {
  std::array<int, 3> values{};
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t comma = text.find(',', start);
    const bool last = i == 2;
    if (last != (comma == std::string::npos))
      throw Error(errc::parse_failure,
                  "quotas must be three comma-separated counts, got '" + text +
                      "'");
    const std::string field =
        text.substr(start, last ? std::string::npos : comma - start);
    values[i] = parse_value<int>(field, "quotas");
    if (values[i] < 0)
      throw Error(errc::parse_failure, "quota counts cannot be negative");
    start = comma + 1;
  }
  return {values[0], values[1], values[2]};
}

int run_cli(const std::vector<std::string>& args) {
  Options opt;
  std::string config_path;
  bool flag_strict = false;
  bool flag_allow = false;

  CLI::App app{"confound-free ablation harness", "traitlab"};
  app.require_subcommand(1);

  std::map<std::string, Setters> setters_by_command;
  std::set<std::string> vocab = {"strict", "allow-leakage"};

  const auto add_str = [&](CLI::App* sub, const char* key, std::string& field,
                           const char* help) {
    sub->add_option(std::string("--") + key, field, help);
    setters_by_command[sub->get_name()][key] = [&field](const std::string& v) {
      field = v;
    };
    vocab.insert(key);
  };
  const auto add_num = [&](CLI::App* sub, const char* key, auto& field,
                           const char* help) {
    sub->add_option(std::string("--") + key, field, help);
    setters_by_command[sub->get_name()][key] = [&field,
                                                key](const std::string& v) {
      field = parse_value<std::decay_t<decltype(field)>>(v, key);
    };
    vocab.insert(key);
  };
  const auto add_guard = [&](CLI::App* sub) {
    sub->add_flag("--strict", flag_strict,
                  "refuse to proceed over leaky splits (default)");
    sub->add_flag("--allow-leakage", flag_allow,
                  "proceed over leaky splits; reports are watermarked");
    Setters& setters = setters_by_command[sub->get_name()];
    setters["strict"] = [&opt](const std::string& v) {
      opt.strict = parse_bool(v, "strict");
    };
    setters["allow-leakage"] = [&opt](const std::string& v) {
      opt.strict = !parse_bool(v, "allow-leakage");
    };
  };
  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path,
                    "flat key=value file; flags override it");
  };

  CLI::App* split = app.add_subcommand(
      "split", "build leakage-free grouped splits from a corpus manifest");
  add_str(split, "manifest", opt.manifest, "corpus manifest, one clip per line");
  add_str(split, "quotas", opt.quotas, "uid quotas training,testing,validation");
  add_str(split, "legacy", opt.legacy, "existing split manifest to audit");
  add_str(split, "out", opt.out, "output directory");
  add_guard(split);
  add_config(split);

  CLI::App* preprocess = app.add_subcommand(
      "preprocess", "render condition images for every usable frame");
  add_str(preprocess, "frames", opt.frames, "raw frame directory");
  add_str(preprocess, "landmarks", opt.landmarks, "landmark record file");
  add_str(preprocess, "splits", opt.splits, "split manifest file or directory");
  add_str(preprocess, "condition", opt.preprocess_set,
          "face|background|face_bg|entire_frame|all");
  add_str(preprocess, "out", opt.out, "output image directory");
  add_config(preprocess);

  CLI::App* train = app.add_subcommand(
      "train", "fit a regressor (or the fusion layer) on the training split");
  add_str(train, "splits", opt.splits, "split manifest file or directory");
  add_str(train, "images", opt.images, "preprocessed image directory");
  add_str(train, "truth", opt.truth, "ground-truth trait table");
  add_str(train, "condition", opt.condition,
          "face|background|face_bg|entire_frame");
  add_num(train, "epochs", opt.train_config.epochs, "training epochs");
  add_num(train, "lr", opt.train_config.lr, "learning rate");
  add_num(train, "momentum", opt.train_config.momentum, "momentum in [0,1)");
  add_num(train, "validate-every", opt.train_config.validate_every,
          "validation period in epochs");
  add_num(train, "seed", opt.train_config.rng_seed, "frame-sampling seed");
  add_str(train, "init-face", opt.init_face,
          "face branch checkpoint (face_bg only)");
  add_str(train, "init-bg", opt.init_bg,
          "background branch checkpoint (face_bg only)");
  add_str(train, "out", opt.out, "checkpoint output path");
  add_config(train);

  CLI::App* predict = app.add_subcommand(
      "predict", "write per-video averaged predictions for one split");
  add_str(predict, "splits", opt.splits, "split manifest file or directory");
  add_str(predict, "images", opt.images, "preprocessed image directory");
  add_str(predict, "checkpoint", opt.checkpoint, "model checkpoint");
  add_str(predict, "condition", opt.condition,
          "face|background|face_bg|entire_frame");
  add_str(predict, "split", opt.split, "which split to predict (testing)");
  add_str(predict, "out", opt.out, "prediction table output path");
  add_config(predict);

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "correlations, Fisher-z comparisons, and the report");
  add_str(evaluate, "splits", opt.splits, "split manifest file or directory");
  add_str(evaluate, "predictions", opt.predictions,
          "directory holding <condition>.csv prediction tables");
  add_str(evaluate, "truth", opt.truth, "ground-truth trait table");
  add_str(evaluate, "images", opt.images,
          "optional condition image directory for sigma statistics");
  add_num(evaluate, "alpha", opt.alpha, "significance level");
  add_num(evaluate, "num-models", opt.num_models, "Bonferroni divisor");
  add_str(evaluate, "out", opt.out, "report output directory");
  add_guard(evaluate);
  add_config(evaluate);

  CLI::App* sigma = app.add_subcommand(
      "sigma", "pooled standard deviation of an image set");
  add_str(sigma, "images", opt.images, "image directory");
  add_str(sigma, "condition", opt.sigma_filter,
          "only images of this condition");
  add_config(sigma);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitMalformedInput;
  }

  CLI::App* active = app.get_subcommands().front();
  const std::string name = active->get_name();
  try {
    overlay_config(config_path, active, setters_by_command[name], vocab);
    if (flag_allow)
      opt.strict = false;
    else if (flag_strict)
      opt.strict = true;

    if (name == "split") return cmd_split(opt);
    if (name == "preprocess") return cmd_preprocess(opt);
    if (name == "train") return cmd_train(opt);
    if (name == "predict") return cmd_predict(opt);
    if (name == "evaluate") return cmd_evaluate(opt);
    return cmd_sigma(opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMalformedInput;
  }
}

}  // namespace traitlab::cli
