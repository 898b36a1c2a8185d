#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "traitlab/commands.hpp"
#include "traitlab/errors.hpp"
#include "traitlab/formats.hpp"
#include "traitlab/png_io.hpp"

namespace traitlab::cli {
namespace {

namespace fs = std::filesystem;

void require(const std::string& value, const char* flag) {
  if (value.empty())
    throw Error(errc::parse_failure, std::string("train requires ") + flag);
}

stats::TraitVector label_for(
    const std::map<std::string, stats::TraitVector>& truth,
    const std::string& uid) {
  const auto it = truth.find(uid);
  if (it == truth.end())
    throw Error(errc::length_mismatch, "no ground truth for video " + uid);
  return it->second;
}

train::Features features_of(const std::string& path) {
  return train::extract_features(img::read_png(path));
}

// Clips with zero usable frames were excluded at preprocessing; they are
// dropped here rather than failing the run.
std::vector<train::ClipSamples> gather(
    const ImageIndex& index, const std::vector<corpus::ClipRef>& clips,
    Condition condition,
    const std::map<std::string, stats::TraitVector>& truth) {
  std::vector<train::ClipSamples> out;
  for (const corpus::ClipRef& clip : clips) {
    const auto& frames = index.frames(clip.clip_id, condition);
    if (frames.empty()) continue;
    train::ClipSamples samples;
    samples.clip_id = clip.clip_id;
    for (const auto& [frame_index, path] : frames)
      samples.frames.push_back(features_of(path));
    samples.label = label_for(truth, clip.uid);
    out.push_back(std::move(samples));
  }
  return out;
}

std::vector<train::PairedClipSamples> gather_paired(
    const ImageIndex& index, const std::vector<corpus::ClipRef>& clips,
    const std::map<std::string, stats::TraitVector>& truth) {
  std::vector<train::PairedClipSamples> out;
  for (const corpus::ClipRef& clip : clips) {
    const auto& face = index.frames(clip.clip_id, Condition::face);
    const auto& bg = index.frames(clip.clip_id, Condition::background);
    std::map<int, std::string> bg_by_index(bg.begin(), bg.end());

    train::PairedClipSamples samples;
    samples.clip_id = clip.clip_id;
    for (const auto& [frame_index, face_path] : face) {
      const auto it = bg_by_index.find(frame_index);
      if (it == bg_by_index.end()) continue;
      samples.face_frames.push_back(features_of(face_path));
      samples.bg_frames.push_back(features_of(it->second));
    }
    if (samples.face_frames.empty()) continue;
    samples.label = label_for(truth, clip.uid);
    out.push_back(std::move(samples));
  }
  return out;
}

void print_history(int best_epoch, double best_val,
                   const std::vector<std::pair<int, double>>& history) {
  for (const auto& [epoch, val_loss] : history)
    std::printf("epoch %d val_loss %.6f\n", epoch, val_loss);
  std::printf("best epoch %d val_loss %.6f\n", best_epoch, best_val);
}

}  // namespace

int cmd_train(const Options& opt) {
  require(opt.splits, "--splits");
  require(opt.images, "--images");
  require(opt.truth, "--truth");
  require(opt.out, "--out");
  const Condition condition = condition_from_token(opt.condition);
  if (!fs::exists(opt.truth))
    throw Error(errc::io_failure, "ground truth not found: " + opt.truth);

  const corpus::SplitManifest manifest = read_splits(opt.splits);
  const ImageIndex index = scan_condition_images(opt.images);
  std::map<std::string, stats::TraitVector> truth;
  for (const auto& [video_id, traits] : formats::read_trait_table(opt.truth))
    truth[video_id] = traits;

  if (fs::path(opt.out).has_parent_path())
    fs::create_directories(fs::path(opt.out).parent_path());

  std::vector<std::pair<int, double>> history;
  if (condition == Condition::face_bg) {
    require(opt.init_face, "--init-face");
    require(opt.init_bg, "--init-bg");
    const train::Checkpoint face = train::load_checkpoint(opt.init_face);
    const train::Checkpoint bg = train::load_checkpoint(opt.init_bg);

    const auto train_clips = gather_paired(index, manifest.training, truth);
    const auto val_clips = gather_paired(index, manifest.validation, truth);
    if (train_clips.empty())
      throw Error(errc::empty_split, "training split has no usable clips");
    if (val_clips.empty())
      throw Error(errc::empty_split, "validation split has no usable clips");

    const train::FusionTrainResult result = train::train_fusion(
        face.params, bg.params, train_clips, val_clips, opt.train_config);
    train::save_fusion_checkpoint(opt.out, result.best);
    for (const train::FusionCheckpoint& c : result.history)
      history.emplace_back(c.epoch, c.val_loss);
    print_history(result.best.epoch, result.best.val_loss, history);
    std::printf("clips: train=%zu val=%zu (paired)\n", train_clips.size(),
                val_clips.size());
  } else {
    const auto train_clips = gather(index, manifest.training, condition, truth);
    const auto val_clips =
        gather(index, manifest.validation, condition, truth);
    if (train_clips.empty())
      throw Error(errc::empty_split, "training split has no usable clips");
    if (val_clips.empty())
      throw Error(errc::empty_split, "validation split has no usable clips");

    const train::TrainResult result = train::train(
        train::Regressor{}, train_clips, val_clips, opt.train_config);
    train::save_checkpoint(opt.out, result.best);
    for (const train::Checkpoint& c : result.history)
      history.emplace_back(c.epoch, c.val_loss);
    print_history(result.best.epoch, result.best.val_loss, history);
    std::printf("clips: train=%zu val=%zu\n", train_clips.size(),
                val_clips.size());
  }
  return kExitOk;
}

}  // namespace traitlab::cli
