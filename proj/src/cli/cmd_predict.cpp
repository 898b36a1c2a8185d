#include <cstdio>
#include <filesystem>
#include <map>
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
    throw Error(errc::parse_failure, std::string("predict requires ") + flag);
}

train::Features features_of(const std::string& path) {
  return train::extract_features(img::read_png(path));
}

}  // namespace

int cmd_predict(const Options& opt) {
  require(opt.splits, "--splits");
  require(opt.images, "--images");
  require(opt.checkpoint, "--checkpoint");
  require(opt.out, "--out");
  const Condition condition = condition_from_token(opt.condition);
  const corpus::Split which = corpus::split_from_name(opt.split);
  if (!fs::exists(opt.checkpoint))
    throw Error(errc::io_failure, "checkpoint not found: " + opt.checkpoint);

  const corpus::SplitManifest manifest = read_splits(opt.splits);
  const ImageIndex index = scan_condition_images(opt.images);
  const std::vector<corpus::ClipRef>& clips = manifest.split(which);

  std::vector<stats::FramePrediction> frame_preds;
  std::size_t frames_used = 0;
  if (condition == Condition::face_bg) {
    const train::FusionModel model =
        train::load_fusion_checkpoint(opt.checkpoint).params;
    for (const corpus::ClipRef& clip : clips) {
      const auto& face = index.frames(clip.clip_id, Condition::face);
      const auto& bg = index.frames(clip.clip_id, Condition::background);
      std::map<int, std::string> bg_by_index(bg.begin(), bg.end());
      for (const auto& [frame_index, face_path] : face) {
        const auto it = bg_by_index.find(frame_index);
        if (it == bg_by_index.end()) continue;
        frame_preds.push_back(
            {clip.uid, frame_index,
             model.predict_frame(features_of(face_path),
                                 features_of(it->second))});
        ++frames_used;
      }
    }
  } else {
    const train::Regressor model = train::load_checkpoint(opt.checkpoint).params;
    for (const corpus::ClipRef& clip : clips)
      for (const auto& [frame_index, path] : index.frames(clip.clip_id,
                                                          condition)) {
        frame_preds.push_back(
            {clip.uid, frame_index, model.predict_frame(features_of(path))});
        ++frames_used;
      }
  }
  if (frame_preds.empty())
    throw Error(errc::empty_input,
                "no frames to predict on in split " + opt.split);

  const formats::TraitTable table = stats::aggregate_predictions(frame_preds);
  if (fs::path(opt.out).has_parent_path())
    fs::create_directories(fs::path(opt.out).parent_path());
  formats::write_trait_table(opt.out, table);
  std::printf("predicted videos=%zu frames=%zu\n", table.size(), frames_used);
  return kExitOk;
}

}  // namespace traitlab::cli
