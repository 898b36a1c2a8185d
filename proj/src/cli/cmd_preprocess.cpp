#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "traitlab/commands.hpp"
#include "traitlab/errors.hpp"
#include "traitlab/formats.hpp"
#include "traitlab/imageops.hpp"
#include "traitlab/png_io.hpp"

namespace traitlab::cli {
namespace {

namespace fs = std::filesystem;

void require(const std::string& value, const char* flag) {
  if (value.empty())
    throw Error(errc::parse_failure, std::string("preprocess requires ") + flag);
}

std::vector<Condition> conditions_for(const std::string& token) {
  if (token == "all")
    return {Condition::face, Condition::background, Condition::entire_frame};
  const Condition c = condition_from_token(token);
  if (c == Condition::face_bg)  // fusion consumes the two single streams
    return {Condition::face, Condition::background};
  return {c};
}

// Face box carried into the 465x256 resize the background crop runs on.
img::BoundingBox scale_box(const img::BoundingBox& box, int src_w, int src_h) {
  const double sx = static_cast<double>(img::kEntireFrameWidth) / src_w;
  const double sy = static_cast<double>(img::kEntireFrameHeight) / src_h;
  img::BoundingBox out;
  out.left = static_cast<int>(std::llround(box.left * sx));
  out.right = static_cast<int>(std::llround(box.right * sx));
  out.top = static_cast<int>(std::llround(box.top * sy));
  out.bottom = static_cast<int>(std::llround(box.bottom * sy));
  return out;
}

}  // namespace

int cmd_preprocess(const Options& opt) {
  require(opt.frames, "--frames");
  require(opt.landmarks, "--landmarks");
  require(opt.splits, "--splits");
  require(opt.out, "--out");
  if (!fs::is_directory(opt.frames))
    throw Error(errc::io_failure, "frame directory not found: " + opt.frames);
  if (!fs::exists(opt.landmarks))
    throw Error(errc::io_failure, "landmark file not found: " + opt.landmarks);

  const std::vector<Condition> wanted =
      conditions_for(opt.preprocess_set.empty() ? "all" : opt.preprocess_set);
  const bool needs_landmarks =
      std::find(wanted.begin(), wanted.end(), Condition::face) != wanted.end() ||
      std::find(wanted.begin(), wanted.end(), Condition::background) !=
          wanted.end();

  const corpus::SplitManifest manifest = read_splits(opt.splits);
  const std::vector<formats::LandmarkRecord> records =
      formats::read_landmarks(opt.landmarks);

  std::map<std::string, std::map<int, const formats::LandmarkRecord*>> geometry;
  for (const formats::LandmarkRecord& rec : records)
    geometry[rec.clip_id][rec.frame_index] = &rec;

  // Clip order: manifest order, training first. Also the set of clips that
  // belong to the corpus at all.
  std::vector<const corpus::ClipRef*> clips;
  std::set<std::string> training_ids;
  for (corpus::Split s : corpus::kSplits)
    for (const corpus::ClipRef& clip : manifest.split(s)) {
      clips.push_back(&clip);
      if (s == corpus::Split::training) training_ids.insert(clip.clip_id);
    }

  // The alignment target comes from training-split landmarks only, so no
  // test-set geometry leaks into the preprocessing.
  img::LandmarkSet face_template;
  if (std::find(wanted.begin(), wanted.end(), Condition::face) !=
      wanted.end()) {
    std::vector<img::LandmarkSet> training_landmarks;
    for (const formats::LandmarkRecord& rec : records)
      if (training_ids.count(rec.clip_id))
        training_landmarks.push_back(rec.points);
    if (training_landmarks.empty())
      throw Error(errc::empty_input,
                  "no training-split landmarks to build the face template");
    face_template =
        img::normalize_template(img::compute_template(training_landmarks));
  }

  // Frames present on disk, grouped per clip, ordered by index.
  std::map<std::string, std::vector<int>> frames_on_disk;
  for (const auto& entry : fs::directory_iterator(opt.frames)) {
    if (!entry.is_regular_file()) continue;
    const auto parsed = parse_frame_image_name(entry.path().filename().string());
    if (parsed) frames_on_disk[parsed->first].push_back(parsed->second);
  }
  for (auto& [clip_id, indices] : frames_on_disk)
    std::sort(indices.begin(), indices.end());

  fs::create_directories(opt.out);
  std::ofstream log(fs::path(opt.out) / "preprocess.log", std::ios::binary);
  if (!log) throw Error(errc::io_failure, "cannot write preprocess.log");

  std::size_t processed = 0, skipped = 0, already = 0;
  std::vector<std::string> excluded;

  for (const corpus::ClipRef* clip : clips) {
    const auto disk = frames_on_disk.find(clip->clip_id);
    std::size_t usable_frames = 0;
    if (disk != frames_on_disk.end()) {
      for (int frame_index : disk->second) {
        const fs::path frame_path =
            fs::path(opt.frames) /
            (clip->clip_id + "." + std::to_string(frame_index) + ".png");

        const formats::LandmarkRecord* rec = nullptr;
        const auto by_clip = geometry.find(clip->clip_id);
        if (by_clip != geometry.end()) {
          const auto by_frame = by_clip->second.find(frame_index);
          if (by_frame != by_clip->second.end()) rec = by_frame->second;
        }

        img::FrameImage frame;
        bool frame_loaded = false;
        bool all_ok = true;
        for (Condition condition : wanted) {
          const std::string out_name =
              condition_image_name(clip->clip_id, frame_index, condition);
          const fs::path out_path = fs::path(opt.out) / out_name;
          if (fs::exists(out_path)) {
            log << clip->clip_id << ' ' << frame_index << ' '
                << condition_token(condition) << " exists\n";
            ++already;
            continue;
          }
          if (!rec && condition != Condition::entire_frame) {
            log << clip->clip_id << ' ' << frame_index << ' '
                << condition_token(condition) << " skip missing landmarks\n";
            ++skipped;
            all_ok = false;
            continue;
          }
          try {
            if (!frame_loaded) {
              frame = img::read_png(frame_path.string());
              frame_loaded = true;
            }
            img::FrameImage output;
            if (condition == Condition::face) {
              output = img::make_face_condition(frame, rec->points,
                                                face_template);
            } else if (condition == Condition::background) {
              const img::FrameImage resized =
                  img::make_entire_frame_condition(frame);
              output = img::make_background_condition(
                           resized,
                           scale_box(rec->face_box, frame.width, frame.height))
                           .image;
            } else {
              output = img::make_entire_frame_condition(frame);
            }
            img::write_png(out_path.string(), output);
            log << clip->clip_id << ' ' << frame_index << ' '
                << condition_token(condition) << " ok\n";
            ++processed;
          } catch (const Error& e) {
            log << clip->clip_id << ' ' << frame_index << ' '
                << condition_token(condition) << " skip " << e.what() << '\n';
            ++skipped;
            all_ok = false;
          }
        }
        if (all_ok) ++usable_frames;
      }
    }
    if (usable_frames == 0) excluded.push_back(clip->clip_id);
  }

  log << "processed=" << processed << " skipped=" << skipped
      << " existing=" << already << " excluded_clips=" << excluded.size()
      << '\n';
  log.flush();
  if (!log) throw Error(errc::io_failure, "write failed: preprocess.log");

  std::ofstream exclusions(fs::path(opt.out) / "exclusions.txt",
                           std::ios::binary);
  if (!exclusions) throw Error(errc::io_failure, "cannot write exclusions.txt");
  for (const std::string& clip_id : excluded) exclusions << clip_id << '\n';
  exclusions.flush();
  if (!exclusions) throw Error(errc::io_failure, "write failed: exclusions.txt");

  std::printf("processed=%zu skipped=%zu existing=%zu excluded_clips=%zu\n",
              processed, skipped, already, excluded.size());
  return kExitOk;
}

}  // namespace traitlab::cli
