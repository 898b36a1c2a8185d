#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "traitlab/corpus.hpp"
#include "traitlab/image.hpp"
#include "traitlab/stats.hpp"

namespace traitlab::formats {

// Corpus manifest: one clip filename per line (UTF-8, LF). Blank lines are
// skipped. Names are parsed with corpus::parse_clip_id; duplicate
// (uid, segment) pairs are rejected at ingest.
std::vector<corpus::ClipRef> read_corpus_manifest(
    const std::filesystem::path& path);
void write_corpus_manifest(const std::filesystem::path& path,
                           const std::vector<corpus::ClipRef>& clips);

// Split manifest: header "clip_id,uid,segment,split", one row per clip,
// training rows first, then testing, then validation.
void write_split_manifest(const std::filesystem::path& path,
                          const corpus::SplitManifest& manifest);
corpus::SplitManifest read_split_manifest(const std::filesystem::path& path);

// One frame's facial geometry: the detector box plus 68 landmark points.
struct LandmarkRecord {
  std::string clip_id;
  int frame_index = 0;
  img::BoundingBox face_box;
  img::LandmarkSet points;

  friend bool operator==(const LandmarkRecord& a, const LandmarkRecord& b) {
    if (a.clip_id != b.clip_id || a.frame_index != b.frame_index) return false;
    if (a.face_box.left != b.face_box.left || a.face_box.top != b.face_box.top ||
        a.face_box.right != b.face_box.right ||
        a.face_box.bottom != b.face_box.bottom)
      return false;
    for (int i = 0; i < img::kLandmarkCount; ++i)
      if (a.points.points[i].x != b.points.points[i].x ||
          a.points.points[i].y != b.points.points[i].y)
        return false;
    return true;
  }
};

// Landmark file: one record per line,
// clip_id,frame_index,left,top,right,bottom,x0,y0,...,x67,y67.
// A first line starting with "clip_id," is treated as a header and skipped.
void write_landmarks(const std::filesystem::path& path,
                     const std::vector<LandmarkRecord>& records);
std::vector<LandmarkRecord> read_landmarks(const std::filesystem::path& path);

// Prediction / ground-truth table rows keyed by video id, in file order.
using TraitTable = std::vector<std::pair<std::string, stats::TraitVector>>;

// Trait table file: header "video_id,O,C,E,A,N_bar"; every value must be
// finite and within [0,1]; video ids must be unique.
void write_trait_table(const std::filesystem::path& path,
                       const TraitTable& table);
TraitTable read_trait_table(const std::filesystem::path& path);

// Pair predictions with ground truth by video id, keeping prediction order.
// Throws length_mismatch when a predicted video has no ground-truth row.
stats::PredictionTable join_tables(const TraitTable& predicted,
                                   const TraitTable& truth);

// Flat key=value configuration text. '#' lines and blank lines are skipped,
// whitespace around keys and values is trimmed, the last occurrence of a
// key wins.
std::map<std::string, std::string> read_config_file(
    const std::filesystem::path& path);

}  // namespace traitlab::formats
