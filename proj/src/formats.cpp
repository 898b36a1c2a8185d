#include "traitlab/formats.hpp"

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>

#include "traitlab/errors.hpp"

namespace traitlab::formats {
namespace {

namespace fs = std::filesystem;

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(errc::io_failure,
                "cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(errc::io_failure,
                "cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(errc::io_failure, "write failed: " + path.string());
}

[[noreturn]] void bad_line(const fs::path& path, std::size_t lineno,
                           const std::string& why) {
  throw Error(errc::parse_failure,
              path.string() + ":" + std::to_string(lineno) + ": " + why);
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
T parse_number(const std::string& field, const fs::path& path,
               std::size_t lineno, const char* what) {
  T value{};
  const char* first = field.data();
  const char* last = first + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    bad_line(path, lineno, std::string("expected ") + what + ", got '" +
                               field + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value))
      bad_line(path, lineno, std::string(what) + " is not finite");
  }
  return value;
}

std::string fmt_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string trim(const std::string& s) {
  const std::size_t begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const std::size_t end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

constexpr const char* kSplitHeader = "clip_id,uid,segment,split";
constexpr const char* kTraitHeader = "video_id,O,C,E,A,N_bar";

}  // namespace

std::vector<corpus::ClipRef> read_corpus_manifest(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<corpus::ClipRef> clips;
  std::set<std::pair<std::string, int>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    corpus::ClipRef clip = corpus::parse_clip_id(line);
    if (!seen.insert({clip.uid, clip.segment}).second)
      throw Error(errc::duplicate_clip,
                  path.string() + ":" + std::to_string(lineno) +
                      ": duplicate clip " + clip.clip_id);
    clips.push_back(std::move(clip));
  }
  return clips;
}

void write_corpus_manifest(const fs::path& path,
                           const std::vector<corpus::ClipRef>& clips) {
  std::ofstream out = open_out(path);
  for (const corpus::ClipRef& clip : clips) out << clip.clip_id << '\n';
  finish(out, path);
}

void write_split_manifest(const fs::path& path,
                          const corpus::SplitManifest& manifest) {
  std::ofstream out = open_out(path);
  out << kSplitHeader << '\n';
  for (corpus::Split s : corpus::kSplits)
    for (const corpus::ClipRef& clip : manifest.split(s))
      out << clip.clip_id << ',' << clip.uid << ',' << clip.segment << ','
          << corpus::split_name(s) << '\n';
  finish(out, path);
}

corpus::SplitManifest read_split_manifest(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kSplitHeader)
    bad_line(path, 1, std::string("expected header '") + kSplitHeader + "'");

  corpus::SplitManifest manifest;
  std::set<std::string> seen_ids;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 4) bad_line(path, lineno, "expected 4 fields");

    corpus::ClipRef clip;
    clip.clip_id = fields[0];
    clip.uid = fields[1];
    clip.segment = parse_number<int>(fields[2], path, lineno, "segment");
    if (clip.uid.empty() || clip.clip_id.rfind(clip.uid, 0) != 0)
      bad_line(path, lineno, "uid is not a prefix of clip_id");
    if (clip.segment < 0) bad_line(path, lineno, "segment is negative");
    if (!seen_ids.insert(clip.clip_id).second)
      throw Error(errc::duplicate_clip,
                  path.string() + ":" + std::to_string(lineno) +
                      ": duplicate clip " + clip.clip_id);

    const corpus::Split split = corpus::split_from_name(fields[3]);
    manifest.split(split).push_back(std::move(clip));
  }
  return manifest;
}

void write_landmarks(const fs::path& path,
                     const std::vector<LandmarkRecord>& records) {
  std::ofstream out = open_out(path);
  for (const LandmarkRecord& rec : records) {
    for (const img::Point& p : rec.points.points)
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw Error(errc::out_of_range,
                    "non-finite landmark in clip " + rec.clip_id);
    out << rec.clip_id << ',' << rec.frame_index << ',' << rec.face_box.left
        << ',' << rec.face_box.top << ',' << rec.face_box.right << ','
        << rec.face_box.bottom;
    for (const img::Point& p : rec.points.points)
      out << ',' << fmt_real(p.x) << ',' << fmt_real(p.y);
    out << '\n';
  }
  finish(out, path);
}

std::vector<LandmarkRecord> read_landmarks(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<LandmarkRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("clip_id,", 0) == 0) continue;  // header
    const std::vector<std::string> fields = split_fields(line);
    const std::size_t expected = 6 + 2 * img::kLandmarkCount;
    if (fields.size() != expected)
      bad_line(path, lineno,
               "expected " + std::to_string(expected) + " fields, got " +
                   std::to_string(fields.size()));

    LandmarkRecord rec;
    rec.clip_id = fields[0];
    if (rec.clip_id.empty()) bad_line(path, lineno, "empty clip_id");
    rec.frame_index = parse_number<int>(fields[1], path, lineno, "frame index");
    if (rec.frame_index < 0) bad_line(path, lineno, "frame index is negative");
    rec.face_box.left = parse_number<int>(fields[2], path, lineno, "box left");
    rec.face_box.top = parse_number<int>(fields[3], path, lineno, "box top");
    rec.face_box.right = parse_number<int>(fields[4], path, lineno, "box right");
    rec.face_box.bottom =
        parse_number<int>(fields[5], path, lineno, "box bottom");
    for (int i = 0; i < img::kLandmarkCount; ++i) {
      rec.points.points[i].x =
          parse_number<double>(fields[6 + 2 * i], path, lineno, "landmark x");
      rec.points.points[i].y =
          parse_number<double>(fields[7 + 2 * i], path, lineno, "landmark y");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_trait_table(const fs::path& path, const TraitTable& table) {
  std::ofstream out = open_out(path);
  out << kTraitHeader << '\n';
  for (const auto& [video_id, traits] : table) {
    traits.validate("video " + video_id);
    out << video_id;
    for (double v : traits.values()) out << ',' << fmt_real(v);
    out << '\n';
  }
  finish(out, path);
}

TraitTable read_trait_table(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kTraitHeader)
    bad_line(path, 1, std::string("expected header '") + kTraitHeader + "'");

  TraitTable table;
  std::set<std::string> seen_ids;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 1 + stats::kTraitCount)
      bad_line(path, lineno, "expected 6 fields");
    if (fields[0].empty()) bad_line(path, lineno, "empty video_id");
    if (!seen_ids.insert(fields[0]).second)
      throw Error(errc::duplicate_clip,
                  path.string() + ":" + std::to_string(lineno) +
                      ": duplicate video " + fields[0]);

    stats::TraitVector traits;
    for (int t = 0; t < stats::kTraitCount; ++t)
      traits[t] = parse_number<double>(fields[1 + t], path, lineno,
                                       stats::kTraitNames[t]);
    traits.validate(path.string() + ":" + std::to_string(lineno));
    table.emplace_back(fields[0], traits);
  }
  return table;
}

stats::PredictionTable join_tables(const TraitTable& predicted,
                                   const TraitTable& truth) {
  std::map<std::string, stats::TraitVector> truth_by_id;
  for (const auto& [video_id, traits] : truth) truth_by_id[video_id] = traits;

  stats::PredictionTable table;
  for (const auto& [video_id, traits] : predicted) {
    const auto it = truth_by_id.find(video_id);
    if (it == truth_by_id.end())
      throw Error(errc::length_mismatch,
                  "no ground truth for video " + video_id);
    table.rows.push_back({video_id, traits, it->second});
  }
  return table;
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::map<std::string, std::string> config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_cr(line));
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      bad_line(path, lineno, "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) bad_line(path, lineno, "empty key");
    config[key] = trim(line.substr(eq + 1));
  }
  return config;
}

}  // namespace traitlab::formats
