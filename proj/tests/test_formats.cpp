#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "traitlab/formats.hpp"

using namespace traitlab;
using namespace traitlab::formats;

namespace {

namespace fs = std::filesystem;

std::mt19937_64 g_rng(912873);

// Scratch directory removed when the test case ends.
struct TempDir {
  fs::path dir;
  TempDir() {
    dir = fs::temp_directory_path() /
          ("tl_formats_" + std::to_string(g_rng()));
    fs::create_directories(dir);
  }
  ~TempDir() { fs::remove_all(dir); }
  fs::path file(const std::string& name) const { return dir / name; }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LandmarkRecord random_record(const std::string& clip_id, int frame) {
  std::uniform_real_distribution<double> coord(-20.0, 500.0);
  std::uniform_int_distribution<int> edge(0, 400);
  LandmarkRecord rec;
  rec.clip_id = clip_id;
  rec.frame_index = frame;
  rec.face_box.left = edge(g_rng);
  rec.face_box.top = edge(g_rng);
  rec.face_box.right = rec.face_box.left + 1 + edge(g_rng);
  rec.face_box.bottom = rec.face_box.top + 1 + edge(g_rng);
  for (auto& p : rec.points.points) {
    p.x = coord(g_rng);
    p.y = coord(g_rng);
  }
  return rec;
}

stats::TraitVector random_traits() {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  return {d(g_rng), d(g_rng), d(g_rng), d(g_rng), d(g_rng)};
}

}  // namespace

TEST_CASE("corpus manifest round-trips and skips blank lines") {
  TempDir tmp;
  const std::vector<corpus::ClipRef> clips = {
      {"alpha.000.mp4", "alpha", 0},
      {"alpha.003.mp4", "alpha", 3},
      {"beta.x.012.mp4", "beta.x", 12},
  };
  const fs::path path = tmp.file("corpus.txt");
  write_corpus_manifest(path, clips);
  CHECK(slurp(path) == "alpha.000.mp4\nalpha.003.mp4\nbeta.x.012.mp4\n");
  CHECK(read_corpus_manifest(path) == clips);

  // CRLF and blank lines are tolerated on the way in.
  write_text(path, "alpha.000.mp4\r\n\r\n\nbeta.x.012.mp4\n");
  const auto loose = read_corpus_manifest(path);
  REQUIRE(loose.size() == 2);
  CHECK(loose[0].uid == "alpha");
  CHECK(loose[1].segment == 12);
}

TEST_CASE("corpus manifest rejects bad names, duplicates, missing files") {
  TempDir tmp;
  const fs::path path = tmp.file("corpus.txt");

  write_text(path, "noextension\n");
  CHECK_THROWS_WITH_AS(read_corpus_manifest(path),
                       doctest::Contains("noextension"), Error);

  write_text(path, "a.001.mp4\na.001.avi\n");
  try {
    read_corpus_manifest(path);
    FAIL("expected duplicate_clip");
  } catch (const Error& e) {
    CHECK(e.code() == errc::duplicate_clip);
  }

  try {
    read_corpus_manifest(tmp.file("absent.txt"));
    FAIL("expected io_failure");
  } catch (const Error& e) {
    CHECK(e.code() == errc::io_failure);
  }
}

TEST_CASE("split manifest writes the documented layout") {
  TempDir tmp;
  corpus::SplitManifest manifest;
  manifest.training = {{"a.000.mp4", "a", 0}, {"a.001.mp4", "a", 1}};
  manifest.testing = {{"b.000.mp4", "b", 0}};
  manifest.validation = {{"c.002.mp4", "c", 2}};

  const fs::path path = tmp.file("splits.csv");
  write_split_manifest(path, manifest);
  CHECK(slurp(path) ==
        "clip_id,uid,segment,split\n"
        "a.000.mp4,a,0,training\n"
        "a.001.mp4,a,1,training\n"
        "b.000.mp4,b,0,testing\n"
        "c.002.mp4,c,2,validation\n");

  const corpus::SplitManifest back = read_split_manifest(path);
  CHECK(back.training == manifest.training);
  CHECK(back.testing == manifest.testing);
  CHECK(back.validation == manifest.validation);

  // Byte-stable across repeat writes.
  const fs::path again = tmp.file("splits2.csv");
  write_split_manifest(again, manifest);
  CHECK(slurp(again) == slurp(path));
}

TEST_CASE("split manifest round-trips build_splits output") {
  TempDir tmp;
  std::vector<corpus::ClipRef> clips;
  for (int u = 0; u < 12; ++u)
    for (int s = 0; s < 3; ++s) {
      const std::string uid = "vid" + std::to_string(u);
      const std::string seg =
          (s < 10 ? "00" : "0") + std::to_string(s);
      clips.push_back({uid + "." + seg + ".mp4", uid, s});
    }
  const corpus::SplitManifest manifest =
      corpus::build_splits(clips, {8, 2, 2});

  const fs::path path = tmp.file("splits.csv");
  write_split_manifest(path, manifest);
  const corpus::SplitManifest back = read_split_manifest(path);
  CHECK(back.training == manifest.training);
  CHECK(back.testing == manifest.testing);
  CHECK(back.validation == manifest.validation);
  CHECK(corpus::verify_disjoint(back).pass);
}

TEST_CASE("split manifest rejects structural damage") {
  TempDir tmp;
  const fs::path path = tmp.file("splits.csv");
  const auto expect_code = [&](errc want) {
    try {
      read_split_manifest(path);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == want);
    }
  };

  write_text(path, "clipid,uid\n");
  expect_code(errc::parse_failure);  // wrong header

  write_text(path, "clip_id,uid,segment,split\na.000.mp4,a,0\n");
  expect_code(errc::parse_failure);  // missing field

  write_text(path, "clip_id,uid,segment,split\na.000.mp4,b,0,training\n");
  expect_code(errc::parse_failure);  // uid not a prefix

  write_text(path, "clip_id,uid,segment,split\na.000.mp4,a,-1,training\n");
  expect_code(errc::parse_failure);  // negative segment

  write_text(path, "clip_id,uid,segment,split\na.000.mp4,a,zero,training\n");
  expect_code(errc::parse_failure);  // non-numeric segment

  write_text(path, "clip_id,uid,segment,split\na.000.mp4,a,0,holdout\n");
  expect_code(errc::parse_failure);  // unknown split name

  write_text(path,
             "clip_id,uid,segment,split\n"
             "a.000.mp4,a,0,training\na.000.mp4,a,0,testing\n");
  expect_code(errc::duplicate_clip);
}

TEST_CASE("landmark files round-trip exactly") {
  TempDir tmp;
  std::vector<LandmarkRecord> records;
  for (int i = 0; i < 20; ++i)
    records.push_back(
        random_record("clip" + std::to_string(i / 4) + ".00" +
                          std::to_string(i / 4) + ".mp4",
                      i % 4));

  const fs::path path = tmp.file("landmarks.csv");
  write_landmarks(path, records);
  const std::vector<LandmarkRecord> back = read_landmarks(path);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) CHECK(back[i] == records[i]);
}

TEST_CASE("landmark reader accepts an optional header and exact field count") {
  TempDir tmp;
  LandmarkRecord rec;
  rec.clip_id = "v.000.mp4";
  rec.frame_index = 7;
  rec.face_box = {10, 20, 110, 140};
  for (int i = 0; i < img::kLandmarkCount; ++i)
    rec.points.points[i] = {static_cast<double>(i), i + 0.5};

  std::ostringstream row;
  row << "v.000.mp4,7,10,20,110,140";
  for (int i = 0; i < img::kLandmarkCount; ++i)
    row << ',' << i << ',' << i << ".5";
  const fs::path path = tmp.file("landmarks.csv");

  write_text(path, row.str() + "\n");
  std::vector<LandmarkRecord> got = read_landmarks(path);
  REQUIRE(got.size() == 1);
  CHECK(got[0] == rec);

  write_text(path, "clip_id,frame_index,box,points\n" + row.str() + "\n");
  got = read_landmarks(path);
  REQUIRE(got.size() == 1);
  CHECK(got[0] == rec);

  const auto expect_parse_failure = [&](const std::string& text) {
    write_text(path, text);
    try {
      read_landmarks(path);
      FAIL("expected parse_failure");
    } catch (const Error& e) {
      CHECK(e.code() == errc::parse_failure);
    }
  };
  expect_parse_failure(row.str() + ",99\n");        // extra field
  expect_parse_failure("v.000.mp4,7,10,20,110\n");  // truncated record
  expect_parse_failure(",7,10,20,110,140" + row.str().substr(9) + "\n");

  std::string bad = row.str();
  bad.replace(bad.find("0.5") + 1, 2, "nan");  // poison one coordinate
  expect_parse_failure(bad + "\n");
}

TEST_CASE("landmark writer refuses non-finite coordinates") {
  TempDir tmp;
  LandmarkRecord rec = random_record("v.000.mp4", 0);
  rec.points.points[13].y = std::numeric_limits<double>::infinity();
  try {
    write_landmarks(tmp.file("landmarks.csv"), {rec});
    FAIL("expected out_of_range");
  } catch (const Error& e) {
    CHECK(e.code() == errc::out_of_range);
  }
}

TEST_CASE("trait tables round-trip bit for bit") {
  TempDir tmp;
  TraitTable table;
  for (int i = 0; i < 30; ++i)
    table.emplace_back("vid" + std::to_string(i), random_traits());

  const fs::path path = tmp.file("preds.csv");
  write_trait_table(path, table);
  const TraitTable back = read_trait_table(path);
  REQUIRE(back.size() == table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(back[i].first == table[i].first);
    CHECK(back[i].second == table[i].second);
  }
}

TEST_CASE("trait table text uses the shortest exact decimals") {
  TempDir tmp;
  const TraitTable table = {{"vidA", {0.5, 0.25, 1.0, 0.0, 0.125}}};
  const fs::path path = tmp.file("preds.csv");
  write_trait_table(path, table);
  CHECK(slurp(path) == "video_id,O,C,E,A,N_bar\nvidA,0.5,0.25,1,0,0.125\n");
}

TEST_CASE("trait table reader enforces header, range, and uniqueness") {
  TempDir tmp;
  const fs::path path = tmp.file("preds.csv");
  const auto expect_code = [&](const std::string& text, errc want) {
    write_text(path, text);
    try {
      read_trait_table(path);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == want);
    }
  };

  expect_code("vid,O,C,E,A,N\nv,0,0,0,0,0\n", errc::parse_failure);
  expect_code("video_id,O,C,E,A,N_bar\nv,0.1,0.2,0.3,0.4\n",
              errc::parse_failure);
  expect_code("video_id,O,C,E,A,N_bar\nv,0.1,0.2,x,0.4,0.5\n",
              errc::parse_failure);
  expect_code("video_id,O,C,E,A,N_bar\nv,0.1,0.2,1.5,0.4,0.5\n",
              errc::out_of_range);
  expect_code("video_id,O,C,E,A,N_bar\nv,0.1,0.2,-0.1,0.4,0.5\n",
              errc::out_of_range);
  expect_code("video_id,O,C,E,A,N_bar\nv,0,0,0,0,0\nv,1,1,1,1,1\n",
              errc::duplicate_clip);

  // Writer applies the same range rule.
  TraitTable bad = {{"v", {0.1, 0.2, 1.5, 0.4, 0.5}}};
  try {
    write_trait_table(path, bad);
    FAIL("expected out_of_range");
  } catch (const Error& e) {
    CHECK(e.code() == errc::out_of_range);
  }
}

TEST_CASE("join_tables pairs predictions with truth by video id") {
  const TraitTable pred = {{"b", {0.1, 0.1, 0.1, 0.1, 0.1}},
                           {"a", {0.2, 0.2, 0.2, 0.2, 0.2}}};
  const TraitTable truth = {{"a", {0.9, 0.9, 0.9, 0.9, 0.9}},
                            {"b", {0.8, 0.8, 0.8, 0.8, 0.8}},
                            {"c", {0.7, 0.7, 0.7, 0.7, 0.7}}};

  const stats::PredictionTable joined = join_tables(pred, truth);
  REQUIRE(joined.rows.size() == 2);  // prediction order, truth superset ok
  CHECK(joined.rows[0].video_id == "b");
  CHECK(joined.rows[0].predicted.o == 0.1);
  CHECK(joined.rows[0].truth.o == 0.8);
  CHECK(joined.rows[1].video_id == "a");
  CHECK(joined.rows[1].truth.o == 0.9);

  const TraitTable orphan = {{"zz", {0.5, 0.5, 0.5, 0.5, 0.5}}};
  try {
    join_tables(orphan, truth);
    FAIL("expected length_mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == errc::length_mismatch);
  }
}

TEST_CASE("config files parse key=value lines with comments") {
  TempDir tmp;
  const fs::path path = tmp.file("run.cfg");
  write_text(path,
             "# experiment settings\n"
             "epochs = 100\n"
             "lr=0.001\n"
             "\n"
             "  condition =  face\n"
             "out=\n"
             "epochs = 200\n");
  const auto config = read_config_file(path);
  CHECK(config.size() == 4);
  CHECK(config.at("epochs") == "200");  // last occurrence wins
  CHECK(config.at("lr") == "0.001");
  CHECK(config.at("condition") == "face");
  CHECK(config.at("out") == "");

  write_text(path, "epochs\n");
  try {
    read_config_file(path);
    FAIL("expected parse_failure");
  } catch (const Error& e) {
    CHECK(e.code() == errc::parse_failure);
  }

  write_text(path, "=5\n");
  try {
    read_config_file(path);
    FAIL("expected parse_failure");
  } catch (const Error& e) {
    CHECK(e.code() == errc::parse_failure);
  }
}
