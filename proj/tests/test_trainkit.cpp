#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "traitlab/trainkit.hpp"

using namespace traitlab;
using namespace traitlab::train;
using stats::TraitVector;

namespace {

std::mt19937_64 g_rng(20240518);

Features random_features(double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Features x;
  for (double& v : x) v = d(g_rng);
  return x;
}

Regressor random_model(double w_amp = 0.1) {
  std::uniform_real_distribution<double> w(-w_amp, w_amp);
  std::uniform_real_distribution<double> b(0.0, 1.0);
  Regressor m;
  for (double& v : m.weights) v = w(g_rng);
  for (double& v : m.bias) v = b(g_rng);
  return m;
}

// Test-side loss: batch-mean MAE, written independently of the library.
double loss_of(const Regressor& m, std::span<const Sample> batch) {
  double acc = 0;
  for (const Sample& s : batch) {
    const TraitVector p = m.forward(s.features);
    for (int t = 0; t < stats::kTraitCount; ++t)
      acc += std::fabs(p[t] - s.target[t]);
  }
  return acc / (batch.size() * stats::kTraitCount);
}

// A linear "ground truth" used to build realizable datasets.
struct Teacher {
  Regressor net;
  Teacher() {
    std::uniform_real_distribution<double> w(0.0, 0.02);
    for (double& v : net.weights) v = w(g_rng);
    for (double& v : net.bias) v = 0.2;
  }
  TraitVector label(const Features& x) const { return net.forward(x); }
};

std::vector<ClipSamples> realizable_clips(const Teacher& teacher, int count,
                                          int frames_per_clip,
                                          double feature_hi = 0.25) {
  std::vector<ClipSamples> clips;
  for (int i = 0; i < count; ++i) {
    ClipSamples clip;
    clip.clip_id = "clip" + std::to_string(i);
    const Features x = random_features(0.0, feature_hi);
    for (int f = 0; f < frames_per_clip; ++f) clip.frames.push_back(x);
    clip.label = teacher.label(x);
    clips.push_back(std::move(clip));
  }
  return clips;
}

}  // namespace

TEST_CASE("label transform inverts neuroticism only") {
  const TraitVector v = label_transform({0.2, 0.4, 0.6, 0.8, 0.3});
  CHECK(v.o == 0.2);
  CHECK(v.c == 0.4);
  CHECK(v.e == 0.6);
  CHECK(v.a == 0.8);
  CHECK(v.n_bar == doctest::Approx(0.7).epsilon(1e-15));

  CHECK(label_transform({0, 0, 0, 0, 0}).n_bar == 1.0);
  CHECK(label_transform({0, 0, 0, 0, 1}).n_bar == 0.0);

  try {
    label_transform({0.2, 0.4, 0.6, 0.8, 1.3});
    FAIL("expected OutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == errc::out_of_range);
  }
  CHECK_THROWS_AS(label_transform({-0.1, 0, 0, 0, 0}), Error);
}

TEST_CASE("feature extraction: constant frames give flat features in [0,1]") {
  const Features flat =
      extract_features(img::FrameImage::constant(256, 256, 51, 51, 51));
  for (double v : flat) CHECK(v == doctest::Approx(51.0 / 255).epsilon(1e-12));

  std::mt19937_64 rng(5);
  img::FrameImage noisy(465, 256);
  for (auto& b : noisy.pixels) b = static_cast<std::uint8_t>(rng() & 0xff);
  for (double v : extract_features(noisy)) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  // Left-to-right gradient shows up as increasing block columns.
  img::FrameImage grad(256, 256);
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 256; ++x) {
      auto* p = grad.at(x, y);
      p[0] = p[1] = p[2] = static_cast<std::uint8_t>(x);
    }
  const Features g = extract_features(grad);
  for (int row = 0; row < 8; ++row)
    for (int col = 0; col + 1 < 8; ++col)
      CHECK(g[row * 8 + col] < g[row * 8 + col + 1]);
}

TEST_CASE("epoch sampling: forced choice, determinism, uniformity") {
  std::vector<ClipSamples> singles(3);
  for (int i = 0; i < 3; ++i) {
    singles[i].clip_id = "s" + std::to_string(i);
    singles[i].frames.push_back(Features{});
  }
  std::mt19937_64 rng_a(7), rng_b(7);
  for (int round = 0; round < 5; ++round)
    for (const auto& [id, frame] : sample_epoch_frames(singles, rng_a))
      CHECK(frame == 0);

  std::vector<ClipSamples> clips(4);
  for (int i = 0; i < 4; ++i) {
    clips[i].clip_id = "c" + std::to_string(i);
    clips[i].frames.resize(3 + i);
  }
  std::mt19937_64 rng_c(99), rng_d(99);
  for (int round = 0; round < 10; ++round)
    CHECK(sample_epoch_frames(clips, rng_c) ==
          sample_epoch_frames(clips, rng_d));

  // 30-frame clip sampled over 30000 epochs: every frame lands within
  // 1/30 ± 0.01.
  std::vector<ClipSamples> one(1);
  one[0].clip_id = "long";
  one[0].frames.resize(30);
  std::mt19937_64 rng_e(2024);
  std::array<int, 30> counts{};
  for (int epoch = 0; epoch < 30000; ++epoch)
    ++counts[sample_epoch_frames(one, rng_e)[0].second];
  for (int f = 0; f < 30; ++f) {
    const double freq = counts[f] / 30000.0;
    CHECK(freq > 1.0 / 30 - 0.01);
    CHECK(freq < 1.0 / 30 + 0.01);
  }

  std::vector<ClipSamples> empty_clip(1);
  empty_clip[0].clip_id = "hollow";
  std::mt19937_64 rng_f(1);
  try {
    sample_epoch_frames(empty_clip, rng_f);
    FAIL("expected EmptyClip");
  } catch (const Error& e) {
    CHECK(e.code() == errc::empty_clip);
  }

  std::vector<PairedClipSamples> lopsided(1);
  lopsided[0].clip_id = "odd";
  lopsided[0].face_frames.resize(2);
  lopsided[0].bg_frames.resize(3);
  try {
    sample_epoch_frames(lopsided, rng_f);
    FAIL("expected MissingPairedCondition");
  } catch (const Error& e) {
    CHECK(e.code() == errc::missing_paired_condition);
  }
}

TEST_CASE("sgd: exact fit is a fixed point; velocity decays by momentum") {
  Regressor model;
  for (int t = 0; t < stats::kTraitCount; ++t) model.bias[t] = 0.3 + 0.1 * t;
  Sample s;
  s.features = Features{};     // all-zero features
  s.target = model.forward(s.features);  // predictions already exact

  const Regressor before = model;
  Velocity velocity;
  sgd_step(model, std::span(&s, 1), 0.01, 0.9, velocity);
  CHECK(model == before);
  for (double v : velocity.weights) CHECK(v == 0.0);
  for (double v : velocity.bias) CHECK(v == 0.0);

  // Nonzero incoming velocity: scaled by momentum exactly, and the params
  // coast by -lr * (momentum * v).
  velocity.bias[0] = 0.2;
  sgd_step(model, std::span(&s, 1), 0.01, 0.5, velocity);
  CHECK(velocity.bias[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(model.bias[0] ==
        doctest::Approx(before.bias[0] - 0.01 * 0.1).epsilon(1e-12));
}

TEST_CASE("sgd: hand-computed plain subgradient step on two features") {
  Regressor model;  // all zeros
  Sample s;
  s.features = Features{};
  s.features[0] = 0.5;
  s.features[1] = 0.25;
  for (int t = 0; t < stats::kTraitCount; ++t) s.target[t] = 0.8;

  Velocity velocity;
  sgd_step(model, std::span(&s, 1), 0.1, 0.0, velocity);

  // residual -0.8 on every trait, sign -1, scale 1/5:
  //   grad w[f][t] = -0.2 * x_f, grad b[t] = -0.2
  for (int t = 0; t < stats::kTraitCount; ++t) {
    CHECK(model.weights[0 * 5 + t] == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(model.weights[1 * 5 + t] == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(model.bias[t] == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(velocity.bias[t] == doctest::Approx(-0.2).epsilon(1e-12));
  }
  for (int f = 2; f < kFeatureDim; ++f)
    for (int t = 0; t < stats::kTraitCount; ++t)
      CHECK(model.weights[f * 5 + t] == 0.0);

  CHECK_THROWS_AS(sgd_step(model, {}, 0.1, 0.0, velocity), Error);
}

TEST_CASE("sgd analytic gradient matches central finite differences") {
  const double h = 1e-5;
  double worst_rel = 0.0;
  for (int point = 0; point < 20; ++point) {
    Regressor model = random_model();
    std::vector<Sample> batch(3);
    std::uniform_real_distribution<double> gap(0.05, 0.3);
    for (Sample& s : batch) {
      s.features = random_features(0.01, 1.0);
      const TraitVector at = model.forward(s.features);
      for (int t = 0; t < stats::kTraitCount; ++t)
        s.target[t] = at[t] + ((g_rng() & 1) ? gap(g_rng) : -gap(g_rng));
    }

    // Analytic gradient via a unit step: lr=1, momentum=0, zero velocity.
    Regressor stepped = model;
    Velocity velocity;
    sgd_step(stepped, batch, 1.0, 0.0, velocity);

    const auto check_coord = [&](double* param, double analytic) {
      const double saved = *param;
      *param = saved + h;
      const double up = loss_of(model, batch);
      *param = saved - h;
      const double down = loss_of(model, batch);
      *param = saved;
      const double fd = (up - down) / (2 * h);
      const double rel =
          std::fabs(analytic - fd) / std::max(std::fabs(fd), 1e-9);
      worst_rel = std::max(worst_rel, rel);
    };
    for (std::size_t i = 0; i < model.weights.size(); ++i)
      check_coord(&model.weights[i], model.weights[i] - stepped.weights[i]);
    for (std::size_t i = 0; i < model.bias.size(); ++i)
      check_coord(&model.bias[i], model.bias[i] - stepped.bias[i]);
  }
  CHECK(worst_rel < 1e-6);
}

TEST_CASE("training drives a realizable target below 1e-3 MAE") {
  const Teacher teacher;
  const auto train_clips = realizable_clips(teacher, 30, 2);
  const auto val_clips = realizable_clips(teacher, 10, 2);

  TrainConfig config;
  config.epochs = 10000;
  config.lr = 1e-4;
  config.momentum = 0.9;
  config.validate_every = 1000;
  config.rng_seed = 7;

  const TrainResult result = train::train(Regressor{}, train_clips, val_clips, config);
  REQUIRE(result.history.size() == 10);

  std::vector<Sample> final_batch;
  for (const ClipSamples& clip : train_clips)
    final_batch.push_back({clip.frames[0], clip.label});
  const double final_mae =
      loss_of(result.history.back().params, final_batch);
  CHECK(final_mae < 1e-3);
  // 30 clips cannot pin 64 weights, so held-out error is looser.
  CHECK(result.best.val_loss < 0.02);
}

TEST_CASE("training reaches a constant predictor on constant labels") {
  TraitVector constant{0.5, 0.5, 0.5, 0.5, 0.5};
  std::vector<ClipSamples> train_clips, val_clips;
  for (int i = 0; i < 20; ++i) {
    ClipSamples clip;
    clip.clip_id = "k" + std::to_string(i);
    clip.frames = {random_features(), random_features()};
    clip.label = constant;
    (i < 15 ? train_clips : val_clips).push_back(std::move(clip));
  }

  TrainConfig config;
  config.epochs = 4000;
  config.lr = 1e-5;
  config.momentum = 0.9;
  config.validate_every = 400;
  config.rng_seed = 3;

  const TrainResult result =
      train::train(Regressor{}, train_clips, val_clips, config);
  std::vector<Sample> train_batch;
  for (const ClipSamples& clip : train_clips)
    train_batch.push_back({clip.frames[0], clip.label});
  CHECK(loss_of(result.history.back().params, train_batch) < 0.01);
  CHECK(result.best.val_loss < 0.06);  // held-out floor is overfit noise
}

TEST_CASE("training history length and determinism") {
  const Teacher teacher;
  const auto train_clips = realizable_clips(teacher, 8, 3);
  const auto val_clips = realizable_clips(teacher, 4, 3);

  TrainConfig config;  // protocol defaults: 100 epochs, validate every 10
  config.rng_seed = 11;
  const TrainResult a = train::train(Regressor{}, train_clips, val_clips, config);
  CHECK(a.history.size() == 10);
  for (std::size_t i = 0; i < a.history.size(); ++i)
    CHECK(a.history[i].epoch == static_cast<int>(10 * (i + 1)));

  const TrainResult b = train::train(Regressor{}, train_clips, val_clips, config);
  REQUIRE(b.history.size() == a.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].val_loss == b.history[i].val_loss);
    CHECK(a.history[i].params == b.history[i].params);
  }

  // Best checkpoint = global minimum, earliest epoch on ties.
  std::size_t expect = 0;
  for (std::size_t i = 1; i < a.history.size(); ++i)
    if (a.history[i].val_loss < a.history[expect].val_loss) expect = i;
  CHECK(a.best.epoch == a.history[expect].epoch);
  CHECK(a.best.val_loss == a.history[expect].val_loss);
}

TEST_CASE("a model that is already perfect ties every checkpoint to epoch 10") {
  // Zero features, bias equal to the constant label: gradient is zero at
  // every step, so all checkpoints record the same loss and the tie must
  // resolve to the earliest epoch.
  TraitVector constant{0.25, 0.5, 0.75, 0.25, 0.5};
  std::vector<ClipSamples> clips(6);
  for (int i = 0; i < 6; ++i) {
    clips[i].clip_id = "z" + std::to_string(i);
    clips[i].frames = {Features{}};
    clips[i].label = constant;
  }
  Regressor perfect;
  for (int t = 0; t < stats::kTraitCount; ++t) perfect.bias[t] = constant[t];

  TrainConfig config;
  config.rng_seed = 1;
  const TrainResult result = train::train(perfect, clips, clips, config);
  CHECK(result.best.val_loss == 0.0);
  CHECK(result.best.epoch == 10);
}

TEST_CASE("config validation rejects broken settings") {
  TrainConfig config;
  config.epochs = 0;
  CHECK_THROWS_AS(config.validate(), Error);
  config = {};
  config.lr = 0.0;
  CHECK_THROWS_AS(config.validate(), Error);
  config = {};
  config.momentum = 1.0;
  CHECK_THROWS_AS(config.validate(), Error);
  config = {};
  config.validate_every = 3;  // does not divide 100
  CHECK_THROWS_AS(config.validate(), Error);
  config = {};
  CHECK_NOTHROW(config.validate());
}

namespace {

std::vector<PairedClipSamples> paired_from(const Teacher& teacher, int count,
                                           int frames, bool noisy_bg) {
  std::vector<PairedClipSamples> clips;
  std::uniform_real_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    PairedClipSamples clip;
    clip.clip_id = "p" + std::to_string(i);
    const Features face = random_features(0.0, 0.25);
    for (int f = 0; f < frames; ++f) {
      clip.face_frames.push_back(face);
      clip.bg_frames.push_back(noisy_bg ? random_features() : face);
    }
    clip.label = teacher.label(face);
    clips.push_back(std::move(clip));
  }
  return clips;
}

}  // namespace

TEST_CASE("fusion training never touches the frozen branches") {
  const Teacher teacher;
  const auto train_clips = paired_from(teacher, 12, 2, true);
  const auto val_clips = paired_from(teacher, 6, 2, true);
  const Regressor face = teacher.net;
  const Regressor bg = random_model(0.05);

  const std::string face_before = serialize_regressor_params(face);
  const std::string bg_before = serialize_regressor_params(bg);

  TrainConfig config;
  config.rng_seed = 13;
  const FusionTrainResult result =
      train_fusion(face, bg, train_clips, val_clips, config);

  CHECK(serialize_regressor_params(result.best.params.face_branch) ==
        face_before);
  CHECK(serialize_regressor_params(result.best.params.bg_branch) ==
        bg_before);
  for (const FusionCheckpoint& ckpt : result.history) {
    CHECK(serialize_regressor_params(ckpt.params.face_branch) == face_before);
    CHECK(serialize_regressor_params(ckpt.params.bg_branch) == bg_before);
  }
}

TEST_CASE("fusion over two identical perfect branches stays perfect") {
  const Teacher teacher;
  const auto train_clips = paired_from(teacher, 10, 2, false);
  const auto val_clips = paired_from(teacher, 5, 2, false);

  // Single perfect branch baseline.
  std::vector<ClipSamples> val_single;
  for (const PairedClipSamples& clip : val_clips)
    val_single.push_back({clip.clip_id, clip.face_frames, clip.label});
  std::vector<TraitVector> preds, truths;
  for (const ClipSamples& clip : val_single) {
    preds.push_back(teacher.net.predict_frame(clip.frames[0]));
    truths.push_back(clip.label);
  }
  const double single_mae = stats::mae(preds, truths);

  TrainConfig config;
  config.rng_seed = 17;
  const FusionTrainResult result = train_fusion(
      teacher.net, teacher.net, train_clips, val_clips, config);
  CHECK(result.best.val_loss <= single_mae + 1e-6);
}

TEST_CASE("fusion training routes a pure-noise branch below 10%") {
  const Teacher teacher;
  const auto train_clips = paired_from(teacher, 60, 3, true);
  const auto val_clips = paired_from(teacher, 20, 3, true);
  const Regressor face = teacher.net;  // perfect by construction
  // The noise branch must emit ZERO-MEAN noise: a constant output component
  // doubles as a bias, which fusion training has no reason to remove.
  Regressor bg = random_model(0.3);
  for (int t = 0; t < stats::kTraitCount; ++t) {
    double mean_out = 0;
    for (int f = 0; f < kFeatureDim; ++f)
      mean_out += bg.weights[f * 5 + t] * 0.5;  // E[x_f] = 0.5
    bg.bias[t] = -mean_out;
  }

  TrainConfig config;
  config.epochs = 4000;
  config.lr = 5e-4;
  config.momentum = 0.9;
  config.validate_every = 400;
  config.rng_seed = 19;
  const FusionTrainResult result =
      train_fusion(face, bg, train_clips, val_clips, config);

  const FusionModel& model = result.best.params;
  double face_mag = 0, bg_mag = 0;
  for (const PairedClipSamples& clip : val_clips)
    for (std::size_t f = 0; f < clip.face_frames.size(); ++f) {
      const auto u =
          model.branch_outputs(clip.face_frames[f], clip.bg_frames[f]);
      for (int t = 0; t < stats::kTraitCount; ++t) {
        double from_face = 0, from_bg = 0;
        for (int j = 0; j < stats::kTraitCount; ++j) {
          from_face += model.fusion_weights[j * 5 + t] * u[j];
          from_bg += model.fusion_weights[(j + 5) * 5 + t] * u[j + 5];
        }
        face_mag += std::fabs(from_face);
        bg_mag += std::fabs(from_bg);
      }
    }
  CHECK(bg_mag / (face_mag + bg_mag) < 0.10);
  CHECK(result.best.val_loss < 0.05);
}

TEST_CASE("prediction averages clamped per-frame outputs") {
  Regressor model;
  model.bias = {0.2, 0.4, 0.6, 0.8, 1.0};
  Features zero{};

  const TraitVector single = predict(model, {zero});
  CHECK(single == TraitVector{0.2, 0.4, 0.6, 0.8, 1.0});

  // A second frame pushing predictions past the clamp boundary.
  Regressor hot;
  for (double& w : hot.weights) w = 1.0;
  hot.bias = {-5, -5, -5, -5, -5};
  const TraitVector clamped = predict(hot, {random_features()});
  for (int t = 0; t < stats::kTraitCount; ++t) {
    CHECK(clamped[t] >= 0.0);
    CHECK(clamped[t] <= 1.0);
  }

  // Brute-force mean over ten random frames.
  std::vector<Features> frames;
  for (int i = 0; i < 10; ++i) frames.push_back(random_features());
  const Regressor m = random_model();
  const TraitVector got = predict(m, frames);
  for (int t = 0; t < stats::kTraitCount; ++t) {
    double acc = 0;
    for (const Features& f : frames) acc += m.predict_frame(f)[t];
    CHECK(got[t] == doctest::Approx(acc / 10).epsilon(1e-12));
  }

  CHECK_THROWS_AS(predict(model, {}), Error);
}

TEST_CASE("checkpoints round-trip bit for bit and write stable bytes") {
  Checkpoint ckpt;
  ckpt.epoch = 40;
  ckpt.val_loss = 0.123456789123456789;
  ckpt.params = random_model();

  const std::string path_a = "tl_ckpt_a.txt";
  const std::string path_b = "tl_ckpt_b.txt";
  save_checkpoint(path_a, ckpt);
  save_checkpoint(path_b, ckpt);

  const auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  CHECK(slurp(path_a) == slurp(path_b));

  const Checkpoint back = load_checkpoint(path_a);
  CHECK(back.epoch == ckpt.epoch);
  CHECK(back.val_loss == ckpt.val_loss);
  CHECK(back.params == ckpt.params);

  std::remove(path_a.c_str());
  std::remove(path_b.c_str());
}

TEST_CASE("fusion checkpoints embed byte-identical branch sections") {
  FusionCheckpoint ckpt;
  ckpt.epoch = 100;
  ckpt.val_loss = 0.0625;
  ckpt.params = FusionModel::averaging(random_model(), random_model());

  const std::string path = "tl_fusion_ckpt.txt";
  save_fusion_checkpoint(path, ckpt);
  const FusionCheckpoint back = load_fusion_checkpoint(path);
  CHECK(back.params.fusion_weights == ckpt.params.fusion_weights);
  CHECK(back.params.fusion_bias == ckpt.params.fusion_bias);
  CHECK(back.params.face_branch == ckpt.params.face_branch);
  CHECK(back.params.bg_branch == ckpt.params.bg_branch);

  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find(serialize_regressor_params(ckpt.params.face_branch)) !=
        std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects damaged files") {
  const std::string path = "tl_ckpt_bad.txt";
  {
    std::ofstream out(path);
    out << "not a checkpoint at all\n";
  }
  try {
    load_checkpoint(path);
    FAIL("expected ParseFailure");
  } catch (const Error& e) {
    CHECK(e.code() == errc::parse_failure);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_checkpoint("no_such_checkpoint.txt"), Error);

  // Truncated parameter block.
  Checkpoint ckpt;
  ckpt.params = random_model();
  save_checkpoint(path, ckpt);
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  in.close();
  const std::string whole = ss.str();
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << whole.substr(0, whole.size() / 2);
  }
  CHECK_THROWS_AS(load_checkpoint(path), Error);
  std::remove(path.c_str());
}
