#include "traitlab/trainkit.hpp"

#include <algorithm>
#include <cmath>

#include "traitlab/rng.hpp"

namespace traitlab::train {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Batch-mean MAE subgradient scale for one (sample, trait) residual.
double sign_of(double residual) {
  if (residual > 0) return 1.0;
  if (residual < 0) return -1.0;
  return 0.0;  // flat spot: defined as zero
}

void require_finite_gradient(std::span<const double> grad) {
  for (double g : grad)
    if (!std::isfinite(g))
      throw Error(errc::non_finite_gradient,
                  "gradient left the finite range");
}

}  // namespace

Features extract_features(const img::FrameImage& frame) {
  if (frame.width <= 0 || frame.height <= 0)
    throw Error(errc::empty_input, "cannot extract features from no pixels");
  Features out{};
  for (int by = 0; by < 8; ++by) {
    const int y0 = by * frame.height / 8;
    const int y1 = (by + 1) * frame.height / 8;
    for (int bx = 0; bx < 8; ++bx) {
      const int x0 = bx * frame.width / 8;
      const int x1 = (bx + 1) * frame.width / 8;
      double acc = 0.0;
      long long count = 0;
      for (int y = y0; y < std::max(y1, y0 + 1); ++y)
        for (int x = x0; x < std::max(x1, x0 + 1); ++x) {
          const std::uint8_t* p =
              frame.at(std::min(x, frame.width - 1),
                       std::min(y, frame.height - 1));
          acc += (p[0] + p[1] + p[2]) / 3.0;
          ++count;
        }
      out[by * 8 + bx] = acc / (count * 255.0);
    }
  }
  return out;
}

stats::TraitVector Regressor::forward(const Features& x) const {
  stats::TraitVector out;
  for (int t = 0; t < stats::kTraitCount; ++t) {
    double acc = bias[t];
    for (int f = 0; f < kFeatureDim; ++f)
      acc += weights[f * stats::kTraitCount + t] * x[f];
    out[t] = acc;
  }
  return out;
}

stats::TraitVector Regressor::predict_frame(const Features& x) const {
  stats::TraitVector out = forward(x);
  for (int t = 0; t < stats::kTraitCount; ++t) out[t] = clamp01(out[t]);
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1)
    throw Error(errc::out_of_range, "epochs must be at least 1");
  if (!(lr > 0) || !std::isfinite(lr))
    throw Error(errc::out_of_range, "learning rate must be positive");
  if (!(momentum >= 0) || momentum >= 1)
    throw Error(errc::out_of_range, "momentum must lie in [0, 1)");
  if (validate_every < 1)
    throw Error(errc::out_of_range, "validate_every must be at least 1");
  if (epochs % validate_every != 0)
    throw Error(errc::out_of_range,
                "validate_every must divide the epoch count evenly");
}

FusionModel FusionModel::averaging(const Regressor& face,
                                   const Regressor& bg) {
  FusionModel model;
  model.face_branch = face;
  model.bg_branch = bg;
  for (int t = 0; t < stats::kTraitCount; ++t) {
    model.fusion_weights[t * stats::kTraitCount + t] = 0.5;
    model.fusion_weights[(t + stats::kTraitCount) * stats::kTraitCount + t] =
        0.5;
  }
  return model;
}

std::array<double, kFusionInputDim> FusionModel::branch_outputs(
    const Features& face, const Features& bg) const {
  // Raw branch outputs feed the fusion layer; clamping stays a
  // prediction-time concern.
  const stats::TraitVector f = face_branch.forward(face);
  const stats::TraitVector b = bg_branch.forward(bg);
  std::array<double, kFusionInputDim> u{};
  for (int t = 0; t < stats::kTraitCount; ++t) {
    u[t] = f[t];
    u[t + stats::kTraitCount] = b[t];
  }
  return u;
}

stats::TraitVector FusionModel::forward(const Features& face,
                                        const Features& bg) const {
  const std::array<double, kFusionInputDim> u = branch_outputs(face, bg);
  stats::TraitVector out;
  for (int t = 0; t < stats::kTraitCount; ++t) {
    double acc = fusion_bias[t];
    for (int j = 0; j < kFusionInputDim; ++j)
      acc += fusion_weights[j * stats::kTraitCount + t] * u[j];
    out[t] = acc;
  }
  return out;
}

stats::TraitVector FusionModel::predict_frame(const Features& face,
                                              const Features& bg) const {
  stats::TraitVector out = forward(face, bg);
  for (int t = 0; t < stats::kTraitCount; ++t) out[t] = clamp01(out[t]);
  return out;
}

stats::TraitVector label_transform(const std::array<double, 5>& raw) {
  for (double v : raw)
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(errc::out_of_range,
                  "raw trait scores must lie in [0, 1]");
  return {raw[0], raw[1], raw[2], raw[3], 1.0 - raw[4]};
}

namespace {

template <typename Clip>
std::vector<std::pair<std::string, int>> sample_impl(
    const std::vector<Clip>& clips, std::mt19937_64& rng,
    std::size_t (*frame_count)(const Clip&)) {
  std::vector<std::pair<std::string, int>> picks;
  picks.reserve(clips.size());
  for (const Clip& clip : clips) {
    const std::size_t n = frame_count(clip);
    if (n == 0)
      throw Error(errc::empty_clip, "clip has no frames: " + clip.clip_id);
    picks.emplace_back(clip.clip_id,
                       static_cast<int>(uniform_index(rng, n)));
  }
  return picks;
}

}  // namespace

std::vector<std::pair<std::string, int>> sample_epoch_frames(
    const std::vector<ClipSamples>& clips, std::mt19937_64& rng) {
  return sample_impl<ClipSamples>(
      clips, rng, [](const ClipSamples& c) { return c.frames.size(); });
}

std::vector<std::pair<std::string, int>> sample_epoch_frames(
    const std::vector<PairedClipSamples>& clips, std::mt19937_64& rng) {
  for (const PairedClipSamples& clip : clips)
    if (clip.face_frames.size() != clip.bg_frames.size())
      throw Error(errc::missing_paired_condition,
                  "face/background frame counts differ for " + clip.clip_id);
  return sample_impl<PairedClipSamples>(
      clips, rng,
      [](const PairedClipSamples& c) { return c.face_frames.size(); });
}

void sgd_step(Regressor& model, std::span<const Sample> batch, double lr,
              double momentum, Velocity& velocity) {
  if (batch.empty())
    throw Error(errc::empty_input, "sgd step over an empty batch");

  std::array<double, kFeatureDim * stats::kTraitCount> gw{};
  std::array<double, stats::kTraitCount> gb{};
  const double inv =
      1.0 / (static_cast<double>(batch.size()) * stats::kTraitCount);
  for (const Sample& sample : batch) {
    const stats::TraitVector pred = model.forward(sample.features);
    for (int t = 0; t < stats::kTraitCount; ++t) {
      const double g = sign_of(pred[t] - sample.target[t]) * inv;
      if (g == 0.0) continue;
      for (int f = 0; f < kFeatureDim; ++f)
        gw[f * stats::kTraitCount + t] += g * sample.features[f];
      gb[t] += g;
    }
  }
  require_finite_gradient(gw);
  require_finite_gradient(gb);

  for (std::size_t i = 0; i < gw.size(); ++i) {
    velocity.weights[i] = momentum * velocity.weights[i] + gw[i];
    model.weights[i] -= lr * velocity.weights[i];
  }
  for (std::size_t i = 0; i < gb.size(); ++i) {
    velocity.bias[i] = momentum * velocity.bias[i] + gb[i];
    model.bias[i] -= lr * velocity.bias[i];
  }
}

void sgd_fusion_step(FusionModel& model, std::span<const PairedSample> batch,
                     double lr, double momentum, FusionVelocity& velocity) {
  if (batch.empty())
    throw Error(errc::empty_input, "fusion step over an empty batch");

  std::array<double, kFusionInputDim * stats::kTraitCount> gw{};
  std::array<double, stats::kTraitCount> gb{};
  const double inv =
      1.0 / (static_cast<double>(batch.size()) * stats::kTraitCount);
  for (const PairedSample& sample : batch) {
    const std::array<double, kFusionInputDim> u =
        model.branch_outputs(sample.face, sample.bg);
    stats::TraitVector pred;
    for (int t = 0; t < stats::kTraitCount; ++t) {
      double acc = model.fusion_bias[t];
      for (int j = 0; j < kFusionInputDim; ++j)
        acc += model.fusion_weights[j * stats::kTraitCount + t] * u[j];
      pred[t] = acc;
    }
    for (int t = 0; t < stats::kTraitCount; ++t) {
      const double g = sign_of(pred[t] - sample.target[t]) * inv;
      if (g == 0.0) continue;
      for (int j = 0; j < kFusionInputDim; ++j)
        gw[j * stats::kTraitCount + t] += g * u[j];
      gb[t] += g;
    }
  }
  require_finite_gradient(gw);
  require_finite_gradient(gb);

  for (std::size_t i = 0; i < gw.size(); ++i) {
    velocity.weights[i] = momentum * velocity.weights[i] + gw[i];
    model.fusion_weights[i] -= lr * velocity.weights[i];
  }
  for (std::size_t i = 0; i < gb.size(); ++i) {
    velocity.bias[i] = momentum * velocity.bias[i] + gb[i];
    model.fusion_bias[i] -= lr * velocity.bias[i];
  }
}

namespace {

template <typename Clip, typename Forward>
double validation_mae(const std::vector<Clip>& val_clips, Forward forward) {
  // Deterministic validation: the first frame of every clip, clamped.
  std::vector<stats::TraitVector> preds, truths;
  preds.reserve(val_clips.size());
  truths.reserve(val_clips.size());
  for (const Clip& clip : val_clips) {
    preds.push_back(forward(clip));
    truths.push_back(clip.label);
  }
  return stats::mae(preds, truths);
}

template <typename Result>
void pick_best(Result& result) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.history.size(); ++i)
    if (result.history[i].val_loss < result.history[best].val_loss)
      best = i;  // strict: ties keep the earliest epoch
  result.best = result.history[best];
}

}  // namespace

TrainResult train(const Regressor& init,
                  const std::vector<ClipSamples>& train_clips,
                  const std::vector<ClipSamples>& val_clips,
                  const TrainConfig& config) {
  config.validate();
  if (train_clips.empty())
    throw Error(errc::empty_input, "training split has no clips");
  if (val_clips.empty())
    throw Error(errc::empty_input, "validation split has no clips");
  for (const ClipSamples& clip : val_clips)
    if (clip.frames.empty())
      throw Error(errc::empty_clip,
                  "validation clip has no frames: " + clip.clip_id);

  std::mt19937_64 rng(config.rng_seed);
  Regressor model = init;
  Velocity velocity;
  TrainResult result;
  std::vector<Sample> batch(train_clips.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto picks = sample_epoch_frames(train_clips, rng);
    for (std::size_t i = 0; i < train_clips.size(); ++i)
      batch[i] = {train_clips[i].frames[picks[i].second],
                  train_clips[i].label};
    sgd_step(model, batch, config.lr, config.momentum, velocity);

    if (epoch % config.validate_every == 0) {
      const double loss =
          validation_mae(val_clips, [&model](const ClipSamples& clip) {
            return model.predict_frame(clip.frames.front());
          });
      result.history.push_back({epoch, model, loss});
    }
  }
  pick_best(result);
  return result;
}

FusionTrainResult train_fusion(const Regressor& face_branch,
                               const Regressor& bg_branch,
                               const std::vector<PairedClipSamples>& train_clips,
                               const std::vector<PairedClipSamples>& val_clips,
                               const TrainConfig& config) {
  config.validate();
  if (train_clips.empty())
    throw Error(errc::empty_input, "training split has no clips");
  if (val_clips.empty())
    throw Error(errc::empty_input, "validation split has no clips");
  for (const PairedClipSamples& clip : val_clips) {
    if (clip.face_frames.empty())
      throw Error(errc::empty_clip,
                  "validation clip has no frames: " + clip.clip_id);
    if (clip.face_frames.size() != clip.bg_frames.size())
      throw Error(errc::missing_paired_condition,
                  "face/background frame counts differ for " + clip.clip_id);
  }

  std::mt19937_64 rng(config.rng_seed);
  FusionModel model = FusionModel::averaging(face_branch, bg_branch);
  FusionVelocity velocity;
  FusionTrainResult result;
  std::vector<PairedSample> batch(train_clips.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto picks = sample_epoch_frames(train_clips, rng);
    for (std::size_t i = 0; i < train_clips.size(); ++i) {
      const int frame = picks[i].second;
      batch[i] = {train_clips[i].face_frames[frame],
                  train_clips[i].bg_frames[frame], train_clips[i].label};
    }
    sgd_fusion_step(model, batch, config.lr, config.momentum, velocity);

    if (epoch % config.validate_every == 0) {
      const double loss = validation_mae(
          val_clips, [&model](const PairedClipSamples& clip) {
            return model.predict_frame(clip.face_frames.front(),
                                       clip.bg_frames.front());
          });
      result.history.push_back({epoch, model, loss});
    }
  }
  pick_best(result);
  return result;
}

stats::TraitVector predict(const Regressor& model,
                           const std::vector<Features>& frames) {
  if (frames.empty())
    throw Error(errc::empty_video, "no frames to predict from");
  std::vector<stats::FramePrediction> rows;
  rows.reserve(frames.size());
  int index = 0;
  for (const Features& f : frames)
    rows.push_back({"video", index++, model.predict_frame(f)});
  return stats::aggregate_predictions(rows).front().second;
}

stats::TraitVector predict(const FusionModel& model,
                           const std::vector<Features>& face_frames,
                           const std::vector<Features>& bg_frames) {
  if (face_frames.empty())
    throw Error(errc::empty_video, "no frames to predict from");
  if (face_frames.size() != bg_frames.size())
    throw Error(errc::missing_paired_condition,
                "face/background frame counts differ");
  std::vector<stats::FramePrediction> rows;
  rows.reserve(face_frames.size());
  for (std::size_t i = 0; i < face_frames.size(); ++i)
    rows.push_back({"video", static_cast<int>(i),
                    model.predict_frame(face_frames[i], bg_frames[i])});
  return stats::aggregate_predictions(rows).front().second;
}

}  // namespace traitlab::train
