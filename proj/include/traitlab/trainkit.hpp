#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "traitlab/image.hpp"
#include "traitlab/stats.hpp"

namespace traitlab::train {

inline constexpr int kFeatureDim = 64;  // 8x8 grayscale map, flattened
inline constexpr int kFusionInputDim = 2 * stats::kTraitCount;

using Features = std::array<double, kFeatureDim>;

// Fixed extractor: 8x8 block-mean grayscale downsample, row-major flatten,
// scaled into [0,1]. Not trainable.
Features extract_features(const img::FrameImage& frame);

// Linear head over the fixed features. Output clamping to [0,1] happens
// only at prediction time, never inside the training loss.
struct Regressor {
  std::array<double, kFeatureDim * stats::kTraitCount> weights{};  // [f*5+t]
  std::array<double, stats::kTraitCount> bias{};

  stats::TraitVector forward(const Features& x) const;        // raw
  stats::TraitVector predict_frame(const Features& x) const;  // clamped

  static constexpr int parameter_count() {
    return kFeatureDim * stats::kTraitCount + stats::kTraitCount;
  }
  friend bool operator==(const Regressor&, const Regressor&) = default;
};

struct TrainConfig {
  int epochs = 100;
  double lr = 0.001;
  double momentum = 0.9;
  int validate_every = 10;
  std::uint64_t rng_seed = 0;

  // epochs >= 1, lr > 0, momentum in [0,1), validate_every >= 1 and
  // dividing epochs evenly.
  void validate() const;
};

// Two frozen branches plus the only trainable part, a linear map over the
// concatenated 5-dim branch outputs (10 -> 5).
struct FusionModel {
  Regressor face_branch;
  Regressor bg_branch;
  std::array<double, kFusionInputDim * stats::kTraitCount>
      fusion_weights{};  // [j*5+t]
  std::array<double, stats::kTraitCount> fusion_bias{};

  // Branch-averaging start: each output is (face_t + bg_t) / 2, so two
  // perfect branches make the fusion perfect before the first step.
  static FusionModel averaging(const Regressor& face, const Regressor& bg);

  std::array<double, kFusionInputDim> branch_outputs(const Features& face,
                                                     const Features& bg) const;
  stats::TraitVector forward(const Features& face, const Features& bg) const;
  stats::TraitVector predict_frame(const Features& face,
                                   const Features& bg) const;
};

struct Checkpoint {
  int epoch = 0;
  Regressor params;
  double val_loss = 0.0;
};

struct FusionCheckpoint {
  int epoch = 0;
  FusionModel params;
  double val_loss = 0.0;
};

struct Sample {
  Features features{};
  stats::TraitVector target;
};

struct PairedSample {
  Features face{};
  Features bg{};
  stats::TraitVector target;
};

// One clip's frames (as extracted features) plus its video-level label.
struct ClipSamples {
  std::string clip_id;
  std::vector<Features> frames;
  stats::TraitVector label;
};

struct PairedClipSamples {
  std::string clip_id;
  std::vector<Features> face_frames;
  std::vector<Features> bg_frames;
  stats::TraitVector label;
};

struct Velocity {
  std::array<double, kFeatureDim * stats::kTraitCount> weights{};
  std::array<double, stats::kTraitCount> bias{};
};

struct FusionVelocity {
  std::array<double, kFusionInputDim * stats::kTraitCount> weights{};
  std::array<double, stats::kTraitCount> bias{};
};

// (O,C,E,A,N) -> (O,C,E,A,1-N); every component must be in [0,1].
stats::TraitVector label_transform(const std::array<double, 5>& raw);

// One uniformly drawn frame index per clip, in clip order; reproducible
// from the rng state alone.
std::vector<std::pair<std::string, int>> sample_epoch_frames(
    const std::vector<ClipSamples>& clips, std::mt19937_64& rng);
std::vector<std::pair<std::string, int>> sample_epoch_frames(
    const std::vector<PairedClipSamples>& clips, std::mt19937_64& rng);

// Batch-mean MAE subgradient (sign(0) = 0), classical momentum:
// v <- momentum*v + g; params <- params - lr*v.
void sgd_step(Regressor& model, std::span<const Sample> batch, double lr,
              double momentum, Velocity& velocity);
void sgd_fusion_step(FusionModel& model, std::span<const PairedSample> batch,
                     double lr, double momentum, FusionVelocity& velocity);

struct TrainResult {
  Checkpoint best;
  std::vector<Checkpoint> history;
};

struct FusionTrainResult {
  FusionCheckpoint best;
  std::vector<FusionCheckpoint> history;
};

// Full-batch step per epoch over one sampled frame per clip; validation on
// the first frame of every validation clip each validate_every epochs.
// Best checkpoint: minimum val_loss, ties to the earliest epoch.
TrainResult train(const Regressor& init,
                  const std::vector<ClipSamples>& train_clips,
                  const std::vector<ClipSamples>& val_clips,
                  const TrainConfig& config);

// Same protocol with the branches frozen; only the fusion layer moves.
FusionTrainResult train_fusion(const Regressor& face_branch,
                               const Regressor& bg_branch,
                               const std::vector<PairedClipSamples>& train_clips,
                               const std::vector<PairedClipSamples>& val_clips,
                               const TrainConfig& config);

// Per-video prediction: clamped per-frame forward passes averaged per trait
// (delegates the averaging to stats::aggregate_predictions).
stats::TraitVector predict(const Regressor& model,
                           const std::vector<Features>& frames);
stats::TraitVector predict(const FusionModel& model,
                           const std::vector<Features>& face_frames,
                           const std::vector<Features>& bg_frames);

// Checkpoint files: versioned text, hexfloat parameters, byte-stable for
// equal seeds and data. The serialized parameter block is also the freeze
// witness compared before/after fusion training.
std::string serialize_regressor_params(const Regressor& model);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);
void save_fusion_checkpoint(const std::string& path,
                            const FusionCheckpoint& ckpt);
FusionCheckpoint load_fusion_checkpoint(const std::string& path);

}  // namespace traitlab::train
