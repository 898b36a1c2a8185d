#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "traitlab/errors.hpp"

namespace traitlab::stats {

inline constexpr int kTraitCount = 5;
inline constexpr std::array<const char*, kTraitCount> kTraitNames = {
    "O", "C", "E", "A", "N_bar"};

// Five apparent-trait scores in [0,1]. Neuroticism is stored inverted:
// n_bar holds 1 - N.
struct TraitVector {
  double o = 0, c = 0, e = 0, a = 0, n_bar = 0;

  double operator[](int i) const;
  double& operator[](int i);
  std::array<double, kTraitCount> values() const { return {o, c, e, a, n_bar}; }
  double mean() const { return (o + c + e + a + n_bar) / kTraitCount; }
  // Throws out_of_range unless every component is finite and within [0,1].
  void validate(const std::string& context) const;

  friend bool operator==(const TraitVector&, const TraitVector&) = default;
};

struct PredictionRow {
  std::string video_id;
  TraitVector predicted;
  TraitVector truth;
};

// video_ids unique; correlations over the table need at least 4 rows.
struct PredictionTable {
  std::vector<PredictionRow> rows;
};

struct CorrelationResult {
  double rho = 0;    // in [-1, 1]
  int n = 0;         // sample count
  double z_prime = 0;  // arctanh(rho); +/-infinity when |rho| is at unity
};

// z_obs with its one-tailed upper probability. alpha_corrected/significant
// are filled in by significance(); compare_correlations leaves them unset.
struct ComparisonResult {
  double z_obs = 0;
  double p = 0;  // in (0, 0.5]
  double alpha_corrected = 0;
  bool significant = false;
};

struct SignificanceDecision {
  double alpha_corrected = 0;
  bool significant = false;
};

// Pearson correlation with population moments. Requires equal lengths >= 4
// and non-constant inputs.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

// arctanh(rho). Throws rho_at_unity when |rho| >= 1 - 1e-12.
double fisher_z(double rho);

// Standardized difference of two Fisher-transformed correlations:
// SE = sqrt(1/(n1-3) + 1/(n2-3)), z_obs = (z'1 - z'2)/SE, p = p_from_z(z_obs).
ComparisonResult compare_correlations(const CorrelationResult& r1,
                                      const CorrelationResult& r2);

// One-tailed upper probability of |z_obs| under the standard normal:
// 0.5 * erfc(|z_obs| / sqrt(2)). Monotone decreasing in |z_obs|, p(0) = 0.5.
double p_from_z(double z_obs);

// Bonferroni-corrected significance decision: alpha_corrected =
// alpha / num_models, significant iff p < alpha_corrected.
SignificanceDecision significance(double p, double alpha = 0.05,
                                  int num_models = 3);

// Mean absolute error over all rows and all five traits.
double mae(std::span<const TraitVector> pred, std::span<const TraitVector> truth);

struct FramePrediction {
  std::string video_id;
  int frame_index = 0;
  TraitVector traits;
};

// Per video, per trait arithmetic mean across frames. Output keeps the
// first-appearance order of video ids.
std::vector<std::pair<std::string, TraitVector>> aggregate_predictions(
    std::span<const FramePrediction> frame_preds);

// Per video, average the five predicted traits into one scalar and the five
// truth traits into another, then correlate the scalar pairs.
CorrelationResult mean_trait_correlation(const PredictionTable& table);

// Pearson per trait column (predicted vs truth).
std::array<CorrelationResult, kTraitCount> per_trait_correlations(
    const PredictionTable& table);

}  // namespace traitlab::stats
