#include "traitlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace traitlab::stats {

namespace {

constexpr double kUnityMargin = 1e-12;

bool all_equal(std::span<const double> v) {
  for (const double x : v)
    if (x != v[0]) return false;
  return true;
}

double guarded_z_prime(double rho) {
  if (std::abs(rho) >= 1.0 - kUnityMargin)
    return std::copysign(std::numeric_limits<double>::infinity(), rho);
  return std::atanh(rho);
}

}  // namespace

double TraitVector::operator[](int i) const {
  return const_cast<TraitVector&>(*this)[i];
}

double& TraitVector::operator[](int i) {
  switch (i) {
    case 0:
      return o;
    case 1:
      return c;
    case 2:
      return e;
    case 3:
      return a;
    case 4:
      return n_bar;
  }
  throw Error(errc::out_of_range, "trait index out of range");
}

void TraitVector::validate(const std::string& context) const {
  for (int i = 0; i < kTraitCount; ++i) {
    const double v = (*this)[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw Error(errc::out_of_range, context + ": trait " +
                                          std::string(kTraitNames[i]) +
                                          " outside [0,1]: " + std::to_string(v));
    }
  }
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(errc::length_mismatch,
                "pearson inputs differ in length: " + std::to_string(x.size()) +
                    " vs " + std::to_string(y.size()));
  const int n = static_cast<int>(x.size());
  if (n <= 3)
    throw Error(errc::too_few_samples,
                "pearson needs more than 3 samples, got " + std::to_string(n));
  if (all_equal(x) || all_equal(y))
    throw Error(errc::constant_input, "pearson input vector is constant");

  double mean_x = 0, mean_y = 0;
  for (int i = 0; i < n; ++i) {
    mean_x += x[i];
    mean_y += y[i];
  }
  mean_x /= n;
  mean_y /= n;

  double cov = 0, var_x = 0, var_y = 0;
  for (int i = 0; i < n; ++i) {
    const double dx = x[i] - mean_x;
    const double dy = y[i] - mean_y;
    cov += dx * dy;
    var_x += dx * dx;
    var_y += dy * dy;
  }
  if (var_x == 0.0 || var_y == 0.0)
    throw Error(errc::constant_input, "pearson input has zero variance");

  double rho = cov / std::sqrt(var_x * var_y);
  rho = std::clamp(rho, -1.0, 1.0);

  CorrelationResult r;
  r.rho = rho;
  r.n = n;
  r.z_prime = guarded_z_prime(rho);
  return r;
}

double fisher_z(double rho) {
  if (!(std::abs(rho) < 1.0 - kUnityMargin))
    throw Error(errc::rho_at_unity,
                "fisher z-transform undefined this close to |rho| = 1: " +
                    std::to_string(rho));
  return std::atanh(rho);
}

double p_from_z(double z_obs) {
  return 0.5 * std::erfc(std::abs(z_obs) / std::sqrt(2.0));
}

ComparisonResult compare_correlations(const CorrelationResult& r1,
                                      const CorrelationResult& r2) {
  if (r1.n <= 3 || r2.n <= 3)
    throw Error(errc::too_few_samples,
                "correlation comparison needs n > 3 on both sides");
  if (std::abs(r1.rho) >= 1.0 - kUnityMargin ||
      std::abs(r2.rho) >= 1.0 - kUnityMargin)
    throw Error(errc::rho_at_unity,
                "correlation comparison undefined at |rho| = 1");

  const double se = std::sqrt(1.0 / (r1.n - 3) + 1.0 / (r2.n - 3));
  ComparisonResult c;
  c.z_obs = (r1.z_prime - r2.z_prime) / se;
  c.p = p_from_z(c.z_obs);
  return c;
}

SignificanceDecision significance(double p, double alpha, int num_models) {
  if (!(alpha > 0.0) || !(alpha < 1.0) || num_models < 1)
    throw Error(errc::invalid_alpha,
                "significance requires alpha in (0,1) and num_models >= 1");
  if (!(p > 0.0) || !(p <= 0.5))
    throw Error(errc::out_of_range,
                "p must lie in (0, 0.5], got " + std::to_string(p));
  SignificanceDecision d;
  d.alpha_corrected = alpha / num_models;
  d.significant = p < d.alpha_corrected;
  return d;
}

double mae(std::span<const TraitVector> pred, std::span<const TraitVector> truth) {
  if (pred.size() != truth.size())
    throw Error(errc::length_mismatch, "mae inputs differ in length");
  if (pred.empty()) throw Error(errc::length_mismatch, "mae inputs are empty");
  double total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (int t = 0; t < kTraitCount; ++t)
      total += std::abs(pred[i][t] - truth[i][t]);
  return total / (static_cast<double>(pred.size()) * kTraitCount);
}

std::vector<std::pair<std::string, TraitVector>> aggregate_predictions(
    std::span<const FramePrediction> frame_preds) {
  if (frame_preds.empty())
    throw Error(errc::empty_video, "no frame predictions to aggregate");

  std::vector<std::pair<std::string, TraitVector>> out;
  std::vector<int> counts;
  std::unordered_map<std::string, std::size_t> index;
  for (const FramePrediction& fp : frame_preds) {
    auto [it, inserted] = index.try_emplace(fp.video_id, out.size());
    if (inserted) {
      out.push_back({fp.video_id, TraitVector{}});
      counts.push_back(0);
    }
    TraitVector& acc = out[it->second].second;
    for (int t = 0; t < kTraitCount; ++t) acc[t] += fp.traits[t];
    ++counts[it->second];
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (int t = 0; t < kTraitCount; ++t) out[i].second[t] /= counts[i];
  return out;
}

CorrelationResult mean_trait_correlation(const PredictionTable& table) {
  std::vector<double> pred_scalar, truth_scalar;
  pred_scalar.reserve(table.rows.size());
  truth_scalar.reserve(table.rows.size());
  for (const PredictionRow& row : table.rows) {
    pred_scalar.push_back(row.predicted.mean());
    truth_scalar.push_back(row.truth.mean());
  }
  return pearson(pred_scalar, truth_scalar);
}

std::array<CorrelationResult, kTraitCount> per_trait_correlations(
    const PredictionTable& table) {
  std::array<CorrelationResult, kTraitCount> out;
  std::vector<double> pred, truth;
  for (int t = 0; t < kTraitCount; ++t) {
    pred.clear();
    truth.clear();
    for (const PredictionRow& row : table.rows) {
      pred.push_back(row.predicted[t]);
      truth.push_back(row.truth[t]);
    }
    out[t] = pearson(pred, truth);
  }
  return out;
}

}  // namespace traitlab::stats
