#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "traitlab/conditions.hpp"
#include "traitlab/stats.hpp"

namespace traitlab::report {

struct ConditionResult {
  Condition condition = Condition::face;
  std::array<stats::CorrelationResult, stats::kTraitCount> per_trait{};
  stats::CorrelationResult mean_trait;
};

// One row of the significance table.
struct ComparisonRow {
  std::string label;  // e.g. "face vs. face+bg"
  double rho_1 = 0;
  double rho_2 = 0;
  stats::ComparisonResult comparison;
};

struct SigmaEntry {
  std::string name;
  double sigma = 0;
};

struct SplitVerdict {
  bool checked = false;
  bool pass = false;
  std::vector<std::string> shared_uids;
};

struct Report {
  std::vector<ConditionResult> conditions;  // kConditions order
  std::vector<ComparisonRow> comparisons;   // fixed six-row order
  std::vector<SigmaEntry> sigmas;           // optional, may be empty
  SplitVerdict split_verdict;
  bool confounded = false;  // set when evaluating leaky splits anyway
  double alpha = 0.05;
  int num_models = 3;
};

// Fixed comparison-table row order. Each pair indexes kConditions.
inline constexpr std::array<std::pair<Condition, Condition>, 6>
    kComparisonPairs = {{{Condition::face, Condition::face_bg},
                         {Condition::face, Condition::entire_frame},
                         {Condition::face, Condition::background},
                         {Condition::background, Condition::face_bg},
                         {Condition::background, Condition::entire_frame},
                         {Condition::face_bg, Condition::entire_frame}}};

std::string comparison_label(Condition a, Condition b);

// Correlations, the six pairwise comparisons, and Bonferroni verdicts for
// one prediction table per condition (kConditions order).
Report build_report(const std::array<stats::PredictionTable, 4>& tables,
                    double alpha, int num_models);

// Plain-text rendering: per-condition correlations, then the significance
// table in fixed row order. Byte-deterministic for equal inputs.
std::string render_text(const Report& report);

// JSON rendering with stable key order; also byte-deterministic.
std::string render_json(const Report& report);

}  // namespace traitlab::report
