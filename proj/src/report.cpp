#include "traitlab/report.hpp"

#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

namespace traitlab {

const char* condition_token(Condition c) noexcept {
  switch (c) {
    case Condition::face: return "face";
    case Condition::background: return "background";
    case Condition::face_bg: return "face_bg";
    case Condition::entire_frame: return "entire_frame";
  }
  return "?";
}

const char* condition_label(Condition c) noexcept {
  switch (c) {
    case Condition::face: return "face";
    case Condition::background: return "bg";
    case Condition::face_bg: return "face+bg";
    case Condition::entire_frame: return "entire frame";
  }
  return "?";
}

Condition condition_from_token(const std::string& token) {
  for (Condition c : kConditions)
    if (token == condition_token(c)) return c;
  throw Error(errc::parse_failure,
              "unknown condition '" + token +
                  "' (expected face, background, face_bg or entire_frame)");
}

}  // namespace traitlab

namespace traitlab::report {
namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

}  // namespace

std::string comparison_label(Condition a, Condition b) {
  return std::string(condition_label(a)) + " vs. " + condition_label(b);
}

Report build_report(const std::array<stats::PredictionTable, 4>& tables,
                    double alpha, int num_models) {
  Report report;
  report.alpha = alpha;
  report.num_models = num_models;

  for (Condition c : kConditions) {
    const stats::PredictionTable& table = tables[static_cast<int>(c)];
    ConditionResult result;
    result.condition = c;
    result.per_trait = stats::per_trait_correlations(table);
    result.mean_trait = stats::mean_trait_correlation(table);
    report.conditions.push_back(result);
  }

  for (const auto& [a, b] : kComparisonPairs) {
    const stats::CorrelationResult& r1 =
        report.conditions[static_cast<int>(a)].mean_trait;
    const stats::CorrelationResult& r2 =
        report.conditions[static_cast<int>(b)].mean_trait;
    ComparisonRow row;
    row.label = comparison_label(a, b);
    row.rho_1 = r1.rho;
    row.rho_2 = r2.rho;
    row.comparison = stats::compare_correlations(r1, r2);
    const stats::SignificanceDecision decision =
        stats::significance(row.comparison.p, alpha, num_models);
    row.comparison.alpha_corrected = decision.alpha_corrected;
    row.comparison.significant = decision.significant;
    report.comparisons.push_back(std::move(row));
  }
  return report;
}

std::string render_text(const Report& report) {
  std::ostringstream out;
  out << "traitlab evaluation report\n";
  out << "==========================\n";
  if (report.confounded)
    out << "CONFOUNDED: splits share source videos; every correlation below "
           "is inflated by identity leakage.\n";
  if (!report.split_verdict.checked) {
    out << "splits: not checked\n";
  } else if (report.split_verdict.pass) {
    out << "splits: leak-free\n";
  } else {
    out << "splits: LEAKY (" << report.split_verdict.shared_uids.size()
        << " shared uids)\n";
  }
  out << "alpha: " << fmt("%g", report.alpha)
      << "  models: " << report.num_models << "  corrected alpha: "
      << fmt("%.6g", report.alpha / report.num_models) << "\n\n";

  out << std::left << std::setw(14) << "condition";
  for (const char* trait : stats::kTraitNames)
    out << std::right << std::setw(9) << trait;
  out << std::right << std::setw(11) << "mean rho" << std::setw(7) << "n"
      << '\n';
  for (const ConditionResult& c : report.conditions) {
    out << std::left << std::setw(14) << condition_label(c.condition);
    for (const auto& r : c.per_trait)
      out << std::right << std::setw(9) << fmt("%.4f", r.rho);
    out << std::right << std::setw(11) << fmt("%.4f", c.mean_trait.rho)
        << std::setw(7) << c.mean_trait.n << '\n';
  }
  out << '\n';

  out << std::left << std::setw(28) << "comparison" << std::right
      << std::setw(9) << "rho_1" << std::setw(9) << "rho_2" << std::setw(9)
      << "z_obs" << std::setw(12) << "p" << std::setw(6) << "sig" << '\n';
  for (const ComparisonRow& row : report.comparisons) {
    out << std::left << std::setw(28) << row.label << std::right
        << std::setw(9) << fmt("%.4f", row.rho_1) << std::setw(9)
        << fmt("%.4f", row.rho_2) << std::setw(9)
        << fmt("%.2f", row.comparison.z_obs) << std::setw(12)
        << fmt("%.3g", row.comparison.p) << std::setw(6)
        << (row.comparison.significant ? "*" : "-") << '\n';
  }

  if (!report.sigmas.empty()) {
    out << "\nsigma\n";
    for (const SigmaEntry& s : report.sigmas)
      out << "  " << s.name << ": " << fmt("%.6g", s.sigma) << '\n';
  }
  return out.str();
}

std::string render_json(const Report& report) {
  nlohmann::ordered_json doc;
  if (report.confounded) doc["watermark"] = "CONFOUNDED";
  doc["alpha"] = report.alpha;
  doc["num_models"] = report.num_models;
  doc["alpha_corrected"] = report.alpha / report.num_models;

  nlohmann::ordered_json verdict;
  verdict["checked"] = report.split_verdict.checked;
  verdict["pass"] = report.split_verdict.pass;
  verdict["shared_uids"] = report.split_verdict.shared_uids;
  doc["split_verdict"] = verdict;

  doc["conditions"] = nlohmann::ordered_json::array();
  for (const ConditionResult& c : report.conditions) {
    nlohmann::ordered_json entry;
    entry["condition"] = condition_label(c.condition);
    entry["n"] = c.mean_trait.n;
    nlohmann::ordered_json per_trait;
    for (int t = 0; t < stats::kTraitCount; ++t)
      per_trait[stats::kTraitNames[t]] = c.per_trait[t].rho;
    entry["per_trait_rho"] = per_trait;
    entry["mean_trait_rho"] = c.mean_trait.rho;
    doc["conditions"].push_back(entry);
  }

  doc["comparisons"] = nlohmann::ordered_json::array();
  for (const ComparisonRow& row : report.comparisons) {
    nlohmann::ordered_json entry;
    entry["label"] = row.label;
    entry["rho_1"] = row.rho_1;
    entry["rho_2"] = row.rho_2;
    entry["z_obs"] = row.comparison.z_obs;
    entry["p"] = row.comparison.p;
    entry["alpha_corrected"] = row.comparison.alpha_corrected;
    entry["significant"] = row.comparison.significant;
    doc["comparisons"].push_back(entry);
  }

  doc["sigma"] = nlohmann::ordered_json::array();
  for (const SigmaEntry& s : report.sigmas) {
    nlohmann::ordered_json entry;
    entry["name"] = s.name;
    entry["sigma"] = s.sigma;
    doc["sigma"].push_back(entry);
  }
  return doc.dump(2) + "\n";
}

}  // namespace traitlab::report
