#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "traitlab/report.hpp"

using namespace traitlab;
using namespace traitlab::report;

namespace {

std::mt19937_64 g_rng(771251);

// A table whose mean-trait scalar sequence is handed in directly: every
// trait of a row carries the same value, so the per-video trait mean is
// exactly that value.
stats::PredictionTable scalar_table(const std::vector<double>& predicted,
                                    const std::vector<double>& truth) {
  stats::PredictionTable table;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double p = predicted[i];
    const double t = truth[i];
    table.rows.push_back({"vid" + std::to_string(i),
                          {p, p, p, p, p},
                          {t, t, t, t, t}});
  }
  return table;
}

stats::PredictionTable random_table(int rows) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  stats::PredictionTable table;
  for (int i = 0; i < rows; ++i) {
    stats::TraitVector pred{d(g_rng), d(g_rng), d(g_rng), d(g_rng), d(g_rng)};
    stats::TraitVector truth{d(g_rng), d(g_rng), d(g_rng), d(g_rng), d(g_rng)};
    table.rows.push_back({"vid" + std::to_string(i), pred, truth});
  }
  return table;
}

std::array<stats::PredictionTable, 4> random_tables(int rows) {
  return {random_table(rows), random_table(rows), random_table(rows),
          random_table(rows)};
}

// Scalar sequences tracking truth closely (high rho) or not at all.
std::vector<double> ramp(int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = 0.1 + 0.8 * i / (n - 1);
  return v;
}

std::vector<double> jittered(const std::vector<double>& base, double amp) {
  std::uniform_real_distribution<double> d(-amp, amp);
  std::vector<double> v = base;
  for (double& x : v) x = std::clamp(x + d(g_rng), 0.0, 1.0);
  return v;
}

std::vector<double> shuffled(std::vector<double> v) {
  std::shuffle(v.begin(), v.end(), g_rng);
  return v;
}

}  // namespace

TEST_CASE("condition tokens and labels round-trip") {
  for (Condition c : kConditions)
    CHECK(condition_from_token(condition_token(c)) == c);
  CHECK(std::string(condition_label(Condition::background)) == "bg");
  CHECK(std::string(condition_label(Condition::face_bg)) == "face+bg");
  CHECK(std::string(condition_label(Condition::entire_frame)) ==
        "entire frame");
  CHECK_THROWS_AS(condition_from_token("torso"), Error);
  CHECK_THROWS_AS(condition_from_token("face bg"), Error);
}

TEST_CASE("report rows follow the fixed comparison order") {
  const Report report = build_report(random_tables(24), 0.05, 3);

  REQUIRE(report.conditions.size() == 4);
  CHECK(report.conditions[0].condition == Condition::face);
  CHECK(report.conditions[1].condition == Condition::background);
  CHECK(report.conditions[2].condition == Condition::face_bg);
  CHECK(report.conditions[3].condition == Condition::entire_frame);

  REQUIRE(report.comparisons.size() == 6);
  CHECK(report.comparisons[0].label == "face vs. face+bg");
  CHECK(report.comparisons[1].label == "face vs. entire frame");
  CHECK(report.comparisons[2].label == "face vs. bg");
  CHECK(report.comparisons[3].label == "bg vs. face+bg");
  CHECK(report.comparisons[4].label == "bg vs. entire frame");
  CHECK(report.comparisons[5].label == "face+bg vs. entire frame");
}

TEST_CASE("report numbers equal directly composed statistics") {
  const auto tables = random_tables(30);
  const Report report = build_report(tables, 0.05, 3);

  std::array<stats::CorrelationResult, 4> means;
  for (int i = 0; i < 4; ++i)
    means[i] = stats::mean_trait_correlation(tables[i]);

  const std::array<std::pair<int, int>, 6> pairs = {
      {{0, 2}, {0, 3}, {0, 1}, {1, 2}, {1, 3}, {2, 3}}};
  for (int row = 0; row < 6; ++row) {
    const auto [a, b] = pairs[row];
    const stats::ComparisonResult expect =
        stats::compare_correlations(means[a], means[b]);
    const ComparisonRow& got = report.comparisons[row];
    CHECK(got.rho_1 == means[a].rho);
    CHECK(got.rho_2 == means[b].rho);
    CHECK(got.comparison.z_obs == expect.z_obs);
    CHECK(got.comparison.p == expect.p);
    const auto decision = stats::significance(expect.p, 0.05, 3);
    CHECK(got.comparison.alpha_corrected == decision.alpha_corrected);
    CHECK(got.comparison.significant == decision.significant);
  }

  const auto traits = stats::per_trait_correlations(tables[1]);
  for (int t = 0; t < stats::kTraitCount; ++t)
    CHECK(report.conditions[1].per_trait[t].rho == traits[t].rho);
  CHECK(report.conditions[3].mean_trait.rho == means[3].rho);
}

TEST_CASE("stars land only on significant rows") {
  const int n = 80;
  const auto truth = ramp(n);
  std::array<stats::PredictionTable, 4> tables = {
      scalar_table(jittered(truth, 0.02), truth),   // face: tracks truth
      scalar_table(jittered(truth, 0.02), truth),   // bg: also tracks
      scalar_table(shuffled(truth), truth),         // face+bg: unrelated
      scalar_table(shuffled(truth), truth),         // entire frame: unrelated
  };
  const Report report = build_report(tables, 0.05, 3);

  // face vs. face+bg compares tracking against unrelated: significant.
  CHECK(report.comparisons[0].comparison.significant);
  // face vs. bg compares two tracking conditions: nowhere near significant.
  CHECK_FALSE(report.comparisons[2].comparison.significant);

  const std::string text = render_text(report);
  std::istringstream lines(text);
  std::string line;
  int starred = 0, dashed = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("face vs. face+bg", 0) == 0) {
      CHECK(line.back() == '*');
      ++starred;
    }
    if (line.rfind("face vs. bg", 0) == 0) {
      CHECK(line.back() == '-');
      ++dashed;
    }
  }
  CHECK(starred == 1);
  CHECK(dashed == 1);
}

TEST_CASE("text rendering is byte-stable and watermarks confounded runs") {
  Report report = build_report(random_tables(20), 0.05, 3);
  report.split_verdict.checked = true;
  report.split_verdict.pass = true;

  const std::string a = render_text(report);
  const std::string b = render_text(report);
  CHECK(a == b);
  CHECK(a.find("CONFOUNDED") == std::string::npos);
  CHECK(a.find("splits: leak-free") != std::string::npos);

  report.confounded = true;
  report.split_verdict.pass = false;
  report.split_verdict.shared_uids = {"u1", "u2"};
  const std::string c = render_text(report);
  CHECK(c.find("CONFOUNDED") != std::string::npos);
  CHECK(c.find("splits: LEAKY (2 shared uids)") != std::string::npos);

  report.split_verdict.checked = false;
  CHECK(render_text(report).find("splits: not checked") != std::string::npos);
}

TEST_CASE("json rendering carries the full table and parses back") {
  Report report = build_report(random_tables(20), 0.05, 3);
  report.split_verdict.checked = true;
  report.split_verdict.pass = true;
  report.sigmas = {{"face", 54.1}, {"bg", 71.6}};

  const std::string text = render_json(report);
  CHECK(text == render_json(report));

  const auto doc = nlohmann::json::parse(text);
  CHECK_FALSE(doc.contains("watermark"));
  CHECK(doc["alpha"].get<double>() == 0.05);
  CHECK(doc["num_models"].get<int>() == 3);
  CHECK(doc["split_verdict"]["pass"].get<bool>());
  REQUIRE(doc["conditions"].size() == 4);
  CHECK(doc["conditions"][0]["condition"] == "face");
  CHECK(doc["conditions"][0]["per_trait_rho"].contains("N_bar"));
  CHECK(doc["conditions"][0]["mean_trait_rho"].get<double>() ==
        report.conditions[0].mean_trait.rho);
  REQUIRE(doc["comparisons"].size() == 6);
  CHECK(doc["comparisons"][2]["label"] == "face vs. bg");
  CHECK(doc["comparisons"][2]["z_obs"].get<double>() ==
        report.comparisons[2].comparison.z_obs);
  REQUIRE(doc["sigma"].size() == 2);
  CHECK(doc["sigma"][1]["name"] == "bg");
  CHECK(doc["sigma"][1]["sigma"].get<double>() == 71.6);

  report.confounded = true;
  const auto marked = nlohmann::json::parse(render_json(report));
  CHECK(marked["watermark"] == "CONFOUNDED");
}

TEST_CASE("sigma entries appear in the text rendering") {
  Report report = build_report(random_tables(16), 0.05, 3);
  report.sigmas = {{"face", 54.1}, {"bg", 71.6}};
  const std::string text = render_text(report);
  CHECK(text.find("face: 54.1") != std::string::npos);
  CHECK(text.find("bg: 71.6") != std::string::npos);
}

TEST_CASE("build_report validates alpha through the decision rule") {
  CHECK_THROWS_AS(build_report(random_tables(12), 0.0, 3), Error);
  CHECK_THROWS_AS(build_report(random_tables(12), 1.5, 3), Error);
  CHECK_THROWS_AS(build_report(random_tables(12), 0.05, 0), Error);
}
