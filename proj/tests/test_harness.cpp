#include <gtest/gtest.h>

#include <filesystem>

#include "criteria.hpp"

using namespace lcjm;

namespace {

TEST(Truth, ClassesOrderedByIntercept) {
  const auto sim = simulate_scenario(Scenario::I, 2, 20);
  const json t = truth_json(sim);
  EXPECT_EQ(t.at("true_classes"), 3);
  const json& p = t.at("parameters");
  EXPECT_EQ(p.at("beta[1][1]"), -8.03);
  EXPECT_EQ(p.at("beta[2][1]"), 0.03);
  EXPECT_EQ(p.at("beta[3][1]"), 8.03);
  EXPECT_EQ(p.at("alpha[3]"), 0.38);
  EXPECT_EQ(p.at("beta[1][3]"), 12.20);
  EXPECT_NEAR(p.at("sigma_y2").get<double>(), 0.69 * 0.69, 1e-15);
  EXPECT_FALSE(p.contains("gamma_h0[1][1]"));
  // membership uses the ordered labels
  for (std::size_t i = 0; i < sim.data.n(); ++i) {
    const int label = t.at("class").at(sim.data.subjects[i].id);
    EXPECT_EQ(p.at("beta[" + std::to_string(label) + "][1]").get<double>(),
              sim.config.components[static_cast<std::size_t>(sim.true_class[i])].beta_intercept);
  }
}

TEST(Recovery, ScoresKnownDraws) {
  DrawTable d;
  d.names = {"beta[1][1]", "sigma_y2", "pi[1]"};
  for (int k = 0; k <= 40; ++k) {
    d.iterations.push_back(k + 1);
    d.rows.push_back({static_cast<double>(k), 1.0, 1.0});
  }
  const json truth = {{"true_classes", 1}, {"parameters", {{"beta[1][1]", 39.5}, {"pi[1]", 1.0}}}};
  const auto rows = score_fit(d, truth);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].name, "beta[1][1]");
  EXPECT_DOUBLE_EQ(rows[0].mean, 20.0);
  EXPECT_DOUBLE_EQ(rows[0].bias, -19.5);
  EXPECT_NEAR(rows[0].sd, std::sqrt(143.5), 1e-12);
  EXPECT_DOUBLE_EQ(rows[0].lower, 1.0);
  EXPECT_DOUBLE_EQ(rows[0].upper, 39.0);
  EXPECT_EQ(rows[0].covered, 0);
  EXPECT_EQ(rows[1].covered, 1);

  json wrong = truth;
  wrong["true_classes"] = 2;
  EXPECT_THROW(score_fit(d, wrong), DataError);
  EXPECT_THROW(score_fit(d, json{{"parameters", {{"alpha[1]", 0.1}}}}), DataError);
  EXPECT_THROW(score_fit(DrawTable{d.names, {}, {}}, truth), DataError);
}

TEST(Recovery, SingleClassFitCoversTruth) {
  const auto sim = simulate_scenario(Scenario::III, 21, 150);
  RunConfig cfg = RunConfig::simulation_defaults();
  cfg.chain.iterations = 3000;
  cfg.chain.burn_in = 1500;
  cfg.chain.seed = 4;
  const FitResult r = fit(sim.data, cfg);
  const auto rows = score_fit(r.prepared.spec, r.relabeled.output, truth_json(sim));
  int covered = 0;
  for (const auto& row : rows) {
    covered += row.covered;
    if (row.name == "beta[1][1]") {
      EXPECT_LT(std::abs(row.bias), 0.3);
    }
  }
  EXPECT_GE(covered, static_cast<int>(rows.size()) - 2) << recovery_csv(rows);
}

TEST(Replication, SeedsAreDistinctAndReproducible) {
  EXPECT_EQ(replication_seed(7, 0, 0), replication_seed(7, 0, 0));
  EXPECT_NE(replication_seed(7, 0, 0), replication_seed(7, 0, 1));
  EXPECT_NE(replication_seed(7, 0, 0), replication_seed(7, 1, 0));
  EXPECT_NE(replication_seed(7, 0, 0), replication_seed(8, 0, 0));
}

TEST(Replication, ReportIndependentOfThreadCount) {
  RunConfig cfg = RunConfig::simulation_defaults();
  cfg.chain.iterations = 300;
  cfg.chain.burn_in = 150;
  cfg.selection.G_max = 3;
  const auto scenario = scenario_config(Scenario::II, 25);
  const auto dir = std::filesystem::temp_directory_path() / "lcjm_replication_test";
  std::filesystem::remove_all(dir);
  const auto one = run_replications(scenario, 3, cfg, 5, dir, {1, false});
  const auto two = run_replications(scenario, 3, cfg, 5, {}, {2, false});
  EXPECT_EQ(dump(report_json(one)), dump(report_json(two)));
  EXPECT_EQ(one.failed + one.not_converged + one.included, 3);
  EXPECT_TRUE(std::filesystem::exists(dir / "rep_002" / "selection.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "rep_003" / "truth.json"));
  for (const auto& row : one.table) {
    int total = 0, correct = 0;
    for (const auto& [g, c] : row.selections) {
      total += c;
      if (g == 2) correct += c;
    }
    EXPECT_EQ(total, one.included);
    if (one.included > 0) {
      EXPECT_DOUBLE_EQ(row.percent_correct, 100.0 * correct / one.included);
    }
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(run_replications(scenario, 0, cfg, 5), DataError);
}

}  // namespace
