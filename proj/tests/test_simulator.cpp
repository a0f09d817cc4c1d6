#include <gtest/gtest.h>

#include <cmath>

#include "criteria.hpp"

using namespace lcjm;

namespace {

TEST(Simulator, EventTimesAndCensoringBand) {
  const auto r = test::simulator_check();
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Simulator, InverseTransformSolvesCumulativeHazard) {
  const QuadratureRule rule = gauss_legendre(32);
  const ComponentParams c = design_component(1);
  SubjectCovariates s;
  s.age = 50.0;
  s.male = 0.0;
  s.b = {0.3, -0.05};
  for (double U : {0.9, 0.5, 0.1}) {
    const double T = event_time_from_uniform(U, c, s, 19.5, rule);
    ASSERT_TRUE(std::isfinite(T));
    EXPECT_NEAR(generating_cumulative_hazard(T, c, s, rule), -std::log(U), 1e-10);
  }
  // beyond the horizon
  ComponentParams weak = c;
  weak.gamma_intercept = -30.0;
  EXPECT_TRUE(std::isinf(event_time_from_uniform(0.5, weak, s, 19.5, rule)));
}

TEST(Simulator, DesignSizesAndFollowUp) {
  const auto sim = simulate_scenario(Scenario::I, 5, 40);
  ASSERT_EQ(sim.data.n(), 120u);
  EXPECT_EQ(sim.config.true_classes(), 3);
  std::vector<int> sizes(3, 0);
  for (int c : sim.true_class) ++sizes[static_cast<std::size_t>(c)];
  EXPECT_EQ(sizes, (std::vector<int>{40, 40, 40}));
  for (const auto& s : sim.data.subjects) {
    EXPECT_EQ(s.times.front(), 0.0);
    EXPECT_LE(s.n_obs(), 11u);
    EXPECT_LE(s.times.back(), s.event_time);
    EXPECT_LE(s.event_time, 19.5);
    EXPECT_GT(s.event_time, 0.0);
    for (const auto& x : s.x) EXPECT_EQ(x[0], s.x[0][0]);  // sex is time-constant
  }
  EXPECT_EQ(scenario_config(Scenario::I).n(), 1050);
  EXPECT_EQ(scenario_config(Scenario::II).n(), 1050);
  EXPECT_EQ(scenario_config(Scenario::III).n(), 1050);
}

TEST(Simulator, SameSeedSameData) {
  const auto a = simulate_scenario(Scenario::II, 42, 30);
  const auto b = simulate_scenario(Scenario::II, 42, 30);
  const auto c = simulate_scenario(Scenario::II, 43, 30);
  EXPECT_EQ(a.data, b.data);
  EXPECT_EQ(a.censoring_scale, b.censoring_scale);
  EXPECT_NE(a.data, c.data);
}

// Baseline measurements of women: beta0 + b0 + eps.
TEST(Simulator, BaselineMeanMatchesGeneratingIntercept) {
  const auto sim = simulate_scenario(Scenario::III, 9, 2000);
  const ComponentParams c = design_component(1);
  double sum = 0.0, count = 0.0;
  for (const auto& s : sim.data.subjects) {
    if (s.x[0][0] != 0.0) continue;
    sum += s.y[0];
    count += 1.0;
  }
  const double se = std::sqrt((c.Sigma_b_diag[0] + c.sigma_y * c.sigma_y) / count);
  EXPECT_NEAR(sum / count, c.beta_intercept, 4.0 * se);
}

TEST(Simulator, ScenarioParsing) {
  EXPECT_EQ(parse_scenario("II"), Scenario::II);
  EXPECT_EQ(parse_scenario("3"), Scenario::III);
  EXPECT_THROW(parse_scenario("IV"), DataError);
  EXPECT_THROW(design_component(4), DataError);
}

}  // namespace
