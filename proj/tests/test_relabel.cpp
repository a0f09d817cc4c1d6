#include <gtest/gtest.h>

#include <random>

#include "criteria.hpp"

using namespace lcjm;

namespace {

ParameterState state_with_intercepts(const std::vector<double>& b0) {
  std::mt19937_64 rng(1);
  const Dataset data = test::random_dataset(rng, 6);
  const ModelSpec spec = test::test_spec(data, static_cast<int>(b0.size()));
  ParameterState s = test::random_state(spec, data.n(), rng);
  for (std::size_t g = 0; g < b0.size(); ++g) s.beta[g](0) = b0[g];
  return s;
}

TEST(Relabel, OrdersByAscendingIntercept) {
  const auto s = state_with_intercepts({2.0, -1.0, 0.5});
  bool tied = true;
  EXPECT_EQ(relabel_permutation(s, RelabelStatistic::intercept, &tied), (std::vector<int>{1, 2, 0}));
  EXPECT_FALSE(tied);
  const auto p = permute_classes(s, {1, 2, 0});
  EXPECT_EQ(p.beta[0](0), -1.0);
  EXPECT_EQ(p.alpha[2], s.alpha[0]);
  EXPECT_EQ(p.pi(1), s.pi(2));
  for (std::size_t i = 0; i < s.v.size(); ++i) {
    EXPECT_EQ(p.beta[static_cast<std::size_t>(p.v[i])], s.beta[static_cast<std::size_t>(s.v[i])]);
    EXPECT_EQ(p.b[i][static_cast<std::size_t>(p.v[i])], s.b[i][static_cast<std::size_t>(s.v[i])]);
  }
}

TEST(Relabel, TiesKeepOriginalOrderAndAreReported) {
  const auto s = state_with_intercepts({1.0, 1.0, 0.0});
  bool tied = false;
  EXPECT_EQ(relabel_permutation(s, RelabelStatistic::intercept, &tied), (std::vector<int>{2, 0, 1}));
  EXPECT_TRUE(tied);
}

TEST(Relabel, AlphaStatistic) {
  auto s = state_with_intercepts({0.0, 1.0});
  s.alpha = {0.4, -0.2};
  EXPECT_EQ(relabel_permutation(s, RelabelStatistic::alpha), (std::vector<int>{1, 0}));
  EXPECT_EQ(parse_relabel_statistic("alpha"), RelabelStatistic::alpha);
  EXPECT_EQ(parse_relabel_statistic("intercept"), RelabelStatistic::intercept);
  EXPECT_THROW(parse_relabel_statistic("sigma"), DataError);
  EXPECT_THROW(permute_classes(s, {0, 1, 2}), DataError);
}

TEST(Relabel, PosteriorInvariantAndIdempotent) {
  const auto r = test::label_symmetry();
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Relabel, TableRelabelingMatchesInMemory) {
  std::mt19937_64 rng(12);
  const Dataset data = test::random_dataset(rng, 30);
  const ModelSpec spec = test::test_spec(data, 3);
  const JointModel model(spec, data);
  ChainConfig cfg;
  cfg.iterations = 300;
  cfg.burn_in = 100;
  cfg.store_random_effects = false;
  const ChainOutput out = run_chain(model, cfg);
  const auto mem = relabel_draws(out);
  const auto [table, rel] = relabel_table(draw_table(spec, out), RelabelStatistic::intercept);
  EXPECT_EQ(rel.permutations, mem.permutations);
  EXPECT_EQ(draws_csv(table), draws_csv(spec, mem.output));
}

}  // namespace
