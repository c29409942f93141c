#include <gtest/gtest.h>

#include <algorithm>

#include "factorlab/games.hpp"

using namespace factorlab;

TEST(RiskReward, DeterministicPerSeed) {
  const auto a = gen_risk_reward(3, 4, 12), b = gen_risk_reward(3, 4, 12), c = gen_risk_reward(3, 4, 13);
  EXPECT_EQ(a.payoff.values(), b.payoff.values());
  EXPECT_NE(a.payoff.values(), c.payoff.values());
  for (const auto& r : a.reward_vectors)
    for (double x : r) {
      EXPECT_GE(x, 0);
      EXPECT_LE(x, 10.0 / 3);
    }
}

TEST(RiskReward, RelabelingOnlyPermutesPayoffs) {
  const auto g = gen_risk_reward(2, 4, 3);
  std::vector<std::vector<int>> identity(2, {0, 1, 2, 3});
  auto base = risk_reward_payoff(g.reward_vectors, identity).values();
  auto mapped = g.payoff.values();
  std::sort(base.begin(), base.end());
  std::sort(mapped.begin(), mapped.end());
  EXPECT_EQ(base, mapped);
}

TEST(RiskReward, OptimumIsBestConsensus) {
  const auto g = gen_risk_reward(3, 3, 8);
  double best = -1;
  for (int v = 0; v < 3; ++v) {
    double s = 0;
    for (const auto& r : g.reward_vectors) s += r[v];
    best = std::max(best, s);
  }
  EXPECT_NEAR(g.payoff.max_value(), best, 1e-12);
  for (const auto& u : argmax_set(g.payoff))
    for (int i = 1; i < 3; ++i) EXPECT_EQ(g.bijections[i][u[i]], g.bijections[0][u[0]]);
}

TEST(NormalizedReturn, BoundedAndScaleInvariant) {
  const auto q = gen_uniform_payoff({3, 4}, 2);
  for (const auto& u : q.shape().all_actions()) {
    const double r = normalized_return(q, u);
    EXPECT_GE(r, -1.0 - 1e-12);
    EXPECT_LE(r, 1.0 + 1e-12);
    EXPECT_NEAR(normalized_return(q.scaled(4.0), u), r, 1e-12);
  }
  EXPECT_NEAR(normalized_return(q, argmax_set(q).front()), 1.0, 1e-12);
  EXPECT_NEAR(normalized_return(q, argmin_set(q).front()), -1.0, 1e-12);
}

TEST(NormalizedReturn, Degenerate) {
  EXPECT_THROW(normalized_return(JointPayoff::matrix({{1, 2}}), {0, 0}), DegenerateNormalization);
  EXPECT_THROW(normalized_return(JointPayoff::matrix({{-1, -2}}), {0, 0}), DegenerateNormalization);
  EXPECT_DOUBLE_EQ(normalized_return(JointPayoff::matrix({{3, -2}}), {0, 0}), 1.0);
}

TEST(PredatorPreyLimit, RimMatrixAndShrinkingGaps) {
  const auto m = pp_limit_matrix(-2.0);
  EXPECT_EQ(m.at({0, 0}), -2.0);
  EXPECT_EQ(m.at({0, 5}), -2.0);
  EXPECT_EQ(m.at({3, 0}), -2.0);
  EXPECT_EQ(m.at({1, 1}), 0.0);
  const auto rep = pp_limit_fit_check(-2.0, {3, 3}, {0.1, 0.01, 0.001});
  ASSERT_EQ(rep.gaps.size(), 3u);
  EXPECT_GT(rep.gaps[0], rep.gaps[1]);
  EXPECT_GT(rep.gaps[1], rep.gaps[2]);
  EXPECT_THROW(pp_limit_fit_check(-2.0, {3, 3}, {0.1}, PolicyKind::Uniform), InvalidInput);
}
