#include <gtest/gtest.h>

#include <algorithm>

#include "factorlab/corpus.hpp"
#include "factorlab/games.hpp"
#include "factorlab/mrvf.hpp"

using namespace factorlab;

TEST(ClippedTarget, IsNonnegativeAndZeroAtReference) {
  const auto& q = corpus_entry("table6_qjt");
  const auto t = clipped_target(q, {2, 2});
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_EQ(t[i], std::max(q[i] - 5.0, 0.0));
  EXPECT_EQ(t[q.joint_index({2, 2})], 0.0);
}

TEST(MrvfPlan, ReachesOptimumAndStopsEarly) {
  const auto& q = corpus_entry("table6_qjt");
  const auto r = mrvf_plan(q);
  EXPECT_EQ(r.output, (JointAction{0, 0}));
  EXPECT_EQ(r.termination_round, 3);
  EXPECT_TRUE(r.early_terminated);
  EXPECT_EQ(r.improvement_flags, (std::vector<bool>{true, true, false}));
  EXPECT_TRUE(strict_improvement_check(r, q).ok);
  EXPECT_TRUE(theorem_5_1_bound_check(r, q));
  EXPECT_EQ(first_optimal_round(r, q), 2);
}

TEST(MrvfPlan, SingleRoundEqualsAblation) {
  const auto& q = corpus_entry("table6_qjt");
  MrvfPlanConfig cfg;
  cfg.rounds = 1;
  EXPECT_EQ(mrvf_plan(q, cfg).output, mrvf_single_round_ablation(q));
  EXPECT_THROW(mrvf_plan(q, {.rounds = 0}), InvalidInput);
}

class PlanProperties : public ::testing::TestWithParam<int> {};

TEST_P(PlanProperties, OutputIsRunningMaxAndAffineInvariant) {
  const auto q = gen_uniform_payoff({3, 3}, 500 + GetParam());
  MrvfPlanConfig cfg;
  cfg.rounds = 4;
  const auto r = mrvf_plan(q, cfg);
  double best = -1e300;
  for (std::size_t k = 0; k < r.rounds.size(); ++k)
    if (r.improvement_flags[k]) best = std::max(best, q.at(r.rounds[k].greedy));
  EXPECT_EQ(q.at(r.output), best);
  EXPECT_TRUE(strict_improvement_check(r, q).ok);
  const auto shifted = mrvf_plan(q.scaled(2.5, 13.0), cfg);
  EXPECT_EQ(shifted.output, r.output);
  EXPECT_EQ(shifted.termination_round, r.termination_round);
}

INSTANTIATE_TEST_SUITE_P(Mrvf, PlanProperties, ::testing::Range(0, 8));

TEST(MrvfPlan, EnoughRoundsFindTheOptimum) {
  for (int seed = 0; seed < 10; ++seed) {
    const auto q = gen_uniform_payoff({2, 3}, 900 + seed);
    MrvfPlanConfig cfg;
    cfg.rounds = static_cast<int>(q.size()) + 1;
    EXPECT_EQ(q.at(mrvf_plan(q, cfg).output), q.max_value()) << seed;
  }
}

TEST(TdUpdate, TerminalAndBootstrappedTargets) {
  QhatTable t(2, 4);
  td_update_qjt(t, {0, 1, 10.0, true, 0, 0}, 0.99, 0.1);
  EXPECT_DOUBLE_EQ(t.at(0, 1), 1.0);
  td_update_qjt(t, {0, 1, 10.0, true, 0, 0}, 0.99, 0.1);
  EXPECT_DOUBLE_EQ(t.at(0, 1), 1.9);
  EXPECT_EQ(t.visit_counts[1], 2);

  // Two-step chain: s1 terminal pays 4, s0 pays 1 then moves to s1.
  QhatTable c(2, 1);
  for (int k = 0; k < 2000; ++k) {
    td_update_qjt(c, {1, 0, 4.0, true, 0, 0}, 0.9, 0.1);
    td_update_qjt(c, {0, 0, 1.0, false, 1, 0}, 0.9, 0.1);
  }
  EXPECT_NEAR(c.at(1, 0), 4.0, 1e-9);
  EXPECT_NEAR(c.at(0, 0), 1.0 + 0.9 * 4.0, 1e-9);
  EXPECT_THROW(td_update_qjt(c, {5, 0, 0, true, 0, 0}, 0.9, 0.1), InvalidAction);
}

TEST(TrainConfig, EpsilonScheduleAndValidation) {
  TrainConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.epsilon_at(0), 1.0);
  EXPECT_NEAR(cfg.epsilon_at(12'500), 0.525, 1e-12);
  EXPECT_DOUBLE_EQ(cfg.epsilon_at(40'000), 0.05);
  cfg.p = 1.5;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(MrvfTrain, DeterministicForFixedSeedAndLearnsPayoff) {
  const auto game = gen_risk_reward(2, 3, 4).payoff;
  TrainConfig cfg;
  cfg.total_steps = 6000;
  cfg.eps_anneal_steps = 3000;
  cfg.eval_interval = 2000;
  cfg.seed = 17;
  const auto a = mrvf_train_one_step(game, cfg);
  const auto b = mrvf_train_one_step(game, cfg);
  EXPECT_EQ(a.q_hat.values, b.q_hat.values);
  EXPECT_EQ(a.evaluation.output, b.evaluation.output);
  ASSERT_EQ(a.log.size(), 3u);
  long long executed = a.executed_output + a.executed_random;
  for (long long n : a.executed_from_round) executed += n;
  EXPECT_EQ(executed, cfg.total_steps);
  for (std::size_t i = 0; i < game.size(); ++i)
    if (a.q_hat.visit_counts[i] > 200) EXPECT_NEAR(a.q_hat.values[i], game[i], 1e-3 + 1e-6 * game[i] * game[i]);
}
