#include <gtest/gtest.h>

#include "factorlab/corpus.hpp"
#include "factorlab/games.hpp"
#include "factorlab/stability.hpp"

using namespace factorlab;

TEST(Stability, ConstantPayoffIsStrongEverywhere) {
  const JointPayoff q({3, 3}, Tensor(9, 4.0));
  for (auto scheme : {Scheme::VDN, Scheme::IdealQMIX, Scheme::WQMIX})
    for (const auto& r : enumerate_stable_points(scheme, q, JointPolicy::uniform(), {}))
      EXPECT_EQ(r.classification, StabilityClass::Strong) << to_string(scheme) << " " << to_string(r.candidate);
}

TEST(Stability, ResqWeakAtArgmaxUnstableElsewhere) {
  const auto q = gen_uniform_payoff({3, 3}, 21);
  const auto best = argmax_set(q);
  ASSERT_EQ(best.size(), 1u);
  for (const auto& r : enumerate_stable_points(Scheme::ResQ, q, JointPolicy::uniform(), {})) {
    EXPECT_EQ(r.classification, contains(best, r.candidate) ? StabilityClass::Weak : StabilityClass::Unstable)
        << to_string(r.candidate);
    ASSERT_TRUE(r.witness_leave);
    EXPECT_NEAR(r.witness_leave->loss, 0.0, 1e-18);
  }
}

TEST(Stability, MonotonePayoffOptimumIsStrongForIdealQmix) {
  const auto& q = corpus_entry("table10a");
  const auto r = classify_stable_point(Scheme::IdealQMIX, q, {0, 0}, JointPolicy::uniform(), {});
  EXPECT_EQ(r.classification, StabilityClass::Strong);
  EXPECT_NEAR(r.min_loss, 0.0, 1e-12);
}

TEST(Stability, ClassificationIsScaleInvariant) {
  const auto& q = corpus_entry("table2_qjt");
  FitConfig cfg;
  const auto a = enumerate_stable_points(Scheme::IdealQMIX, q, JointPolicy::uniform(), cfg);
  const auto b = enumerate_stable_points(Scheme::IdealQMIX, q.scaled(3.0, -7.0), JointPolicy::uniform(), cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].classification, b[i].classification);
}

TEST(Stability, GradientBackendCannotClassify) {
  FitConfig cfg;
  cfg.backend = Backend::ProjectedGradient;
  EXPECT_THROW(
      classify_stable_point(Scheme::IdealQMIX, corpus_entry("table6_qjt"), {0, 0}, JointPolicy::uniform(), cfg),
      CapabilityError);
}

TEST(Transitions, SelfTransitionTerminates) {
  const auto& q = corpus_entry("table10a");
  const auto t = iterate_transitions(Scheme::IdealQMIX, q, {0, 0}, JointPolicy::uniform(), {}, 5);
  EXPECT_TRUE(t.terminated);
  EXPECT_EQ(t.steps.size(), 1u);
  EXPECT_EQ(t.final_action(), (JointAction{0, 0}));
}

TEST(Transitions, StepLimitAndCycleFlags) {
  const auto& q = corpus_entry("table6_qjt");
  FitConfig cfg;
  const auto one = iterate_transitions(Scheme::WQMIX, q, {0, 2}, JointPolicy::uniform(), cfg, 1);
  EXPECT_TRUE(one.step_limit_hit);
  EXPECT_FALSE(one.terminated);
  const auto full = iterate_transitions(Scheme::WQMIX, q, {0, 2}, JointPolicy::uniform(), cfg, 20);
  EXPECT_FALSE(full.step_limit_hit);
  EXPECT_TRUE(full.terminated || full.cycle_detected);
  EXPECT_THROW(iterate_transitions(Scheme::WQMIX, q, {0, 2}, JointPolicy::uniform(), cfg, 0), InvalidInput);
}

TEST(Transitions, ChosenNextIsInGreedyUnion) {
  const auto q = gen_uniform_payoff({3, 3}, 5);
  const auto t = iterate_transitions(Scheme::IdealQMIX, q, {1, 1}, JointPolicy::uniform(), {}, 10);
  for (const auto& s : t.steps) {
    EXPECT_TRUE(contains(s.result.greedy, s.chosen_next));
    for (const auto& f : s.result.fits)
      for (const auto& u : f.greedy_set) EXPECT_TRUE(contains(s.result.greedy, u));
  }
}

TEST(LimitCheck, GapsShrinkWithEpsilon) {
  const auto gaps = lemma_c1_convergence_check(corpus_entry("table6_qjt"), {2, 2}, {0.1, 0.01, 0.001});
  ASSERT_EQ(gaps.size(), 3u);
  EXPECT_TRUE(gaps_decreasing(gaps));
  EXPECT_FALSE(gaps_decreasing({1.0, 2.0}));
  EXPECT_TRUE(gaps_decreasing({0.0, 0.0}));
}
