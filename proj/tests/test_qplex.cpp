#include <gtest/gtest.h>

#include "factorlab/corpus.hpp"
#include "factorlab/qplex.hpp"
#include "factorlab/stability.hpp"

using namespace factorlab;

namespace {
QplexParams unit_weights(const Shape& s, std::vector<std::vector<double>> q) {
  return {std::move(q), std::vector<Tensor>(s.n_agents(), Tensor(s.size(), 1.0))};
}
}  // namespace

TEST(Qplex, UnitWeightsGiveAdditiveQtot) {
  Shape s({2, 3});
  const auto p = unit_weights(s, {{1, 4}, {0, 2, -1}});
  const Tensor t = qplex_q_tot(s, p, first_argmax(p.q));
  for (std::size_t idx = 0; idx < s.size(); ++idx)
    EXPECT_NEAR(t[idx], p.q[0][s.component(idx, 0)] + p.q[1][s.component(idx, 1)], 1e-12);
}

TEST(Qplex, ValidationRejectsBadParameters) {
  Shape s({2, 2});
  auto p = unit_weights(s, {{0, 1}, {0, 1}});
  p.w[0][1] = -0.5;
  EXPECT_THROW(validate_qplex(s, p), InvalidInput);
  EXPECT_THROW(validate_qplex(s, unit_weights(s, {{0, 1}})), InvalidInput);
}

TEST(Qplex, DescentReachesStationaryPoint) {
  const auto& q = corpus_entry("table8_qjt");
  const auto pi = JointPolicy::uniform();
  const auto init = unit_weights(q.shape(), {{1, 0, 0}, {1, 0, 0}});
  FitConfig cfg;
  const auto fit = fit_qplex(q, pi, init, cfg);
  ASSERT_TRUE(fit.qplex_weights);
  const auto rep =
      qplex_stationarity_check(q, {fit.per_agent_q, *fit.qplex_weights}, pi, 10 * cfg.qplex_tol, JointAction{0, 0});
  EXPECT_TRUE(rep.stationary);
  EXPECT_LE(fit.loss, 2 * 32.0);
}

TEST(Qplex, ExactOnItsOwnRepresentation) {
  Shape s({2, 2});
  auto p = unit_weights(s, {{3, 1}, {2, 0}});
  p.w[1] = {0.5, 2.0, 1.0, 1.5};
  const Tensor t = qplex_q_tot(s, p, {0, 0});
  const JointPayoff q({2, 2}, t);
  FitConfig cfg;
  const auto fit = fit_qplex(q, JointPolicy::uniform(), p, cfg, JointAction{0, 0});
  EXPECT_LT(fit.loss, 1e-8);
}

TEST(Qplex, CandidateSearchFlagsOptimumOfDiagonalGame) {
  const auto& q = corpus_entry("table8_qjt");
  FitConfig cfg;
  const auto r = classify_stable_point(Scheme::QPLEX, q, {0, 0}, JointPolicy::uniform(), cfg);
  EXPECT_EQ(r.classification, StabilityClass::StableCandidate);
  const auto off = classify_stable_point(Scheme::QPLEX, q, {0, 1}, JointPolicy::uniform(), cfg);
  EXPECT_EQ(off.classification, StabilityClass::Unstable);
}
