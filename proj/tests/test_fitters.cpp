#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "factorlab/corpus.hpp"
#include "factorlab/fitters.hpp"
#include "factorlab/games.hpp"

using namespace factorlab;

namespace {

std::vector<double> dykstra(const std::vector<double>& y, const std::vector<double>& w,
                            const std::vector<OrderEdge>& edges, int sweeps = 4000) {
  std::vector<double> x = y;
  std::vector<std::pair<double, double>> inc(edges.size(), {0, 0});
  for (int s = 0; s < sweeps; ++s)
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const auto [lo, hi] = edges[k];
      double a = x[lo] + inc[k].first, b = x[hi] + inc[k].second;
      double na = a, nb = b;
      if (a > b) na = nb = (w[lo] * a + w[hi] * b) / (w[lo] + w[hi]);
      inc[k] = {a - na, b - nb};
      x[lo] = na;
      x[hi] = nb;
    }
  return x;
}

/// Minimum over every pair of per-agent strict orders of the projected loss.
double brute_force_ideal_qmix_loss(const JointPayoff& p, const Tensor& w) {
  const Shape& s = p.shape();
  std::vector<int> o0(s.count(0)), o1(s.count(1));
  std::iota(o0.begin(), o0.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    std::iota(o1.begin(), o1.end(), 0);
    do {
      const auto x = dykstra(p.values(), w, lattice_edges(s, {o0, o1}));
      best = std::min(best, weighted_sse(x, p.values(), w));
    } while (std::next_permutation(o1.begin(), o1.end()));
  } while (std::next_permutation(o0.begin(), o0.end()));
  return best;
}

}  // namespace

TEST(Vdn, MatchesTwoWayAnovaUnderUniformWeights) {
  const auto& p = corpus_entry("table2_qjt");
  const auto fit = fit_vdn(p, JointPolicy::uniform());
  std::vector<double> row(3, 0), col(3, 0);
  double grand = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      row[a] += p.at({a, b}) / 3;
      col[b] += p.at({a, b}) / 3;
      grand += p.at({a, b}) / 9;
    }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) EXPECT_NEAR(fit.q_tot[p.joint_index({a, b})], row[a] + col[b] - grand, 1e-10);
}

TEST(Vdn, ExactOnAdditivePayoffs) {
  auto p = JointPayoff::matrix({{1, 4, 2}, {3, 6, 4}});
  const auto fit = fit_vdn(p, JointPolicy::centralized(0.2, {0, 0}));
  EXPECT_NEAR(fit.loss, 0.0, 1e-18);
  EXPECT_EQ(fit.greedy_set, (ActionSet{{1, 1}}));
}

TEST(IdealQmix, ExactOnMonotonePayoffs) {
  const auto& p = corpus_entry("table10a");
  const auto fit = fit_ideal_qmix(p, JointPolicy::uniform(), {});
  EXPECT_NEAR(fit.loss, 0.0, 1e-12);
  EXPECT_EQ(fit.greedy_set, (ActionSet{{0, 0}}));
}

class IdealQmixOracle : public ::testing::TestWithParam<int> {};

TEST_P(IdealQmixOracle, MatchesBruteForceLoss) {
  const int seed = GetParam();
  const std::vector<int> counts = seed % 2 ? std::vector<int>{2, 3} : std::vector<int>{3, 3};
  const auto p = gen_uniform_payoff(counts, 100 + seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> wt(0.05, 1.0);
  Tensor w(p.size());
  for (double& x : w) x = wt(rng);
  const auto fits = monotone_minimizers(p.shape(), p.values(), w, std::nullopt, {});
  ASSERT_FALSE(fits.empty());
  const double oracle = brute_force_ideal_qmix_loss(p, w);
  EXPECT_NEAR(fits.front().loss, oracle, 1e-5 * (1 + oracle));
  for (const auto& f : fits) {
    EXPECT_NEAR(f.loss, fits.front().loss, 1e-6 * (1 + oracle));
    EXPECT_NEAR(weighted_sse(f.q_tot, p.values(), w), f.loss, 1e-9 * (1 + f.loss));
  }
}

INSTANTIATE_TEST_SUITE_P(Fitters, IdealQmixOracle, ::testing::Range(0, 12));

TEST(IdealQmix, GreedySetMatchesQtotArgmax) {
  const auto p = gen_uniform_payoff({3, 3}, 77);
  for (const auto& f : ideal_qmix_minimizers(p, JointPolicy::uniform(), {})) {
    double m = *std::max_element(f.q_tot.begin(), f.q_tot.end());
    for (const auto& u : f.greedy_set) EXPECT_NEAR(f.q_tot[p.joint_index(u)], m, 1e-7);
  }
}

TEST(IdealQmix, GradientBackendCannotEnumerate) {
  FitConfig cfg;
  cfg.backend = Backend::ProjectedGradient;
  EXPECT_THROW(ideal_qmix_minimizers(corpus_entry("table6_qjt"), JointPolicy::uniform(), cfg), CapabilityError);
}

TEST(Wqmix, WeightTensorRule) {
  const auto& q = corpus_entry("table6_qjt");
  const auto w = wqmix_weight_tensor(q, {1, 2}, 0.1, false);
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_EQ(w[i], q[i] >= q.at({1, 2}) ? 1.0 : 0.1);
  const auto ws = wqmix_weight_tensor(q, {1, 2}, 0.1, true);
  EXPECT_EQ(ws[q.joint_index({1, 2})], 1.0);
  EXPECT_EQ(ws[q.joint_index({2, 1})], 0.1);
  EXPECT_EQ(ws[q.joint_index({0, 0})], 1.0);
}

TEST(Wqmix, AlphaOneReducesToIdealQmix) {
  const auto& q = corpus_entry("table2_qjt");
  FitConfig cfg;
  const auto a = fit_wqmix(q, q, {2, 2}, 1.0, JointPolicy::uniform(), cfg);
  const auto b = fit_ideal_qmix(q, JointPolicy::uniform(), cfg);
  EXPECT_NEAR(a.loss, b.loss, 1e-9);
  EXPECT_THROW(fit_wqmix(q, q, {0, 0}, 0.0, JointPolicy::uniform(), cfg), InvalidInput);
}

TEST(Resq, DecompositionIsExact) {
  const auto& q = corpus_entry("table6_qjt");
  for (const auto& u : q.shape().all_actions()) {
    const auto r = fit_resq(q, u);
    for (const auto* f : {&r.fit, r.alternative ? &*r.alternative : nullptr}) {
      if (!f) continue;
      ASSERT_TRUE(f->resq);
      for (std::size_t i = 0; i < q.size(); ++i) {
        EXPECT_NEAR(f->resq->q_mon[i] + f->resq->w_r[i] * f->resq->q_r[i], q[i], 1e-12);
        EXPECT_LE(f->resq->q_r[i], 1e-12);
      }
      EXPECT_EQ(f->resq->w_r[q.joint_index(u)], 0.0);
    }
  }
}

TEST(Resq, StaysOnlyAtGlobalOptimum) {
  const auto& q = corpus_entry("table6_qjt");
  EXPECT_TRUE(contains(fit_resq(q, {0, 0}).fit.greedy_set, {0, 0}));
  EXPECT_FALSE(contains(fit_resq(q, {2, 2}).fit.greedy_set, {2, 2}));
}
