#include <gtest/gtest.h>

#include <random>

#include "factorlab/isotonic.hpp"

using namespace factorlab;

namespace {

std::vector<OrderEdge> chain(int n) {
  std::vector<OrderEdge> e;
  for (int i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return e;
}

/// Dykstra's alternating projections onto the half-spaces x_lo <= x_hi in the
/// w-weighted norm; converges to the weighted isotonic projection.
std::vector<double> dykstra(const std::vector<double>& y, const std::vector<double>& w,
                            const std::vector<OrderEdge>& edges, int sweeps = 20000) {
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

}  // namespace

TEST(Isotonic, MatchesPavaOnChains) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> val(-10, 10), wt(0.1, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 12;
    std::vector<double> y(n), w(n);
    for (int i = 0; i < n; ++i) {
      y[i] = val(rng);
      w[i] = wt(rng);
    }
    const auto a = isotonic_regression(y, w, chain(n));
    const auto b = pava(y, w);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  }
}

TEST(Isotonic, MatchesDykstraOnGrids) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> val(-5, 5), wt(0.2, 2);
  Shape s({3, 3});
  const auto edges = lattice_edges(s, {{0, 1, 2}, {2, 0, 1}});
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> y(9), w(9);
    for (int i = 0; i < 9; ++i) {
      y[i] = val(rng);
      w[i] = wt(rng);
    }
    const auto a = isotonic_regression(y, w, edges);
    const auto b = dykstra(y, w, edges);
    for (int i = 0; i < 9; ++i) EXPECT_NEAR(a[i], b[i], 1e-6);
  }
}

TEST(Isotonic, OutputRespectsOrder) {
  std::vector<double> y{3, 1, 2, 0};
  const auto x = isotonic_regression(y, std::vector<double>(4, 1.0), chain(4));
  for (int i = 0; i < 3; ++i) EXPECT_LE(x[i], x[i + 1] + 1e-12);
  EXPECT_NEAR(x[0], 1.5, 1e-12);
}

TEST(Isotonic, LatticeEdgesFollowOrders) {
  Shape s({2, 3});
  const auto e = lattice_edges(s, {{1, 0}, {0, 1, 2}});
  // agent 0 order 1 < 0: each (1,b) lies below (0,b); agent 1 chains b -> b+1.
  EXPECT_EQ(e.size(), 3u + 4u);
  for (const auto& edge : e) {
    const auto lo = s.deindex(edge.lo), hi = s.deindex(edge.hi);
    const bool axis0 = lo[1] == hi[1] && lo[0] == 1 && hi[0] == 0;
    const bool axis1 = lo[0] == hi[0] && hi[1] == lo[1] + 1;
    EXPECT_TRUE(axis0 || axis1);
  }
}
