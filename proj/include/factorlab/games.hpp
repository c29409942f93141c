#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "corpus.hpp"
#include "fitters.hpp"
#include "policy.hpp"

namespace factorlab {

struct RiskRewardGame {
  int n_agents = 0;
  int n_actions = 0;
  std::vector<std::vector<double>> reward_vectors;
  /// sigma_i: own action -> mapped action.
  std::vector<std::vector<int>> bijections;
  JointPayoff payoff;
  unsigned long long seed = 0;
};

/// Payoff sign(v) * sum_i r_i(v_i) with v_i = sigma_i(u_i), where the sign is
/// positive only when every mapped action agrees.
inline JointPayoff risk_reward_payoff(const std::vector<std::vector<double>>& r,
                                      const std::vector<std::vector<int>>& sigma) {
  const int n = static_cast<int>(r.size());
  std::vector<int> counts(n, static_cast<int>(r.front().size()));
  Shape shape(counts);
  Tensor values(shape.size());
  for (std::size_t idx = 0; idx < shape.size(); ++idx) {
    const JointAction u = shape.deindex(idx);
    double sum = 0;
    bool consensus = true;
    const int v0 = sigma[0][u[0]];
    for (int i = 0; i < n; ++i) {
      const int v = sigma[i][u[i]];
      sum += r[i][v];
      consensus = consensus && v == v0;
    }
    values[idx] = consensus ? sum : -sum;
  }
  return JointPayoff(counts, std::move(values), "riskreward");
}

inline RiskRewardGame gen_risk_reward(int n_agents, int n_actions, unsigned long long seed) {
  if (n_agents < 1 || n_actions < 1) throw InvalidInput("risk-reward game needs at least one agent and action");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RiskRewardGame g;
  g.n_agents = n_agents;
  g.n_actions = n_actions;
  g.seed = seed;
  for (int i = 0; i < n_agents; ++i) {
    std::vector<double> r(n_actions);
    for (double& x : r) x = unit(rng) / n_agents * 10.0;
    g.reward_vectors.push_back(std::move(r));
  }
  for (int i = 0; i < n_agents; ++i) {
    std::vector<int> perm(n_actions);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    g.bijections.push_back(std::move(perm));
  }
  g.payoff = risk_reward_payoff(g.reward_vectors, g.bijections);
  return g;
}

/// Payoff with independent Uniform[lo, hi] entries.
inline JointPayoff gen_uniform_payoff(const std::vector<int>& counts, unsigned long long seed, double lo = -10.0,
                                      double hi = 10.0) {
  Shape shape(counts);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor v(shape.size());
  for (double& x : v) x = d(rng);
  return JointPayoff(counts, std::move(v), "uniform_random");
}

/// Nonnegative payoffs map linearly onto [0,1] between the smallest and
/// largest nonnegative entry; negative payoffs map to q / |most negative|,
/// so the most negative entry gives -1. A single nonnegative value maps to 1.
inline double normalized_return(const JointPayoff& payoff, const JointAction& action) {
  double pos_min = std::numeric_limits<double>::infinity(), pos_max = -pos_min;
  double neg_min = 0;
  bool any_neg = false;
  for (double v : payoff.values()) {
    if (v >= 0) {
      pos_min = std::min(pos_min, v);
      pos_max = std::max(pos_max, v);
    } else {
      any_neg = true;
      neg_min = std::min(neg_min, v);
    }
  }
  if (!any_neg || !std::isfinite(pos_min))
    throw DegenerateNormalization("normalized return needs both nonnegative and negative payoffs");
  const double q = payoff.at(action);
  if (q >= 0) return pos_max == pos_min ? 1.0 : (q - pos_min) / (pos_max - pos_min);
  return q / -neg_min;
}

/// The epsilon -> 0 limit of the ideal-QMIX fit at a non-capture pair: the
/// punishment on the whole first row and column, 0 elsewhere.
inline JointPayoff pp_limit_matrix(double punishment) {
  std::vector<std::vector<double>> m(6, std::vector<double>(6, 0.0));
  for (int k = 0; k < 6; ++k) m[0][k] = m[k][0] = punishment;
  return JointPayoff::matrix(m, "pp_limit");
}

struct PpLimitReport {
  std::vector<double> epsilons;
  /// Max-entry gap between the fitted Q_tot and the limit matrix, per epsilon.
  std::vector<double> gaps;
  std::vector<FactorizedFit> fits;
};

/// Ideal-QMIX fits of the one-step predator-prey payoff under epsilon-greedy
/// referenced at `tilde_u`. Decentralized epsilon-greedy by default: only then
/// do two-agent deviations such as (0,0) carry weight of order eps^2.
inline PpLimitReport pp_limit_fit_check(double punishment, const JointAction& tilde_u,
                                        const std::vector<double>& epsilons,
                                        PolicyKind kind = PolicyKind::DecentralizedEpsGreedy,
                                        const FitConfig& config = {}) {
  if (kind == PolicyKind::Uniform) throw InvalidInput("limit check needs an epsilon-greedy policy");
  const JointPayoff game = one_step_pp_matrix(punishment);
  const JointPayoff limit = pp_limit_matrix(punishment);
  PpLimitReport rep;
  for (double eps : epsilons) {
    const JointPolicy pi = kind == PolicyKind::CentralizedEpsGreedy ? JointPolicy::centralized(eps, tilde_u)
                                                                    : JointPolicy::decentralized(eps, tilde_u);
    auto fit = fit_ideal_qmix(game, pi, config);
    double gap = 0;
    for (std::size_t i = 0; i < fit.q_tot.size(); ++i) gap = std::max(gap, std::abs(fit.q_tot[i] - limit[i]));
    rep.epsilons.push_back(eps);
    rep.gaps.push_back(gap);
    rep.fits.push_back(std::move(fit));
  }
  return rep;
}

}  // namespace factorlab
