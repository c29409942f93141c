#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "fit.hpp"

namespace factorlab {

/// Per-agent values and per-agent nonnegative weight tensors of a QPLEX fit.
struct QplexParams {
  std::vector<std::vector<double>> q;
  std::vector<Tensor> w;
};

/// Q_tot(u) = sum_i Q_i(ref_i) + sum_i w_i(u) (Q_i(u_i) - Q_i(ref_i)); with
/// ref = per-agent argmax this is the dueling form with max Q_i gradient-free.
inline Tensor qplex_q_tot(const Shape& shape, const QplexParams& p, const JointAction& ref) {
  double base = 0;
  for (int i = 0; i < shape.n_agents(); ++i) base += p.q[i][ref[i]];
  Tensor t(shape.size(), base);
  for (std::size_t idx = 0; idx < shape.size(); ++idx)
    for (int i = 0; i < shape.n_agents(); ++i) {
      const int a = shape.component(idx, i);
      t[idx] += p.w[i][idx] * (p.q[i][a] - p.q[i][ref[i]]);
    }
  return t;
}

inline JointAction first_argmax(const std::vector<std::vector<double>>& q) {
  JointAction a;
  for (const auto& qi : q) a.push_back(static_cast<int>(std::max_element(qi.begin(), qi.end()) - qi.begin()));
  return a;
}

struct QplexStationarityReport {
  double max_abs_dq = 0;
  /// Largest |dL/dw| over strictly positive weights (must vanish there).
  double max_abs_dw_positive = 0;
  /// Smallest dL/dw over all entries (must be >= -tol).
  double min_dw = 0;
  int complementarity_violations = 0;
  bool stationary = false;
};

inline void validate_qplex(const Shape& shape, const QplexParams& p) {
  if (static_cast<int>(p.q.size()) != shape.n_agents() || static_cast<int>(p.w.size()) != shape.n_agents())
    throw InvalidInput("QPLEX parameters must have one entry per agent");
  for (int i = 0; i < shape.n_agents(); ++i) {
    if (static_cast<int>(p.q[i].size()) != shape.count(i)) throw InvalidInput("Q_i has wrong length");
    if (p.w[i].size() != shape.size()) throw InvalidInput("w_i has wrong size");
    for (double v : p.w[i])
      if (v < 0) throw InvalidInput("QPLEX weights must be nonnegative");
  }
}

/// Evaluates the first-order stability conditions of the QPLEX loss at ref
/// (defaults to the per-agent argmax). The residual weighting uses pi.
inline QplexStationarityReport qplex_stationarity_check(const JointPayoff& payoff, const QplexParams& p,
                                                        const JointPolicy& policy, double tol,
                                                        std::optional<JointAction> ref = {}) {
  const Shape& shape = payoff.shape();
  validate_qplex(shape, p);
  if (!ref) ref = first_argmax(p.q);
  const Tensor pi = weights(policy, shape);
  const Tensor t = qplex_q_tot(shape, p, *ref);
  QplexStationarityReport r;
  r.min_dw = std::numeric_limits<double>::infinity();
  for (int i = 0; i < shape.n_agents(); ++i) {
    std::vector<double> dq(shape.count(i), 0.0);
    for (std::size_t idx = 0; idx < shape.size(); ++idx) {
      const double delta = pi[idx] * (t[idx] - payoff[idx]);
      const int a = shape.component(idx, i);
      dq[a] += delta * p.w[i][idx];
      dq[(*ref)[i]] += delta * (1.0 - p.w[i][idx]);
      const double dw = delta * (p.q[i][a] - p.q[i][(*ref)[i]]);
      r.min_dw = std::min(r.min_dw, dw);
      if (p.w[i][idx] > 0) r.max_abs_dw_positive = std::max(r.max_abs_dw_positive, std::abs(dw));
      if (dw < -tol || (p.w[i][idx] > 0 && dw > tol)) ++r.complementarity_violations;
    }
    for (double g : dq) r.max_abs_dq = std::max(r.max_abs_dq, std::abs(g));
  }
  r.stationary = r.max_abs_dq <= tol && r.complementarity_violations == 0;
  return r;
}

namespace detail {

/// Minimum-change nonnegative w with d.w as close as possible to r.
inline void project_cell_weights(std::vector<double>& w, const std::vector<double>& d, double r) {
  bool pos = false, neg = false;
  for (double v : d) {
    pos |= v > 0;
    neg |= v < 0;
  }
  double target = r;
  if (!pos) target = std::min(target, 0.0);
  if (!neg) target = std::max(target, 0.0);
  std::vector<char> fixed(w.size(), 0);
  for (std::size_t i = 0; i < w.size(); ++i)
    if (d[i] == 0) fixed[i] = 1;
  for (std::size_t round = 0; round <= w.size(); ++round) {
    double cur = 0, nrm = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      cur += d[i] * w[i];
      if (!fixed[i]) nrm += d[i] * d[i];
    }
    if (nrm == 0) return;
    const double step = (target - cur) / nrm;
    bool clipped = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (fixed[i]) continue;
      w[i] += step * d[i];
      if (w[i] < 0) {
        w[i] = 0;
        fixed[i] = 1;
        clipped = true;
      }
    }
    if (!clipped) return;
  }
}

struct QplexDescent {
  QplexParams params;
  double loss = 0;
  int iterations = 0;
  bool converged = false;
  double residual = 0;
};

/// Block-coordinate descent with the gradient-free component held at ref:
/// exact least squares in Q, then per-cell projection in w. `tie` forces
/// Q_agent(action) = Q_agent(ref_agent).
inline QplexDescent qplex_descend(const JointPayoff& payoff, const Tensor& pi, QplexParams p, const JointAction& ref,
                                  double tol, int max_iters, std::optional<std::pair<int, int>> tie = {}) {
  const Shape& shape = payoff.shape();
  const int n = shape.n_agents();
  std::vector<int> offset;
  int cols = 0;
  for (int c : shape.counts()) {
    offset.push_back(cols);
    cols += c;
  }
  auto column = [&](int agent, int action) {
    if (tie && tie->first == agent && tie->second == action) action = ref[agent];
    return offset[agent] + action;
  };
  if (tie) p.q[tie->first][tie->second] = p.q[tie->first][ref[tie->first]];

  QplexDescent out;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= max_iters; ++it) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(shape.size()), cols);
    Eigen::VectorXd b(static_cast<Eigen::Index>(shape.size()));
    Eigen::VectorXd x0(cols);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < shape.count(i); ++a) x0(offset[i] + a) = p.q[i][a];
    for (std::size_t idx = 0; idx < shape.size(); ++idx) {
      const double s = std::sqrt(pi[idx]);
      const auto r = static_cast<Eigen::Index>(idx);
      for (int i = 0; i < n; ++i) {
        const int a = shape.component(idx, i);
        A(r, column(i, ref[i])) += s * (1.0 - p.w[i][idx]);
        A(r, column(i, a)) += s * p.w[i][idx];
      }
      b(r) = s * payoff[idx];
    }
    Eigen::VectorXd dx = A.completeOrthogonalDecomposition().solve(b - A * x0);
    Eigen::VectorXd x = x0 + dx;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < shape.count(i); ++a) p.q[i][a] = x(column(i, a));

    double base = 0;
    for (int i = 0; i < n; ++i) base += p.q[i][ref[i]];
    std::vector<double> cw(n), d(n);
    for (std::size_t idx = 0; idx < shape.size(); ++idx) {
      for (int i = 0; i < n; ++i) {
        cw[i] = p.w[i][idx];
        d[i] = p.q[i][shape.component(idx, i)] - p.q[i][ref[i]];
      }
      project_cell_weights(cw, d, payoff[idx] - base);
      for (int i = 0; i < n; ++i) p.w[i][idx] = cw[i];
    }

    const Tensor t = qplex_q_tot(shape, p, ref);
    out.loss = weighted_sse(t, payoff.values(), pi);
    out.iterations = it;
    double g = 0;
    for (int i = 0; i < n; ++i) {
      std::vector<double> dq(shape.count(i), 0.0);
      for (std::size_t idx = 0; idx < shape.size(); ++idx) {
        const double delta = pi[idx] * (t[idx] - payoff[idx]);
        dq[shape.component(idx, i)] += delta * p.w[i][idx];
        dq[ref[i]] += delta * (1.0 - p.w[i][idx]);
      }
      if (tie && tie->first == i) {
        dq[ref[i]] += dq[tie->second];
        dq[tie->second] = 0;
      }
      for (double v : dq) g = std::max(g, std::abs(v));
    }
    out.residual = g;
    if (g <= tol) {
      out.converged = true;
      break;
    }
    if (std::abs(prev - out.loss) <= 1e-15 * (1.0 + out.loss) && it > 50) break;
    prev = out.loss;
  }
  out.params = std::move(p);
  return out;
}

}  // namespace detail

/// Descends the QPLEX loss from `init` with the gradient-free maxima held at
/// `ref` (default: argmax of the initial Q_i) until the stationarity
/// conditions hold at config.qplex_tol.
inline FactorizedFit fit_qplex(const JointPayoff& payoff, const JointPolicy& policy, const QplexParams& init,
                               const FitConfig& config = {}, std::optional<JointAction> ref = {}) {
  const Shape& shape = payoff.shape();
  validate_qplex(shape, init);
  if (!ref) ref = first_argmax(init.q);
  const Tensor pi = weights(policy, shape);
  auto res = detail::qplex_descend(payoff, pi, init, *ref, config.qplex_tol, config.max_iters);
  if (!res.converged) throw NonConvergence("QPLEX descent did not reach stationarity", res.residual, res.iterations);
  FactorizedFit fit;
  fit.scheme = Scheme::QPLEX;
  fit.per_agent_q = res.params.q;
  fit.q_tot = qplex_q_tot(shape, res.params, *ref);
  fit.loss = res.loss;
  fit.greedy_set = greedy_from_agents(fit.per_agent_q);
  fit.qplex_weights = res.params.w;
  fit.backend = Backend::ProjectedGradient;
  fit.converged = true;
  fit.iterations = res.iterations;
  return fit;
}

struct QplexCandidateReport {
  bool stable_candidate = false;
  std::optional<FactorizedFit> witness;
  /// Smallest loss increase, over the lowest-loss stationary points found, when
  /// forcing a non-greedy Q_i(a) to tie with the greedy one.
  double barrier = 0;
  int stationary_points_found = 0;
};

/// Multi-start search for stationary points whose per-agent argmax is exactly
/// the candidate. The candidate is flagged when, at the lowest loss level
/// found, no stationary point has a zero-cost path to a per-agent tie with the
/// greedy action (a plateau reaching the tie lets the greedy action drift).
inline QplexCandidateReport qplex_candidate_search(const JointPayoff& payoff, const JointAction& candidate,
                                                   const JointPolicy& policy, const FitConfig& config) {
  const Shape& shape = payoff.shape();
  const Tensor pi = weights(policy, shape);
  const int n = shape.n_agents();
  double scale = 0;
  for (double v : payoff.values()) scale = std::max(scale, std::abs(v));
  scale = std::max(scale, 1.0) / n;

  std::mt19937_64 rng(config.seed * 1000003ULL + shape.index(candidate));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double margin_tol = 1e-6 * scale;

  struct Found {
    detail::QplexDescent res;
    double barrier;
  };
  std::vector<Found> found;
  for (int r = 0; r < config.qplex_restarts; ++r) {
    QplexParams init;
    init.q.resize(n);
    init.w.assign(n, Tensor(shape.size()));
    for (int i = 0; i < n; ++i) {
      init.q[i].resize(shape.count(i));
      for (auto& v : init.q[i]) v = r == 0 ? 0.0 : scale * unit(rng);
      init.q[i][candidate[i]] = scale * 1.5;
      for (auto& v : init.w[i]) v = r == 0 ? 1.0 : 0.1 + 1.9 * unit(rng);
    }
    auto res = detail::qplex_descend(payoff, pi, init, candidate, config.qplex_tol, config.max_iters);
    if (!res.converged) continue;
    bool strict = true;
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < shape.count(i); ++a)
        if (a != candidate[i] && res.params.q[i][a] > res.params.q[i][candidate[i]] - margin_tol) strict = false;
    if (!strict) continue;

    double barrier = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < shape.count(i); ++a) {
        if (a == candidate[i]) continue;
        auto tied = detail::qplex_descend(payoff, pi, res.params, candidate, config.qplex_tol, config.max_iters,
                                          std::make_pair(i, a));
        barrier = std::min(barrier, tied.loss - res.loss);
      }
    found.push_back({std::move(res), barrier});
  }

  QplexCandidateReport report;
  report.stationary_points_found = static_cast<int>(found.size());
  if (found.empty()) return report;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : found) best = std::min(best, f.res.loss);
  const double level_tol = 1e-6 * (1.0 + best);
  const Found* witness = nullptr;
  report.barrier = std::numeric_limits<double>::infinity();
  for (const auto& f : found) {
    if (f.res.loss > best + level_tol) continue;
    if (!witness || f.barrier < report.barrier) witness = &f;
    report.barrier = std::min(report.barrier, f.barrier);
  }
  report.stable_candidate = report.barrier > 1e-4 * (1.0 + best);

  FactorizedFit fit;
  fit.scheme = Scheme::QPLEX;
  fit.per_agent_q = witness->res.params.q;
  fit.q_tot = qplex_q_tot(shape, witness->res.params, candidate);
  fit.loss = witness->res.loss;
  fit.greedy_set = greedy_from_agents(fit.per_agent_q);
  fit.qplex_weights = witness->res.params.w;
  fit.backend = Backend::ProjectedGradient;
  fit.iterations = witness->res.iterations;
  report.witness = std::move(fit);
  return report;
}

}  // namespace factorlab
