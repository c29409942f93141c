#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "fit.hpp"
#include "isotonic.hpp"

namespace factorlab {

/// Additive fit Q_tot = sum_i Q_i minimising the pi-weighted squared error.
inline FactorizedFit fit_vdn(const JointPayoff& payoff, const JointPolicy& policy) {
  const Shape& shape = payoff.shape();
  const Tensor w = weights(policy, shape);
  int cols = 0;
  std::vector<int> offset;
  for (int c : shape.counts()) {
    offset.push_back(cols);
    cols += c;
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(shape.size()), cols);
  Eigen::VectorXd b(static_cast<Eigen::Index>(shape.size()));
  for (std::size_t idx = 0; idx < shape.size(); ++idx) {
    const double sw = std::sqrt(w[idx]);
    for (int i = 0; i < shape.n_agents(); ++i)
      A(static_cast<Eigen::Index>(idx), offset[i] + shape.component(idx, i)) = sw;
    b(static_cast<Eigen::Index>(idx)) = sw * payoff[idx];
  }
  Eigen::VectorXd x = A.completeOrthogonalDecomposition().solve(b);

  FactorizedFit fit;
  fit.scheme = Scheme::VDN;
  for (int i = 0; i < shape.n_agents(); ++i)
    fit.per_agent_q.emplace_back(x.data() + offset[i], x.data() + offset[i] + shape.count(i));
  fit.q_tot.assign(shape.size(), 0.0);
  for (std::size_t idx = 0; idx < shape.size(); ++idx)
    for (int i = 0; i < shape.n_agents(); ++i) fit.q_tot[idx] += fit.per_agent_q[i][shape.component(idx, i)];
  fit.loss = weighted_sse(fit.q_tot, payoff.values(), w);
  fit.greedy_set = greedy_from_agents(fit.per_agent_q, tie_tolerance(payoff.values(), 1e-9));
  return fit;
}

namespace detail {

inline std::vector<std::vector<int>> permutations(int k, int forced_top) {
  std::vector<int> p(k);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    if (forced_top < 0 || p.back() == forced_top) out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

/// Loss of the best fit monotone along agent i's order alone: a lower bound for
/// any combination containing that order.
inline double single_axis_bound(const Shape& shape, const Tensor& y, const Tensor& w, int agent,
                                const std::vector<int>& order) {
  const std::size_t stride = shape.stride(agent);
  const std::size_t block = stride * shape.count(agent);
  double total = 0;
  std::vector<double> fy(order.size()), fw(order.size());
  for (std::size_t base = 0; base < shape.size(); base += block)
    for (std::size_t off = 0; off < stride; ++off) {
      for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t idx = base + order[k] * stride + off;
        fy[k] = y[idx];
        fw[k] = w[idx];
      }
      auto x = pava(fy, fw);
      for (std::size_t k = 0; k < order.size(); ++k) total += fw[k] * (x[k] - fy[k]) * (x[k] - fy[k]);
    }
  return total;
}

/// Maximally tied per-agent values: dense rank of slice classes along the order.
inline std::vector<std::vector<double>> slice_ranks(const Shape& shape, const Tensor& x,
                                                    const std::vector<std::vector<int>>& orders, double tol) {
  std::vector<std::vector<double>> q(shape.n_agents());
  for (int i = 0; i < shape.n_agents(); ++i) {
    q[i].assign(shape.count(i), 0.0);
    int rank = 0;
    for (std::size_t k = 1; k < orders[i].size(); ++k) {
      if (compare_slices(shape, x, i, orders[i][k], orders[i][k - 1], tol) != 2) ++rank;
      q[i][orders[i][k]] = rank;
    }
  }
  return q;
}

}  // namespace detail

/// Every global minimiser (up to tolerance, deduplicated by Q_tot) of the
/// weighted monotone fit of `target`; optionally restricted to fits whose
/// greedy set contains `required`.
inline std::vector<FactorizedFit> monotone_minimizers(const Shape& shape, const Tensor& target, const Tensor& w,
                                                      const std::optional<JointAction>& required,
                                                      const FitConfig& config, Scheme scheme = Scheme::IdealQMIX) {
  config.validate();
  if (config.backend != Backend::ExhaustiveOrders)
    throw CapabilityError("complete minimiser sets need the exhaustive backend");
  if (required) shape.index(*required);
  const int n = shape.n_agents();

  double wmax = 0;
  for (double v : w) {
    if (v < 0 || !std::isfinite(v)) throw InvalidInput("weights must be finite and nonnegative");
    wmax = std::max(wmax, v);
  }
  if (wmax <= 0) throw InvalidInput("all visitation weights are zero");
  Tensor we(w);
  for (double& v : we) v = std::max(v, 1e-12 * wmax);

  std::vector<std::vector<std::vector<int>>> perms(n);
  std::vector<std::vector<double>> bounds(n);
  std::vector<std::size_t> sizes(n);
  double combos = 1;
  for (int i = 0; i < n; ++i) {
    double f = 1;
    for (int k = 2; k <= shape.count(i); ++k) f *= k;
    if (required) f /= shape.count(i);
    combos *= f;
  }
  if (combos > static_cast<double>(config.order_budget))
    throw BackendSwitch("ordering combinations (" + std::to_string(static_cast<long double>(combos)) +
                        ") exceed order_budget; use the gradient backend or raise the budget");
  for (int i = 0; i < n; ++i) {
    perms[i] = detail::permutations(shape.count(i), required ? (*required)[i] : -1);
    sizes[i] = perms[i].size();
    for (const auto& p : perms[i]) bounds[i].push_back(detail::single_axis_bound(shape, target, we, i, p));
  }

  struct Candidate {
    double bound;
    std::vector<std::size_t> pick;
  };
  std::vector<Candidate> cands;
  cands.reserve(static_cast<std::size_t>(combos));
  for_each_product(sizes, [&](const std::vector<std::size_t>& k) {
    double b = 0;
    for (int i = 0; i < n; ++i) b = std::max(b, bounds[i][k[i]]);
    cands.push_back({b, k});
  });
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) { return a.bound < b.bound; });

  double scale = 0;
  for (std::size_t i = 0; i < target.size(); ++i) scale += w[i] * target[i] * target[i];
  const double loss_tol = config.tolerance * (1.0 + scale);
  const double slice_tol = tie_tolerance(target, config.tolerance);

  struct Solved {
    double loss;
    Tensor x;
    std::vector<std::vector<int>> orders;
  };
  std::vector<Solved> kept;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : cands) {
    if (c.bound > best + loss_tol) break;
    std::vector<std::vector<int>> orders(n);
    for (int i = 0; i < n; ++i) orders[i] = perms[i][c.pick[i]];
    Tensor x = isotonic_regression(target, we, lattice_edges(shape, orders));
    const double loss = weighted_sse(x, target, w);
    if (loss > best + loss_tol) continue;
    best = std::min(best, loss);
    kept.push_back({loss, std::move(x), std::move(orders)});
  }

  std::vector<FactorizedFit> out;
  for (auto& s : kept) {
    if (s.loss > best + loss_tol) continue;
    bool dup = false;
    for (const auto& f : out) {
      double d = 0;
      for (std::size_t i = 0; i < s.x.size(); ++i) d = std::max(d, std::abs(f.q_tot[i] - s.x[i]));
      if (d <= slice_tol) {
        dup = true;
        break;
      }
    }
    if (dup) continue;
    FactorizedFit fit;
    fit.scheme = scheme;
    fit.per_agent_q = detail::slice_ranks(shape, s.x, s.orders, slice_tol);
    fit.greedy_set = greedy_from_agents(fit.per_agent_q);
    fit.q_tot = std::move(s.x);
    fit.loss = s.loss;
    fit.orders = std::move(s.orders);
    fit.backend = Backend::ExhaustiveOrders;
    out.push_back(std::move(fit));
  }
  std::sort(out.begin(), out.end(),
            [](const FactorizedFit& a, const FactorizedFit& b) { return a.greedy_set < b.greedy_set; });
  return out;
}

inline std::vector<FactorizedFit> ideal_qmix_minimizers(const JointPayoff& payoff, const JointPolicy& policy,
                                                        const FitConfig& config,
                                                        const std::optional<JointAction>& required = {}) {
  return monotone_minimizers(payoff.shape(), payoff.values(), weights(policy, payoff.shape()), required, config);
}

/// Global ideal-QMIX optimum; the minimiser with the lexicographically smallest greedy set.
inline FactorizedFit fit_ideal_qmix(const JointPayoff& payoff, const JointPolicy& policy,
                                    const FitConfig& config = {}) {
  return ideal_qmix_minimizers(payoff, policy, config).front();
}

inline FactorizedFit fit_ideal_qmix_constrained(const JointPayoff& payoff, const JointPolicy& policy,
                                                const JointAction& required_greedy, const FitConfig& config = {}) {
  return ideal_qmix_minimizers(payoff, policy, config, required_greedy).front();
}

/// Weight 1 where q_hat(u) beats q_hat(u~) (or u = u~), alpha elsewhere.
inline Tensor wqmix_weight_tensor(const JointPayoff& q_hat, const JointAction& tilde_u, double alpha, bool strict) {
  const double ref = q_hat.at(tilde_u);
  const std::size_t ti = q_hat.joint_index(tilde_u);
  Tensor w(q_hat.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const bool full = i == ti || (strict ? q_hat[i] > ref : q_hat[i] >= ref);
    w[i] = full ? 1.0 : alpha;
  }
  return w;
}

inline std::vector<FactorizedFit> wqmix_minimizers(const JointPayoff& q_hat, const JointAction& tilde_u,
                                                   const JointPolicy& policy, const FitConfig& config,
                                                   const std::optional<JointAction>& required = {}) {
  config.validate();
  const Tensor wq = wqmix_weight_tensor(q_hat, tilde_u, config.alpha, config.wqmix_strict);
  Tensor w = weights(policy, q_hat.shape());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= wq[i];
  auto fits = monotone_minimizers(q_hat.shape(), q_hat.values(), w, required, config, Scheme::WQMIX);
  for (auto& f : fits) f.wqmix_weights = wq;
  return fits;
}

/// WQMIX fit of q_hat. The payoff argument only fixes the shape; the loss is
/// measured against q_hat as in the weighted loss.
inline FactorizedFit fit_wqmix(const JointPayoff& payoff, const JointPayoff& q_hat, const JointAction& tilde_u,
                               double alpha, const JointPolicy& policy, FitConfig config = {},
                               const std::optional<JointAction>& required_greedy = {}) {
  if (!(payoff.shape() == q_hat.shape())) throw InvalidInput("payoff and q_hat shapes differ");
  config.alpha = alpha;
  return wqmix_minimizers(q_hat, tilde_u, policy, config, required_greedy).front();
}

// ResQ ---------------------------------------------------------------------

namespace detail {

inline FactorizedFit assemble_resq(const JointPayoff& payoff, const JointAction& tilde_u,
                                   std::vector<std::vector<double>> q, Tensor q_mon) {
  FactorizedFit fit;
  fit.scheme = Scheme::ResQ;
  fit.per_agent_q = std::move(q);
  const std::size_t ti = payoff.joint_index(tilde_u);
  ResqParts parts{std::move(q_mon), Tensor(payoff.size()), Tensor(payoff.size(), 1.0)};
  parts.w_r[ti] = 0.0;
  fit.q_tot.resize(payoff.size());
  for (std::size_t i = 0; i < payoff.size(); ++i) {
    parts.q_r[i] = std::min(0.0, payoff[i] - parts.q_mon[i]);
    fit.q_tot[i] = parts.q_mon[i] + parts.w_r[i] * parts.q_r[i];
  }
  fit.greedy_set = greedy_from_agents(fit.per_agent_q);
  fit.loss = weighted_sse(fit.q_tot, payoff.values(), Tensor(payoff.size(), 1.0));
  fit.resq = std::move(parts);
  return fit;
}

}  // namespace detail

/// Zero-loss ResQ fit that moves the greedy action off u~: Q_mon equals
/// Q_jt(u~) at u~ and max Q_jt + delta elsewhere.
inline std::optional<FactorizedFit> resq_leave_fit(const JointPayoff& payoff, const JointAction& tilde_u,
                                                   double delta = 1.0) {
  const Shape& s = payoff.shape();
  if (s.size() == 1) return std::nullopt;
  std::vector<std::vector<double>> q(s.n_agents());
  for (int i = 0; i < s.n_agents(); ++i) {
    q[i].assign(s.count(i), 1.0);
    q[i][tilde_u[i]] = s.count(i) > 1 ? 0.0 : 1.0;
  }
  Tensor q_mon(payoff.size(), payoff.max_value() + delta);
  q_mon[payoff.joint_index(tilde_u)] = payoff.at(tilde_u);
  return detail::assemble_resq(payoff, tilde_u, std::move(q), std::move(q_mon));
}

/// Zero-loss ResQ fit keeping the greedy action at u~ (Q_mon == Q_jt(u~));
/// exists exactly when u~ is a maximiser.
inline std::optional<FactorizedFit> resq_stay_fit(const JointPayoff& payoff, const JointAction& tilde_u) {
  if (payoff.at(tilde_u) != payoff.max_value()) return std::nullopt;
  const Shape& s = payoff.shape();
  std::vector<std::vector<double>> q(s.n_agents());
  for (int i = 0; i < s.n_agents(); ++i) {
    q[i].assign(s.count(i), 0.0);
    q[i][tilde_u[i]] = 1.0;
  }
  return detail::assemble_resq(payoff, tilde_u, std::move(q), Tensor(payoff.size(), payoff.at(tilde_u)));
}

/// Zero-loss ResQ fit steering the greedy action to `target` while u~ is a
/// maximiser: Q_mon == max Q_jt except max Q_jt + delta at the target.
inline FactorizedFit resq_redirect_fit(const JointPayoff& payoff, const JointAction& tilde_u, const JointAction& target,
                                       double delta = 1.0) {
  if (payoff.at(tilde_u) != payoff.max_value()) throw InvalidInput("redirect construction needs u~ in argmax");
  if (target == tilde_u) throw InvalidInput("redirect target must differ from u~");
  const Shape& s = payoff.shape();
  std::vector<std::vector<double>> q(s.n_agents());
  for (int i = 0; i < s.n_agents(); ++i) {
    q[i].assign(s.count(i), 0.0);
    q[i][target[i]] = 1.0;
  }
  Tensor q_mon(payoff.size(), payoff.max_value());
  q_mon[payoff.joint_index(target)] += delta;
  return detail::assemble_resq(payoff, tilde_u, std::move(q), std::move(q_mon));
}

struct ResqResult {
  FactorizedFit fit;
  std::optional<FactorizedFit> alternative;
};

/// Returns the greedy-preserving zero-loss fit when one exists (u~ in argmax),
/// with the greedy-moving fit as the alternative; otherwise the moving fit alone.
/// ResQ fits are exact, so the visitation policy does not change them.
inline ResqResult fit_resq(const JointPayoff& payoff, const JointAction& tilde_u, const JointPolicy& policy = {}) {
  policy.validate(payoff.shape());
  payoff.joint_index(tilde_u);
  auto stay = resq_stay_fit(payoff, tilde_u);
  auto leave = resq_leave_fit(payoff, tilde_u);
  if (stay) return {std::move(*stay), std::move(leave)};
  return {std::move(*leave), std::nullopt};
}

}  // namespace factorlab
