#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fitters.hpp"
#include "qplex.hpp"

namespace factorlab {

enum class StabilityClass { Strong, Weak, Unstable, StableCandidate };

inline std::string to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::Strong:
      return "Strong";
    case StabilityClass::Weak:
      return "Weak";
    case StabilityClass::Unstable:
      return "Unstable";
    case StabilityClass::StableCandidate:
      return "StableCandidate";
  }
  return "?";
}

struct StabilityReport {
  JointAction candidate;
  StabilityClass classification = StabilityClass::Unstable;
  double min_loss = 0;
  std::optional<FactorizedFit> witness_stay;
  std::optional<FactorizedFit> witness_leave;

  bool stable() const { return classification != StabilityClass::Unstable; }
};

struct TransitionResult {
  std::vector<FactorizedFit> fits;
  ActionSet greedy;
};

struct TraceStep {
  JointAction tilde_u;
  TransitionResult result;
  JointAction chosen_next;
};

struct TransitionTrace {
  Scheme scheme = Scheme::IdealQMIX;
  JointAction start;
  std::vector<TraceStep> steps;
  bool terminated = false;
  bool step_limit_hit = false;
  /// The dynamics revisited an earlier action without settling.
  bool cycle_detected = false;

  const JointAction& final_action() const { return steps.back().chosen_next; }
};

/// Local ideal-QMIX search: alternate an isotonic solve under fixed orders
/// with re-sorting each agent's actions by the fitted slice means.
inline FactorizedFit fit_ideal_qmix_local(const Shape& shape, const Tensor& target, const Tensor& w,
                                          const FitConfig& config, Scheme scheme = Scheme::IdealQMIX) {
  const int n = shape.n_agents();
  double wmax = 0;
  for (double v : w) wmax = std::max(wmax, v);
  Tensor we(w);
  for (double& v : we) v = std::max(v, 1e-12 * wmax);
  auto sort_by_means = [&](const Tensor& x) {
    std::vector<std::vector<int>> orders(n);
    for (int i = 0; i < n; ++i) {
      std::vector<double> mean(shape.count(i), 0.0), mass(shape.count(i), 0.0);
      for (std::size_t idx = 0; idx < shape.size(); ++idx) {
        const int a = shape.component(idx, i);
        mean[a] += we[idx] * x[idx];
        mass[a] += we[idx];
      }
      orders[i].resize(shape.count(i));
      std::iota(orders[i].begin(), orders[i].end(), 0);
      std::stable_sort(orders[i].begin(), orders[i].end(),
                       [&](int a, int b) { return mean[a] / mass[a] < mean[b] / mass[b]; });
    }
    return orders;
  };
  auto orders = sort_by_means(target);
  Tensor x;
  int it = 0;
  bool converged = false;
  for (; it < config.max_iters; ++it) {
    x = isotonic_regression(target, we, lattice_edges(shape, orders));
    auto next = sort_by_means(x);
    if (next == orders) {
      converged = true;
      break;
    }
    orders = std::move(next);
  }
  FactorizedFit fit;
  fit.scheme = scheme;
  const double tol = tie_tolerance(target, config.tolerance);
  fit.per_agent_q = detail::slice_ranks(shape, x, orders, tol);
  fit.greedy_set = greedy_from_agents(fit.per_agent_q);
  fit.loss = weighted_sse(x, target, w);
  fit.q_tot = std::move(x);
  fit.orders = std::move(orders);
  fit.backend = Backend::ProjectedGradient;
  fit.converged = converged;
  fit.iterations = it + 1;
  return fit;
}

namespace detail {

inline QplexParams default_qplex_init(const Shape& shape, const JointAction& ref, double scale) {
  QplexParams p;
  for (int i = 0; i < shape.n_agents(); ++i) {
    p.q.emplace_back(shape.count(i), 0.0);
    p.q.back()[ref[i]] = scale;
    p.w.emplace_back(shape.size(), 1.0);
  }
  return p;
}

}  // namespace detail

/// Minimise the scheme's loss with the gradient-free action fixed at u~ and
/// return the minimisers found together with the union of their greedy sets.
inline TransitionResult transition_step(Scheme scheme, const JointPayoff& payoff, const JointAction& tilde_u,
                                        const JointPolicy& policy, const FitConfig& config) {
  payoff.joint_index(tilde_u);
  const JointPolicy pi = policy.with_reference(tilde_u);
  TransitionResult out;
  switch (scheme) {
    case Scheme::VDN:
      out.fits.push_back(fit_vdn(payoff, pi));
      break;
    case Scheme::IdealQMIX:
      if (config.backend == Backend::ProjectedGradient)
        out.fits.push_back(fit_ideal_qmix_local(payoff.shape(), payoff.values(), weights(pi, payoff.shape()), config));
      else
        out.fits = ideal_qmix_minimizers(payoff, pi, config);
      break;
    case Scheme::WQMIX:
      if (config.backend == Backend::ProjectedGradient) {
        Tensor w = weights(pi, payoff.shape());
        const Tensor wq = wqmix_weight_tensor(payoff, tilde_u, config.alpha, config.wqmix_strict);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] *= wq[i];
        out.fits.push_back(fit_ideal_qmix_local(payoff.shape(), payoff.values(), w, config, Scheme::WQMIX));
        out.fits.back().wqmix_weights = wq;
      } else {
        out.fits = wqmix_minimizers(payoff, tilde_u, pi, config);
      }
      break;
    case Scheme::ResQ: {
      auto r = fit_resq(payoff, tilde_u, pi);
      out.fits.push_back(std::move(r.fit));
      if (r.alternative) out.fits.push_back(std::move(*r.alternative));
      break;
    }
    case Scheme::QPLEX: {
      double scale = 1;
      for (double v : payoff.values()) scale = std::max(scale, std::abs(v));
      auto init = detail::default_qplex_init(payoff.shape(), tilde_u, scale);
      auto res =
          detail::qplex_descend(payoff, weights(pi, payoff.shape()), init, tilde_u, config.qplex_tol, config.max_iters);
      FactorizedFit fit;
      fit.scheme = Scheme::QPLEX;
      fit.per_agent_q = res.params.q;
      fit.q_tot = qplex_q_tot(payoff.shape(), res.params, tilde_u);
      fit.loss = res.loss;
      fit.greedy_set = greedy_from_agents(fit.per_agent_q);
      fit.qplex_weights = res.params.w;
      fit.backend = Backend::ProjectedGradient;
      fit.converged = res.converged;
      fit.iterations = res.iterations;
      out.fits.push_back(std::move(fit));
      break;
    }
  }
  for (const auto& f : out.fits) out.greedy.insert(out.greedy.end(), f.greedy_set.begin(), f.greedy_set.end());
  canonicalize(out.greedy);
  return out;
}

/// Follows the greedy-action dynamics from `start`, preferring a
/// self-transition and otherwise the lexicographically smallest next action.
/// The choice rule is deterministic, so the trace stops at the first revisit.
inline TransitionTrace iterate_transitions(Scheme scheme, const JointPayoff& payoff, const JointAction& start,
                                           const JointPolicy& policy, const FitConfig& config, int max_steps) {
  if (max_steps < 1) throw InvalidInput("max_steps must be at least 1");
  TransitionTrace trace;
  trace.scheme = scheme;
  trace.start = start;
  JointAction cur = start;
  ActionSet visited{start};
  for (int k = 0; k < max_steps; ++k) {
    TraceStep step{cur, transition_step(scheme, payoff, cur, policy, config), {}};
    step.chosen_next = contains(step.result.greedy, cur) ? cur : step.result.greedy.front();
    const bool self = step.chosen_next == cur;
    cur = step.chosen_next;
    trace.steps.push_back(std::move(step));
    if (self) {
      trace.terminated = true;
      return trace;
    }
    if (std::find(visited.begin(), visited.end(), cur) != visited.end()) {
      trace.cycle_detected = true;
      return trace;
    }
    visited.push_back(cur);
  }
  trace.step_limit_hit = true;
  return trace;
}

inline StabilityReport classify_stable_point(Scheme scheme, const JointPayoff& payoff, const JointAction& candidate,
                                             const JointPolicy& policy, const FitConfig& config) {
  payoff.joint_index(candidate);
  StabilityReport rep;
  rep.candidate = candidate;
  if (scheme == Scheme::QPLEX) {
    auto search = qplex_candidate_search(payoff, candidate, policy.with_reference(candidate), config);
    rep.classification = search.stable_candidate ? StabilityClass::StableCandidate : StabilityClass::Unstable;
    if (search.witness) {
      rep.min_loss = search.witness->loss;
      if (search.stable_candidate) rep.witness_stay = std::move(search.witness);
    }
    return rep;
  }
  if (config.backend != Backend::ExhaustiveOrders && scheme != Scheme::ResQ && scheme != Scheme::VDN)
    throw CapabilityError("strong/weak classification needs the exhaustive backend");
  auto step = transition_step(scheme, payoff, candidate, policy, config);
  rep.min_loss = step.fits.front().loss;
  std::size_t stays = 0;
  for (auto& f : step.fits) {
    rep.min_loss = std::min(rep.min_loss, f.loss);
    if (contains(f.greedy_set, candidate)) {
      ++stays;
      if (!rep.witness_stay) rep.witness_stay = f;
    } else if (!rep.witness_leave) {
      rep.witness_leave = f;
    }
  }
  if (stays == step.fits.size())
    rep.classification = StabilityClass::Strong;
  else if (stays > 0)
    rep.classification = StabilityClass::Weak;
  else
    rep.classification = StabilityClass::Unstable;
  return rep;
}

inline std::vector<StabilityReport> enumerate_stable_points(Scheme scheme, const JointPayoff& payoff,
                                                            const JointPolicy& policy, const FitConfig& config) {
  std::vector<StabilityReport> out;
  for (const auto& u : payoff.shape().all_actions())
    out.push_back(classify_stable_point(scheme, payoff, u, policy, config));
  return out;
}

/// |Q_tot*(u~) - Q_jt(u~)| of the ideal-QMIX optimum under centralized
/// epsilon-greedy referenced at u~, for each epsilon.
inline std::vector<double> lemma_c1_convergence_check(const JointPayoff& payoff, const JointAction& tilde_u,
                                                      const std::vector<double>& epsilons,
                                                      const FitConfig& config = {}) {
  std::vector<double> gaps;
  const std::size_t ti = payoff.joint_index(tilde_u);
  for (double eps : epsilons) {
    if (!(eps > 0)) throw InvalidInput("epsilons must be strictly positive");
    auto fit = fit_ideal_qmix(payoff, JointPolicy::centralized(eps, tilde_u), config);
    gaps.push_back(std::abs(fit.q_tot[ti] - payoff[ti]));
  }
  return gaps;
}

/// Strictly decreasing, where two consecutive gaps that are both already
/// below `exact` count as decreasing.
inline bool gaps_decreasing(const std::vector<double>& gaps, double exact = 1e-9) {
  for (std::size_t k = 1; k < gaps.size(); ++k)
    if (!(gaps[k] < gaps[k - 1] || (gaps[k] <= exact && gaps[k - 1] <= exact))) return false;
  return true;
}

}  // namespace factorlab
