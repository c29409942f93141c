#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "fitters.hpp"
#include "stability.hpp"

namespace factorlab {

struct RoundState {
  int k = 1;
  JointAction prev_greedy;
  Tensor target;
  FactorizedFit fit;
  JointAction greedy;
  /// Epsilon-greedy planning only: the round's dynamics cycled, and `greedy`
  /// is the action the cycle returned to.
  bool cycled = false;
};

struct MultiRoundResult {
  std::vector<RoundState> rounds;
  /// 1-based round at which improvement failed, or the last round run.
  int termination_round = 0;
  bool early_terminated = false;
  JointAction output;
  std::vector<bool> improvement_flags;
  /// True when the round fits used policy-free (uniform) weights.
  bool uniform_weighting = true;
};

/// max{q_hat(u) - q_hat(prev), 0} pointwise.
inline Tensor clipped_target(const JointPayoff& q_hat, const JointAction& prev_greedy) {
  const double base = q_hat.at(prev_greedy);
  Tensor t(q_hat.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::max(q_hat[i] - base, 0.0);
  return t;
}

struct MrvfPlanConfig {
  int rounds = 3;
  /// Uniform plans analytically; centralized epsilon-greedy references each
  /// round's policy at that round's own greedy action.
  PolicyKind policy = PolicyKind::Uniform;
  double epsilon = 0.01;
  /// u0; empty means all zeros.
  JointAction default_action;
  int max_transition_steps = 50;
  FitConfig fit;
};

namespace detail {

inline JointAction pick_greedy(const ActionSet& greedy, const JointAction& prefer) {
  return contains(greedy, prefer) ? prefer : greedy.front();
}

inline JointAction default_action_for(const Shape& shape, const JointAction& configured) {
  if (configured.empty()) return JointAction(shape.n_agents(), 0);
  shape.index(configured);
  return configured;
}

struct PlannedRound {
  FactorizedFit fit;
  JointAction greedy;
  bool cycled = false;
};

/// One round's fit: under uniform weights the global ideal-QMIX optimum, under
/// epsilon-greedy the end of the greedy dynamics started at `start`.
inline PlannedRound plan_round(const JointPayoff& target, const JointAction& start, const MrvfPlanConfig& cfg) {
  if (cfg.policy == PolicyKind::Uniform) {
    auto fits = ideal_qmix_minimizers(target, JointPolicy::uniform(), cfg.fit);
    for (auto& f : fits)
      if (contains(f.greedy_set, start)) return {f, start, false};
    return {fits.front(), fits.front().greedy_set.front(), false};
  }
  const JointPolicy pi = cfg.policy == PolicyKind::CentralizedEpsGreedy
                             ? JointPolicy::centralized(cfg.epsilon, start)
                             : JointPolicy::decentralized(cfg.epsilon, start);
  auto trace = iterate_transitions(Scheme::IdealQMIX, target, start, pi, cfg.fit, cfg.max_transition_steps);
  const JointAction chosen = trace.final_action();
  const bool cycled = !trace.terminated;
  for (const auto& f : trace.steps.back().result.fits)
    if (contains(f.greedy_set, chosen)) return {f, chosen, cycled};
  return {trace.steps.back().result.fits.front(), chosen, cycled};
}

}  // namespace detail

inline MultiRoundResult mrvf_plan(const JointPayoff& q_hat, const MrvfPlanConfig& cfg = {}) {
  if (cfg.rounds < 1) throw InvalidInput("rounds must be at least 1");
  MultiRoundResult res;
  res.uniform_weighting = cfg.policy == PolicyKind::Uniform;
  JointAction prev = detail::default_action_for(q_hat.shape(), cfg.default_action);
  double prev_value = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= cfg.rounds; ++k) {
    RoundState rs;
    rs.k = k;
    rs.prev_greedy = prev;
    rs.target = k == 1 ? q_hat.values() : clipped_target(q_hat, prev);
    const JointPayoff target(q_hat.action_counts(), rs.target, "round" + std::to_string(k));
    auto planned = detail::plan_round(target, prev, cfg);
    rs.fit = std::move(planned.fit);
    rs.greedy = planned.greedy;
    rs.cycled = planned.cycled;
    const JointAction greedy = rs.greedy;
    const bool improved = q_hat.at(greedy) > prev_value;
    res.improvement_flags.push_back(improved);
    res.rounds.push_back(std::move(rs));
    res.termination_round = k;
    if (!improved) {
      res.early_terminated = true;
      res.output = prev;
      return res;
    }
    prev = greedy;
    prev_value = q_hat.at(greedy);
  }
  res.output = prev;
  return res;
}

inline JointAction mrvf_single_round_ablation(const JointPayoff& q_hat, const FitConfig& config = {}) {
  MrvfPlanConfig cfg;
  cfg.rounds = 1;
  cfg.fit = config;
  return mrvf_plan(q_hat, cfg).output;
}

struct ImprovementCheck {
  bool ok = true;
  /// 1-based round of the first violation.
  std::optional<int> first_violation;
};

/// Every round k > 1 whose predecessor is not optimal must strictly improve on it.
inline ImprovementCheck strict_improvement_check(const MultiRoundResult& result, const JointPayoff& q_hat) {
  const double best = q_hat.max_value();
  ImprovementCheck out;
  for (std::size_t k = 1; k < result.rounds.size(); ++k) {
    const double before = q_hat.at(result.rounds[k - 1].greedy);
    if (before == best) continue;
    if (!(q_hat.at(result.rounds[k].greedy) > before)) {
      out.ok = false;
      out.first_violation = static_cast<int>(k) + 1;
      return out;
    }
  }
  return out;
}

/// An optimal action appears within |U| + 1 rounds. A trace that stopped
/// short of that many rounds without early termination cannot violate the
/// bound yet and passes.
inline bool theorem_5_1_bound_check(const MultiRoundResult& result, const JointPayoff& q_hat) {
  if (!strict_improvement_check(result, q_hat).ok)
    throw ContractError("bound check requires a trace satisfying strict improvement");
  const std::size_t bound = q_hat.size() + 1;
  const double best = q_hat.max_value();
  for (std::size_t k = 0; k < result.rounds.size() && k < bound; ++k)
    if (q_hat.at(result.rounds[k].greedy) == best) return true;
  return result.rounds.size() < bound && !result.early_terminated;
}

/// First 1-based round whose greedy action is optimal.
inline std::optional<int> first_optimal_round(const MultiRoundResult& result, const JointPayoff& q_hat) {
  const double best = q_hat.max_value();
  for (std::size_t k = 0; k < result.rounds.size(); ++k)
    if (q_hat.at(result.rounds[k].greedy) == best) return static_cast<int>(k) + 1;
  return std::nullopt;
}

/// Tabular joint action values indexed by (state, joint action).
struct QhatTable {
  std::size_t n_states = 1;
  std::size_t n_actions = 0;
  Tensor values;
  std::vector<long long> visit_counts;

  QhatTable() = default;
  QhatTable(std::size_t states, std::size_t actions, double init = 0.0)
      : n_states(states), n_actions(actions), values(states * actions, init), visit_counts(states * actions, 0) {}

  double& at(std::size_t s, std::size_t a) { return values[s * n_actions + a]; }
  double at(std::size_t s, std::size_t a) const { return values[s * n_actions + a]; }
};

struct Transition {
  std::size_t state = 0;
  std::size_t action = 0;
  double reward = 0.0;
  bool terminal = true;
  std::size_t next_state = 0;
  /// Index of the next state's final (greedy) joint action.
  std::size_t next_action = 0;
};

inline void td_update_qjt(QhatTable& table, const Transition& t, double gamma, double lr) {
  if (t.state >= table.n_states || t.action >= table.n_actions) throw InvalidAction("transition index out of range");
  double target = t.reward;
  if (!t.terminal) {
    if (t.next_state >= table.n_states || t.next_action >= table.n_actions)
      throw InvalidAction("next transition index out of range");
    target += gamma * table.at(t.next_state, t.next_action);
  }
  double& v = table.at(t.state, t.action);
  v += lr * (target - v);
  ++table.visit_counts[t.state * table.n_actions + t.action];
}

struct TrainConfig {
  int max_rounds = 3;
  double p = 0.2;
  double eps_start = 1.0;
  double eps_final = 0.05;
  long long eps_anneal_steps = 25'000;
  double lr = 0.1;
  double gamma = 0.99;
  long long total_steps = 50'000;
  /// Steps between refits of the per-round factorizations.
  long long refit_interval = 500;
  long long eval_interval = 5'000;
  unsigned long long seed = 0;
  FitConfig fit;

  void validate() const {
    if (max_rounds < 1) throw InvalidInput("max_rounds must be at least 1");
    if (!(p >= 0 && p <= 1)) throw InvalidInput("p must lie in [0,1]");
    if (!(eps_start >= 0 && eps_start <= 1 && eps_final >= 0 && eps_final <= 1))
      throw InvalidInput("epsilon schedule endpoints must lie in [0,1]");
    if (!(gamma > 0 && gamma <= 1)) throw InvalidInput("gamma must lie in (0,1]");
    if (!(lr > 0 && lr <= 1)) throw InvalidInput("learning rate must lie in (0,1]");
    if (total_steps < 0 || refit_interval < 1 || eval_interval < 1 || eps_anneal_steps < 0)
      throw InvalidInput("step counts must be positive");
  }

  double epsilon_at(long long step) const {
    if (eps_anneal_steps == 0 || step >= eps_anneal_steps) return eps_final;
    return eps_start + (eps_final - eps_start) * static_cast<double>(step) / static_cast<double>(eps_anneal_steps);
  }
};

struct TrainLogRow {
  long long step = 0;
  JointAction eval_action;
  double eval_return = 0.0;
  /// Fraction of recent executed actions that were round k's greedy (index k-1).
  std::vector<double> round_proportions;
};

struct TrainResult {
  QhatTable q_hat;
  /// Per round, the factorization keyed by the previous round's greedy joint index.
  std::vector<std::map<std::size_t, FactorizedFit>> round_fits;
  MultiRoundResult evaluation;
  std::vector<TrainLogRow> log;
  /// Executed-action sources over the whole run.
  std::vector<long long> executed_from_round;
  long long executed_output = 0;
  long long executed_random = 0;
};

namespace detail {

struct RoundGreedy {
  std::vector<JointAction> greedy;
  MultiRoundResult result;
};

/// Forward pass over the learned tables with early termination measured on q_hat.
inline RoundGreedy mrvf_forward(const Shape& shape, const Tensor& q_row,
                                const std::vector<std::map<std::size_t, FactorizedFit>>& fits,
                                const std::vector<std::map<std::size_t, JointAction>>& greedy_of,
                                const JointAction& u0) {
  RoundGreedy out;
  JointAction prev = u0;
  double prev_value = -std::numeric_limits<double>::infinity();
  bool stopped = false;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    const std::size_t key = shape.index(prev);
    auto it = greedy_of[k].find(key);
    const JointAction g = it == greedy_of[k].end() ? prev : it->second;
    out.greedy.push_back(g);
    if (stopped) continue;
    RoundState rs;
    rs.k = static_cast<int>(k) + 1;
    rs.prev_greedy = prev;
    auto fit_it = fits[k].find(key);
    if (fit_it != fits[k].end()) rs.fit = fit_it->second;
    rs.greedy = g;
    const double value = q_row[shape.index(g)];
    const bool improved = value > prev_value;
    out.result.improvement_flags.push_back(improved);
    out.result.rounds.push_back(std::move(rs));
    out.result.termination_round = static_cast<int>(k) + 1;
    if (!improved) {
      out.result.early_terminated = true;
      stopped = true;
      continue;
    }
    prev = g;
    prev_value = value;
  }
  out.result.output = prev;
  out.result.uniform_weighting = false;
  return out;
}

}  // namespace detail

/// Tabular MRVF training on a one-step game: exploration picks a random
/// round's greedy with probability p and otherwise acts epsilon-greedily
/// around the early-terminated output; the per-round factorizations are
/// refit periodically on targets built from the learned Q_hat.
inline TrainResult mrvf_train_one_step(const JointPayoff& game, const TrainConfig& cfg) {
  cfg.validate();
  const Shape& shape = game.shape();
  const std::size_t K = static_cast<std::size_t>(cfg.max_rounds);
  const JointAction u0(shape.n_agents(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_round(0, K - 1);

  TrainResult out;
  out.q_hat = QhatTable(1, shape.size());
  out.round_fits.assign(K, {});
  out.executed_from_round.assign(K, 0);
  std::vector<std::map<std::size_t, JointAction>> greedy_of(K);
  std::vector<long long> window(K, 0);
  long long window_total = 0;

  auto refit = [&](double eps) {
    const JointPayoff q(shape.counts(), out.q_hat.values);
    JointAction prev = u0;
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t key = shape.index(prev);
      const JointAction current = greedy_of[k].count(key) ? greedy_of[k][key] : prev;
      const Tensor t = k == 0 ? q.values() : clipped_target(q, prev);
      const JointPayoff target(shape.counts(), t);
      const JointPolicy pi = JointPolicy::centralized(std::max(eps, 1e-3), current);
      auto step = transition_step(Scheme::IdealQMIX, target, current, pi, cfg.fit);
      const JointAction next = detail::pick_greedy(step.greedy, current);
      for (const auto& f : step.fits)
        if (contains(f.greedy_set, next)) {
          out.round_fits[k][key] = f;
          break;
        }
      greedy_of[k][key] = next;
      prev = next;
    }
  };

  for (long long step = 0; step < cfg.total_steps; ++step) {
    const double eps = cfg.epsilon_at(step);
    if (step % cfg.refit_interval == 0) refit(eps);
    auto fwd = detail::mrvf_forward(shape, out.q_hat.values, out.round_fits, greedy_of, u0);
    JointAction u;
    if (coin(rng) < cfg.p) {
      const std::size_t k = pick_round(rng);
      u = fwd.greedy[k];
      ++out.executed_from_round[k];
      ++window[k];
    } else if (coin(rng) < eps) {
      u = shape.deindex(std::uniform_int_distribution<std::size_t>(0, shape.size() - 1)(rng));
      ++out.executed_random;
    } else {
      u = fwd.result.output;
      ++out.executed_output;
      ++window[static_cast<std::size_t>(fwd.result.early_terminated ? fwd.result.termination_round - 2
                                                                    : fwd.result.termination_round - 1)];
    }
    ++window_total;
    td_update_qjt(out.q_hat, Transition{0, shape.index(u), game.at(u), true, 0, 0}, cfg.gamma, cfg.lr);

    if ((step + 1) % cfg.eval_interval == 0 || step + 1 == cfg.total_steps) {
      auto eval = detail::mrvf_forward(shape, out.q_hat.values, out.round_fits, greedy_of, u0);
      TrainLogRow row;
      row.step = step + 1;
      row.eval_action = eval.result.output;
      row.eval_return = game.at(eval.result.output);
      for (std::size_t k = 0; k < K; ++k)
        row.round_proportions.push_back(window_total ? static_cast<double>(window[k]) / window_total : 0.0);
      std::fill(window.begin(), window.end(), 0);
      window_total = 0;
      out.log.push_back(std::move(row));
    }
  }
  out.evaluation = detail::mrvf_forward(shape, out.q_hat.values, out.round_fits, greedy_of, u0).result;
  return out;
}

}  // namespace factorlab
