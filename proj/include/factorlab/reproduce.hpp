#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "games.hpp"
#include "mrvf.hpp"
#include "predator_prey.hpp"
#include "qplex.hpp"
#include "stability.hpp"

namespace factorlab {

struct SubCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  std::vector<SubCheck> checks;
  double seconds = 0.0;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const SubCheck& c) { return c.passed; });
  }
  void check(std::string what, bool ok, std::string detail = {}) {
    checks.push_back({std::move(what), ok, std::move(detail)});
  }
};

namespace detail {

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << std::fixed << v;
  return os.str();
}

inline std::string fmt(const Tensor& t, int prec = 3) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? " " : "") + fmt(t[i], prec);
  return s + "]";
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline Tensor flat(const std::vector<std::vector<double>>& rows) {
  Tensor t;
  for (const auto& r : rows) t.insert(t.end(), r.begin(), r.end());
  return t;
}

inline void runtime_check(CriterionResult& r, double seconds, double limit) {
  r.check("runtime < " + fmt(limit, 0) + " s", seconds < limit, fmt(seconds, 2) + " s");
}

template <class F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

inline CriterionResult check_table6() {
  CriterionResult r{1, "ideal QMIX optimum on the 3x3 climbing-style matrix (table6)", {}, 0};
  const auto& q = corpus_entry("table6_qjt");
  const JointPolicy pi = JointPolicy::uniform(true);
  const Tensor free_expected = detail::flat({{-8, -8, -8}, {-8, 1, 1}, {-8, 1, 5}});
  const Tensor fixed_expected = detail::flat({{8, -5, -5}, {-5, -5, -5}, {-5, -5, -5}});
  const double secs = detail::timed([&] {
    auto free = fit_ideal_qmix(q, pi);
    r.check("global loss 36.22 +- 0.05", std::abs(free.loss - 36.22) <= 0.05, detail::fmt(free.loss));
    const double d = detail::max_abs_diff(free.q_tot, free_expected);
    r.check("global Q_tot entrywise +- 0.05", d <= 0.05, detail::fmt(free.q_tot));
    auto fixed = fit_ideal_qmix_constrained(q, pi, {0, 0});
    r.check("greedy-(0,0) loss 45.56 +- 0.05", std::abs(fixed.loss - 45.56) <= 0.05, detail::fmt(fixed.loss));
    const double dc = detail::max_abs_diff(fixed.q_tot, fixed_expected);
    r.check("greedy-(0,0) Q_tot entrywise +- 0.05", dc <= 0.05, detail::fmt(fixed.q_tot));
  });
  detail::runtime_check(r, secs, 5);
  r.seconds = secs;
  return r;
}

inline CriterionResult check_table2() {
  CriterionResult r{2, "WQMIX on table2: optimum is not a stable point", {}, 0};
  const auto& q = corpus_entry("table2_qjt");
  const JointAction u_star{0, 0};
  const double secs = detail::timed([&] {
    auto fixed = fit_wqmix(q, q, u_star, 0.1, JointPolicy::uniform(), {}, u_star);
    r.check("greedy-(0,0) loss 7.0 +- 0.05", std::abs(fixed.loss - 7.0) <= 0.05, detail::fmt(fixed.loss));
    auto free = fit_wqmix(q, q, u_star, 0.1, JointPolicy::uniform());
    r.check("unconstrained loss 3.3 +- 0.05", std::abs(free.loss - 3.3) <= 0.05, detail::fmt(free.loss));
    r.check("unconstrained greedy excludes (0,0)", !contains(free.greedy_set, u_star),
            to_string(free.greedy_set.front()));
    for (double alpha : {0.05, 0.1, 0.5, 0.9}) {
      FitConfig cfg;
      cfg.alpha = alpha;
      auto rep = classify_stable_point(Scheme::WQMIX, q, u_star, JointPolicy::uniform(), cfg);
      r.check("(0,0) Unstable at alpha " + detail::fmt(alpha, 2), rep.classification == StabilityClass::Unstable,
              to_string(rep.classification));
    }
  });
  detail::runtime_check(r, secs, 10);
  r.seconds = secs;
  return r;
}

inline CriterionResult check_fig3_trace() {
  CriterionResult r{3, "WQMIX greedy-action trace from (0,2) on table6", {}, 0};
  const auto& q = corpus_entry("table6_qjt");
  r.seconds = detail::timed([&] {
    FitConfig cfg;
    cfg.alpha = 0.1;
    auto trace = iterate_transitions(Scheme::WQMIX, q, {0, 2}, JointPolicy::uniform(), cfg, 5);
    std::string path = to_string(trace.start);
    for (const auto& s : trace.steps) path += " -> " + to_string(s.chosen_next);
    r.check("first transition lands on (2,2)", trace.steps.front().chosen_next == JointAction{2, 2}, path);
    r.check("trace terminates at (0,0) within 5 steps", trace.terminated && trace.final_action() == JointAction{0, 0},
            path + (trace.cycle_detected ? " (cycle)" : ""));
  });
  return r;
}

inline CriterionResult check_table4() {
  CriterionResult r{4, "multi-round plan on table6 with exact q_hat", {}, 0};
  const auto& q = corpus_entry("table6_qjt");
  r.seconds = detail::timed([&] {
    auto plan = mrvf_plan(q);
    r.check("three rounds recorded", plan.rounds.size() == 3, std::to_string(plan.rounds.size()));
    if (plan.rounds.size() < 3) return;
    r.check("round-1 target equals payoff", plan.rounds[0].target == q.values());
    r.check("round-1 greedy (2,2)", plan.rounds[0].greedy == JointAction{2, 2}, to_string(plan.rounds[0].greedy));
    const Tensor t2 = detail::flat({{3, 0, 0}, {0, 0, 0}, {0, 0, 0}});
    r.check("round-2 target exact", plan.rounds[1].target == t2, detail::fmt(plan.rounds[1].target));
    r.check("round-2 greedy (0,0)", plan.rounds[1].greedy == JointAction{0, 0}, to_string(plan.rounds[1].greedy));
    r.check("round-3 improvement fails", !plan.improvement_flags[2] && plan.termination_round == 3);
    r.check("output (0,0)", plan.output == JointAction{0, 0}, to_string(plan.output));
  });
  return r;
}

struct QplexColumn {
  JointAction greedy;
  std::vector<std::vector<double>> q;
  std::vector<std::vector<double>> w1, w2;
};

inline std::vector<QplexColumn> table7_columns() {
  return {
      {{0, 0},
       {{5.23, 0.49, 0.33}, {2.77, 0.31, 0.37}},
       {{0.25, 1.51, 1.71}, {4.21, 0.48, 0.10}, {4.08, 0.59, 0.09}},
       {{2.01, 8.13, 8.34}, {0.85, 1.12, 3.12}, {4.62, 2.08, 1.05}}},
      {{1, 1},
       {{1.42, 2.41, 1.09}, {1.82, 3.09, 0.70}},
       {{0.00, 17.64, 5.01}, {8.53, 7.65, 1.41}, {5.30, 4.16, 0.15}},
       {{0.00, 9.07, 5.22}, {13.71, 7.94, 2.29}, {8.23, 3.76, 0.13}}},
      {{2, 2},
       {{1.38, 0.68, 3.09}, {1.29, 0.66, 3.41}},
       {{0.00, 6.70, 10.86}, {3.35, 0.26, 2.71}, {5.10, 1.03, 1.92}},
       {{0.00, 2.58, 2.50}, {4.93, 1.05, 0.23}, {8.72, 2.36, 1.47}}},
  };
}

inline std::vector<QplexColumn> table8_columns() {
  return {
      {{0, 0},
       {{3.86, 0.44, 0.54}, {4.14, 1.85, 0.73}},
       {{0.94, 1.31, 1.10}, {2.34, 0.83, 0.91}, {2.41, 1.49, 0.83}},
       {{1.44, 3.50, 2.34}, {0.76, 0.95, 1.43}, {0.66, 1.34, 0.07}}},
      {{1, 1},
       {{2.59, 2.75, 1.11}, {2.57, 2.75, 0.99}},
       {{0.00, 33.25, 1.48}, {8.82, 13.44, 0.44}, {3.00, 3.35, 0.16}},
       {{0.00, 19.52, 2.99}, {31.74, 20.50, 3.13}, {3.35, 1.73, 0.14}}},
      {{2, 2},
       {{3.06, 0.82, 3.35}, {2.86, 0.57, 3.15}},
       {{0.00, 2.91, 22.31}, {2.13, 0.54, 2.57}, {4.35, 1.53, 14.12}},
       {{0.00, 2.20, 0.10}, {3.89, 0.83, 1.94}, {22.74, 2.53, 6.15}}},
  };
}

inline CriterionResult check_qplex_tables() {
  CriterionResult r{5, "QPLEX stationary points on table7 and table8", {}, 0};
  const double secs = detail::timed([&] {
    for (const auto& [key, cols] : {std::pair{std::string("table7_qjt"), table7_columns()},
                                    std::pair{std::string("table8_qjt"), table8_columns()}}) {
      const auto& payoff = corpus_entry(key);
      for (const auto& c : cols) {
        QplexParams init{c.q, {detail::flat(c.w1), detail::flat(c.w2)}};
        const std::string label = key + " column " + to_string(c.greedy);
        try {
          auto fit = fit_qplex(payoff, JointPolicy::uniform(), init, {}, c.greedy);
          r.check(label + " converges to greedy " + to_string(c.greedy), fit.greedy_set == ActionSet{c.greedy},
                  "greedy " + to_string(fit.greedy_set.front()) + ", loss " + detail::fmt(fit.loss) + ", " +
                      std::to_string(fit.iterations) + " iterations");
        } catch (const NonConvergence& e) {
          r.check(label + " converges", false, e.what());
        }
      }
    }
    const auto& t8 = corpus_entry("table8_qjt");
    auto reports = enumerate_stable_points(Scheme::QPLEX, t8, JointPolicy::uniform(), FitConfig{});
    ActionSet flagged;
    for (const auto& rep : reports)
      if (rep.classification == StabilityClass::StableCandidate) flagged.push_back(rep.candidate);
    std::string listed;
    for (const auto& a : flagged) listed += to_string(a);
    r.check("table8 flags exactly (0,0),(1,1),(2,2)", flagged == ActionSet{{0, 0}, {1, 1}, {2, 2}}, listed);
    const double best = t8.max_value();
    const auto suboptimal =
        std::count_if(flagged.begin(), flagged.end(), [&](const JointAction& a) { return t8.at(a) < best; });
    r.check("two flagged actions are suboptimal", suboptimal == 2, std::to_string(suboptimal));
  });
  detail::runtime_check(r, secs, 60);
  r.seconds = secs;
  return r;
}

inline CriterionResult check_resq() {
  CriterionResult r{6, "ResQ: optimum weakly stable, every other action unstable", {}, 0};
  const double secs = detail::timed([&] {
    const auto& q = corpus_entry("table5_qjt");
    auto fit = resq_redirect_fit(q, {0, 0}, {1, 2});
    const Tensor mon = detail::flat({{8, 8, 8}, {8, 8, 9}, {8, 8, 8}});
    Tensor wq(q.size());
    for (std::size_t i = 0; i < wq.size(); ++i) wq[i] = fit.resq->w_r[i] * fit.resq->q_r[i];
    r.check("table5 Q_mon exact", fit.resq->q_mon == mon, detail::fmt(fit.resq->q_mon));
    r.check("table5 w_r*Q_r zero at u~ and nonpositive", wq[0] == 0.0 && *std::max_element(wq.begin(), wq.end()) <= 0.0,
            detail::fmt(wq));
    r.check("table5 parts sum exactly to Q_jt", fit.q_tot == q.values());
    r.check("table5 greedy moves to (1,2)", fit.greedy_set == ActionSet{{1, 2}});

    int weak_ok = 0, unstable_ok = 0, leave_ok = 0, others = 0;
    for (unsigned long long seed = 0; seed < 20; ++seed) {
      const auto p = gen_uniform_payoff({3, 3}, 1000 + seed);
      const auto best = argmax_set(p);
      for (const auto& u : p.shape().all_actions()) {
        auto rep = classify_stable_point(Scheme::ResQ, p, u, JointPolicy::uniform(), {});
        if (contains(best, u))
          weak_ok += rep.classification == StabilityClass::Weak;
        else {
          ++others;
          unstable_ok += rep.classification == StabilityClass::Unstable;
        }
        auto leave = resq_leave_fit(p, u);
        leave_ok += leave && leave->loss <= 1e-20 && !contains(leave->greedy_set, u);
      }
    }
    r.check("u* Weak on 20 payoffs", weak_ok == 20, std::to_string(weak_ok) + "/20");
    r.check("every other action Unstable", unstable_ok == others,
            std::to_string(unstable_ok) + "/" + std::to_string(others));
    r.check("zero-loss leaving fit for every u~", leave_ok == 180, std::to_string(leave_ok) + "/180");
  });
  detail::runtime_check(r, secs, 30);
  r.seconds = secs;
  return r;
}

inline CriterionResult check_argmin_unstable() {
  CriterionResult r{7, "ideal QMIX, centralized eps=0.01: argmin actions unstable", {}, 0};
  r.seconds = detail::timed([&] {
    int total = 0, ok = 0;
    for (unsigned long long seed = 0; seed < 20; ++seed) {
      const auto p = gen_uniform_payoff({3, 3}, 2000 + seed);
      for (const auto& u : argmin_set(p)) {
        ++total;
        auto rep = classify_stable_point(Scheme::IdealQMIX, p, u, JointPolicy::centralized(0.01, u), {});
        ok += rep.classification == StabilityClass::Unstable;
      }
    }
    r.check("every argmin Unstable on 20 payoffs", ok == total && total >= 20,
            std::to_string(ok) + "/" + std::to_string(total));
  });
  return r;
}

inline CriterionResult check_limit_gap() {
  CriterionResult r{8, "ideal QMIX value at u~ approaches Q_jt(u~) as eps shrinks", {}, 0};
  r.seconds = detail::timed([&] {
    const std::vector<double> eps{0.5, 0.1, 0.01};
    int decreasing = 0, small = 0;
    std::string worst;
    for (unsigned long long seed = 0; seed < 10; ++seed) {
      const auto p = gen_uniform_payoff({3, 3}, 3000 + seed);
      std::mt19937_64 rng(3000 + seed);
      const JointAction u{std::uniform_int_distribution<int>(0, 2)(rng), std::uniform_int_distribution<int>(0, 2)(rng)};
      auto gaps = lemma_c1_convergence_check(p, u, eps);
      decreasing += gaps_decreasing(gaps);
      small += gaps.back() <= 0.05;
      if (!gaps_decreasing(gaps) || gaps.back() > 0.05) worst += " seed" + std::to_string(seed) + detail::fmt(gaps);
    }
    r.check("gaps strictly decreasing on 10 payoffs", decreasing == 10, std::to_string(decreasing) + "/10" + worst);
    r.check("gap <= 0.05 at eps 0.01", small == 10, std::to_string(small) + "/10");
  });
  return r;
}

inline CriterionResult check_risk_reward_plan() {
  CriterionResult r{9, "risk-reward generator and exact multi-round planning", {}, 0};
  const double secs = detail::timed([&] {
    for (int m = 3; m <= 5; ++m) {
      int structure = 0, reached = 0, improving = 0, bound = 0;
      for (unsigned long long seed = 0; seed < 100; ++seed) {
        const auto g = gen_risk_reward(2, m, seed);
        const auto& v = g.payoff.values();
        const auto positives = std::count_if(v.begin(), v.end(), [](double x) { return x > 0; });
        const bool in_range = std::all_of(v.begin(), v.end(), [](double x) { return std::abs(x) <= 10; });
        structure += positives == m && in_range;
        MrvfPlanConfig cfg;
        cfg.rounds = m + 1;
        auto plan = mrvf_plan(g.payoff, cfg);
        auto first = first_optimal_round(plan, g.payoff);
        reached += first && *first <= m;
        auto sic = strict_improvement_check(plan, g.payoff);
        improving += sic.ok;
        if (sic.ok) bound += theorem_5_1_bound_check(plan, g.payoff);
      }
      const std::string tag = " |U|=" + std::to_string(m);
      r.check(tag + " positive count and range", structure == 100, std::to_string(structure) + "/100");
      r.check(tag + " argmax within |U| rounds", reached == 100, std::to_string(reached) + "/100");
      r.check(tag + " strict improvement", improving == 100, std::to_string(improving) + "/100");
      r.check(tag + " round bound", bound == 100, std::to_string(bound) + "/100");
    }
  });
  detail::runtime_check(r, secs, 120);
  r.seconds = secs;
  return r;
}

inline CriterionResult check_training() {
  CriterionResult r{10, "tabular multi-round training on 3x3 risk-reward games", {}, 0};
  const double secs = detail::timed([&] {
    std::vector<double> returns;
    int optimal = 0, single_optimal = 0, trained_single_optimal = 0;
    for (unsigned long long seed = 0; seed < 10; ++seed) {
      const auto g = gen_risk_reward(2, 3, seed);
      TrainConfig cfg;
      cfg.seed = seed;
      auto trained = mrvf_train_one_step(g.payoff, cfg);
      const double nr = normalized_return(g.payoff, trained.evaluation.output);
      returns.push_back(nr);
      optimal += nr == 1.0;
      const JointPayoff learned(g.payoff.action_counts(), trained.q_hat.values);
      single_optimal += normalized_return(g.payoff, mrvf_single_round_ablation(learned)) == 1.0;
      TrainConfig one = cfg;
      one.max_rounds = 1;
      trained_single_optimal +=
          normalized_return(g.payoff, mrvf_train_one_step(g.payoff, one).evaluation.output) == 1.0;
    }
    std::vector<double> sorted = returns;
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[4] + sorted[5]);
    r.check("median normalized return >= 0.95", median >= 0.95, detail::fmt(median));
    r.check(">= 8/10 seeds reach 1.0", optimal >= 8, std::to_string(optimal) + "/10");
    r.check("single-round ablation on learned Q_hat hits fewer", single_optimal < optimal,
            std::to_string(single_optimal) + "/10 vs " + std::to_string(optimal) +
                "/10 (trained with one round: " + std::to_string(trained_single_optimal) + "/10)");
  });
  detail::runtime_check(r, secs, 600);
  r.seconds = secs;
  return r;
}

inline CriterionResult check_predator_prey_matrix() {
  CriterionResult r{11, "one-step predator-prey: non-capture stable points and recovery", {}, 0};
  r.seconds = detail::timed([&] {
    const JointAction non_capture{3, 3};
    auto rep = pp_limit_fit_check(-2.0, non_capture, {0.3, 0.1, 0.01});
    r.check("limit gaps decreasing", gaps_decreasing(rep.gaps), detail::fmt(rep.gaps));
    r.check("final gap <= 0.1", rep.gaps.back() <= 0.1, detail::fmt(rep.gaps.back()));
    const auto game = one_step_pp_matrix(-2.0);
    auto stab =
        classify_stable_point(Scheme::IdealQMIX, game, non_capture, JointPolicy::decentralized(0.01, non_capture), {});
    r.check("(3,3) stable at eps 0.01", stab.stable(), to_string(stab.classification));
    MrvfPlanConfig cfg;
    cfg.policy = PolicyKind::CentralizedEpsGreedy;
    cfg.epsilon = 0.01;
    cfg.default_action = non_capture;
    auto plan = mrvf_plan(game, cfg);
    auto first = first_optimal_round(plan, game);
    r.check("plan from (3,3) reaches (0,0) within 2 rounds", first && *first <= 2 && game.at(plan.output) == 10.0,
            "output " + to_string(plan.output));
  });
  return r;
}

struct EnvRunDigest {
  std::vector<std::uint64_t> ids;
  std::vector<double> rewards;
  bool operator==(const EnvRunDigest&) const = default;
};

/// Random-action episodes with each step checked against an independent
/// recomputation of the capture rules.
inline EnvRunDigest run_env_episodes(int episodes, unsigned long long seed, std::vector<std::string>& violations) {
  EnvRunDigest digest;
  PredatorPreyEnv env;
  const auto& cfg = env.config();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> act(0, kPpActions - 1);
  auto fail = [&](int ep, const std::string& what) {
    if (violations.size() < 10) violations.push_back("episode " + std::to_string(ep) + ": " + what);
  };
  for (int ep = 0; ep < episodes; ++ep) {
    auto s = env.reset(seed * 100003ULL + ep);
    digest.ids.push_back(s.id);
    while (!env.done()) {
      const auto pred_alive = env.predator_alive();
      const auto prey_alive = env.prey_alive();
      const auto prey_pos = env.prey();
      std::vector<int> a(cfg.n_predators);
      for (int& x : a) x = act(rng);
      auto out = env.step(a);
      digest.ids.push_back(out.state.id);
      digest.rewards.push_back(out.reward);

      double expected = 0;
      for (int j = 0; j < cfg.n_prey; ++j) {
        if (!prey_alive[j]) continue;
        int capturers = 0;
        for (int i = 0; i < cfg.n_predators; ++i)
          capturers += pred_alive[i] && a[i] == Capture && env.predators()[i] == prey_pos[j];
        if (capturers >= 2) {
          expected += 10.0;
          if (env.prey_alive()[j]) fail(ep, "captured prey not removed");
        } else {
          expected += capturers == 1 ? cfg.punishment : 0.0;
          if (!env.prey_alive()[j]) fail(ep, "prey removed without capture");
        }
      }
      if (out.reward != expected) fail(ep, "reward " + std::to_string(out.reward) + " != " + std::to_string(expected));
      if (out.reward != 10.0 * out.captures + cfg.punishment * out.punishments) fail(ep, "reward composition");
      if (env.prey_removed() > cfg.n_prey) fail(ep, "removed more prey than exist");
      for (int i = 0; i < cfg.n_predators; ++i) {
        const auto& c = env.predators()[i];
        if (c.x < 0 || c.y < 0 || c.x >= cfg.width || c.y >= cfg.height) fail(ep, "predator off grid");
        if (!env.predator_alive()[i]) {
          const auto& o = out.state.observations[i];
          if (std::any_of(o.begin(), o.end(), [](double v) { return v != 0.0; }))
            fail(ep, "removed agent observation not masked");
          if (pred_alive[i] == false) continue;
          if (a[i] != Capture) fail(ep, "predator removed without capturing");
        }
      }
      if (env.step_count() > cfg.episode_limit) fail(ep, "episode ran past its limit");
    }
  }
  return digest;
}

inline CriterionResult check_environment() {
  CriterionResult r{12, "predator-prey environment contract", {}, 0};
  r.seconds = detail::timed([&] {
    std::vector<std::string> v1, v2;
    auto d1 = run_env_episodes(1000, 12, v1);
    auto d2 = run_env_episodes(1000, 12, v2);
    std::string first = v1.empty() ? std::string("none") : v1.front();
    r.check("no invariant violations in 1000 episodes", v1.empty(), first);
    r.check("bit-identical rerun with the same seed", d1 == d2, std::to_string(d1.rewards.size()) + " steps");
  });
  return r;
}

inline const std::vector<std::pair<std::string, std::function<CriterionResult()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<CriterionResult()>>> all = {
      {"table6", check_table6},
      {"table2", check_table2},
      {"fig3", check_fig3_trace},
      {"table4", check_table4},
      {"qplex", check_qplex_tables},
      {"resq", check_resq},
      {"argmin", check_argmin_unstable},
      {"limit", check_limit_gap},
      {"riskreward", check_risk_reward_plan},
      {"train", check_training},
      {"predprey", check_predator_prey_matrix},
      {"env", check_environment},
  };
  return all;
}

}  // namespace factorlab
