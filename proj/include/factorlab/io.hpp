#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "games.hpp"
#include "mrvf.hpp"
#include "stability.hpp"

namespace factorlab {

using json = nlohmann::json;

inline json to_json(const JointPayoff& p) {
  return {{"shape", p.action_counts()}, {"values", p.values()}, {"label", p.label()}};
}

/// Accepts {"shape": [...], "values": [...]}, a 2-D {"matrix": [[...]]}, or a
/// generated game wrapping either under "payoff".
inline JointPayoff payoff_from_json(const json& j) {
  if (j.is_object() && j.contains("payoff")) return payoff_from_json(j.at("payoff"));
  try {
    std::string label = j.value("label", std::string{});
    if (j.contains("matrix")) return JointPayoff::matrix(j.at("matrix").get<std::vector<std::vector<double>>>(), label);
    return JointPayoff(j.at("shape").get<std::vector<int>>(), j.at("values").get<Tensor>(), label);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed payoff JSON: ") + e.what());
  }
}

inline json to_json(const JointPolicy& p) {
  json j{{"kind", to_string(p.kind)}, {"epsilon", p.epsilon}, {"normalized", p.normalized}};
  j["reference"] = p.reference ? json(*p.reference) : json(nullptr);
  return j;
}

inline JointPolicy policy_from_json(const json& j) {
  JointPolicy p;
  p.kind = policy_kind_from_string(j.value("kind", std::string("uniform")));
  p.epsilon = j.value("epsilon", 0.0);
  p.normalized = j.value("normalized", false);
  if (j.contains("reference") && !j.at("reference").is_null()) p.reference = j.at("reference").get<JointAction>();
  return p;
}

inline json to_json(const FactorizedFit& f) {
  json j{{"scheme", to_string(f.scheme)},
         {"per_agent_q", f.per_agent_q},
         {"q_tot", f.q_tot},
         {"loss", f.loss},
         {"greedy_set", f.greedy_set},
         {"orders", f.orders},
         {"backend", to_string(f.backend)},
         {"converged", f.converged},
         {"iterations", f.iterations}};
  if (f.wqmix_weights) j["wqmix_weights"] = *f.wqmix_weights;
  if (f.resq) j["resq"] = {{"q_mon", f.resq->q_mon}, {"q_r", f.resq->q_r}, {"w_r", f.resq->w_r}};
  if (f.qplex_weights) j["qplex_weights"] = *f.qplex_weights;
  return j;
}

inline json to_json(const StabilityReport& r) {
  json j{{"candidate", r.candidate}, {"classification", to_string(r.classification)}, {"min_loss", r.min_loss}};
  if (r.witness_stay) j["witness_stay"] = to_json(*r.witness_stay);
  if (r.witness_leave) j["witness_leave"] = to_json(*r.witness_leave);
  return j;
}

inline json to_json(const TransitionTrace& t) {
  json steps = json::array();
  for (const auto& s : t.steps) {
    json fits = json::array();
    for (const auto& f : s.result.fits) fits.push_back(to_json(f));
    steps.push_back(
        {{"tilde_u", s.tilde_u}, {"greedy", s.result.greedy}, {"chosen_next", s.chosen_next}, {"fits", fits}});
  }
  return {{"scheme", to_string(t.scheme)},
          {"start", t.start},
          {"steps", steps},
          {"terminated", t.terminated},
          {"step_limit_hit", t.step_limit_hit},
          {"cycle_detected", t.cycle_detected}};
}

inline json to_json(const MultiRoundResult& r) {
  json rounds = json::array();
  for (const auto& rs : r.rounds)
    rounds.push_back({{"k", rs.k},
                      {"prev_greedy", rs.prev_greedy},
                      {"target", rs.target},
                      {"fit", to_json(rs.fit)},
                      {"greedy", rs.greedy},
                      {"cycled", rs.cycled}});
  std::vector<int> flags(r.improvement_flags.begin(), r.improvement_flags.end());
  return {{"rounds", rounds},
          {"termination_round", r.termination_round},
          {"early_terminated", r.early_terminated},
          {"output", r.output},
          {"improvement_flags", flags},
          {"uniform_weighting", r.uniform_weighting}};
}

inline json to_json(const RiskRewardGame& g) {
  return {{"family", "riskreward"},     {"n_agents", g.n_agents},
          {"n_actions", g.n_actions},   {"reward_vectors", g.reward_vectors},
          {"bijections", g.bijections}, {"seed", g.seed},
          {"payoff", to_json(g.payoff)}};
}

inline std::string stability_csv(const std::vector<StabilityReport>& reports) {
  std::ostringstream os;
  os << "candidate,classification,min_loss\n";
  for (const auto& r : reports)
    os << '"' << to_string(r.candidate) << "\"," << to_string(r.classification) << ',' << r.min_loss << '\n';
  return os.str();
}

inline std::string trace_csv(const TransitionTrace& t) {
  std::ostringstream os;
  os << "step,tilde_u,greedy,chosen_next\n";
  for (std::size_t k = 0; k < t.steps.size(); ++k) {
    std::string g;
    for (const auto& a : t.steps[k].result.greedy) g += to_string(a);
    os << k + 1 << ",\"" << to_string(t.steps[k].tilde_u) << "\",\"" << g << "\",\""
       << to_string(t.steps[k].chosen_next) << "\"\n";
  }
  return os.str();
}

inline std::string train_log_csv(const TrainResult& r, const JointPayoff& game) {
  std::ostringstream os;
  const std::size_t K = r.round_fits.size();
  os << "step,eval_action,eval_return,normalized_return";
  for (std::size_t k = 1; k <= K; ++k) os << ",round" << k << "_proportion";
  os << '\n';
  for (const auto& row : r.log) {
    double nr = std::nan("");
    try {
      nr = normalized_return(game, row.eval_action);
    } catch (const DegenerateNormalization&) {
    }
    os << row.step << ",\"" << to_string(row.eval_action) << "\"," << row.eval_return << ',' << nr;
    for (double p : row.round_proportions) os << ',' << p;
    os << '\n';
  }
  return os.str();
}

struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  json config = json::object();
  unsigned long long seed = 0;
  std::vector<std::string> outputs;
  std::string tool_version = "0.1.0";
  double wall_clock_seconds = 0.0;
};

inline json to_json(const RunManifest& m) {
  return {{"command", m.command},
          {"inputs", m.inputs},
          {"config", m.config},
          {"seed", m.seed},
          {"outputs", m.outputs},
          {"tool_version", m.tool_version},
          {"wall_clock_seconds", m.wall_clock_seconds}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput("invalid JSON in " + path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << text;
}

}  // namespace factorlab
