#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "factorlab/factorlab.hpp"
#include "factorlab/reproduce.hpp"

namespace fl = factorlab;
namespace fs = std::filesystem;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCapability = 3;

struct SourceOpts {
  std::string corpus;
  std::string payoff_path;

  fl::JointPayoff load() const {
    if (!corpus.empty() && !payoff_path.empty()) throw fl::InvalidInput("give either --corpus or --payoff, not both");
    if (!corpus.empty()) return fl::corpus_entry(corpus);
    if (!payoff_path.empty()) return fl::payoff_from_json(fl::read_json_file(payoff_path));
    throw fl::InvalidInput("a payoff source is required (--corpus or --payoff)");
  }
  std::string describe() const { return corpus.empty() ? payoff_path : "corpus:" + corpus; }
};

struct PolicyOpts {
  std::string kind = "uniform";
  double epsilon = 0.1;
  bool normalized = false;

  fl::JointPolicy build() const {
    fl::JointPolicy p;
    p.kind = fl::policy_kind_from_string(kind);
    p.epsilon = epsilon;
    p.normalized = normalized;
    return p;
  }
};

struct OutputOpts {
  std::string out;
  std::string format = "json";
};

void add_source(CLI::App* cmd, SourceOpts& s) {
  cmd->add_option("--corpus", s.corpus, "Built-in payoff key (e.g. table6_qjt)");
  cmd->add_option("--payoff", s.payoff_path, "Payoff JSON file");
}

void add_policy(CLI::App* cmd, PolicyOpts& p) {
  cmd->add_option("--policy", p.kind, "uniform | cen_eps | dec_eps")->capture_default_str();
  cmd->add_option("--epsilon", p.epsilon, "Exploration rate for epsilon-greedy policies")->capture_default_str();
  cmd->add_flag("--normalized", p.normalized, "Uniform weight 1/|U| instead of 1");
}

void add_output(CLI::App* cmd, OutputOpts& o) {
  cmd->add_option("--out", o.out, "Output file (relative paths resolve against $FACTORLAB_OUT_DIR when set)");
  cmd->add_option("--format", o.format, "json | csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

void add_fit(CLI::App* cmd, fl::FitConfig& cfg, std::string& backend) {
  cmd->add_option("--alpha", cfg.alpha, "WQMIX down-weight")->capture_default_str();
  cmd->add_option("--backend", backend, "exhaustive | gradient")
      ->check(CLI::IsMember({"exhaustive", "gradient"}))
      ->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "Seed for randomized searches")->capture_default_str();
  cmd->add_flag("--wqmix-strict", cfg.wqmix_strict, "WQMIX full weight only where q_hat(u) > q_hat(u~)");
}

fl::JointAction parse_action(const std::string& s) {
  fl::JointAction a;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      a.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw fl::InvalidInput("bad joint action '" + s + "' (expected e.g. 0,2)");
    }
  }
  if (a.empty()) throw fl::InvalidInput("empty joint action");
  return a;
}

fs::path resolve_out(const std::string& out) {
  fs::path p(out);
  if (p.is_relative())
    if (const char* dir = std::getenv("FACTORLAB_OUT_DIR"); dir && *dir) p = fs::path(dir) / p;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

/// Writes `text` to --out (plus a manifest next to it) or to stdout.
void emit(const OutputOpts& o, const std::string& text, fl::RunManifest manifest,
          std::chrono::steady_clock::time_point start) {
  if (o.out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  const fs::path path = resolve_out(o.out);
  fl::write_text_file(path.string(), text);
  manifest.outputs.push_back(path.string());
  manifest.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fl::write_text_file(path.string() + ".manifest.json", fl::to_json(manifest).dump(2) + "\n");
  std::cerr << "wrote " << path.string() << "\n";
}

fl::json fit_config_json(const fl::FitConfig& c) {
  return {{"backend", fl::to_string(c.backend)},
          {"alpha", c.alpha},
          {"tolerance", c.tolerance},
          {"order_budget", c.order_budget},
          {"qplex_tol", c.qplex_tol},
          {"qplex_restarts", c.qplex_restarts},
          {"wqmix_strict", c.wqmix_strict},
          {"seed", c.seed}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"factorlab: value-factorization analysis for cooperative matrix games"};
  app.require_subcommand(1);
  const auto start = std::chrono::steady_clock::now();
  const std::string command_line = [&] {
    std::string s;
    for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
    return s;
  }();

  // analyze
  SourceOpts an_src;
  PolicyOpts an_pol;
  OutputOpts an_out;
  fl::FitConfig an_cfg;
  std::string an_scheme = "idealqmix", an_backend = "exhaustive";
  auto* analyze = app.add_subcommand("analyze", "Classify every joint action as a stable point");
  analyze->add_option("--scheme", an_scheme, "vdn | idealqmix | wqmix | resq | qplex")->capture_default_str();
  add_source(analyze, an_src);
  add_policy(analyze, an_pol);
  add_fit(analyze, an_cfg, an_backend);
  add_output(analyze, an_out);

  // trace
  SourceOpts tr_src;
  PolicyOpts tr_pol;
  OutputOpts tr_out;
  fl::FitConfig tr_cfg;
  std::string tr_scheme = "wqmix", tr_backend = "exhaustive", tr_start;
  int tr_max_steps = 20;
  auto* trace = app.add_subcommand("trace", "Follow the greedy-action dynamics from a start action");
  trace->add_option("--scheme", tr_scheme, "vdn | idealqmix | wqmix | resq | qplex")->capture_default_str();
  trace->add_option("--start", tr_start, "Start joint action, e.g. 0,2")->required();
  trace->add_option("--max-steps", tr_max_steps, "Step limit")->capture_default_str();
  add_source(trace, tr_src);
  add_policy(trace, tr_pol);
  add_fit(trace, tr_cfg, tr_backend);
  add_output(trace, tr_out);

  // mrvf plan / train
  auto* mrvf = app.add_subcommand("mrvf", "Multi-round value factorization");
  mrvf->require_subcommand(1);
  SourceOpts pl_src;
  OutputOpts pl_out;
  fl::MrvfPlanConfig pl_cfg;
  std::string pl_policy = "uniform", pl_start;
  auto* plan = mrvf->add_subcommand("plan", "Plan rounds on an exact q_hat");
  add_source(plan, pl_src);
  plan->add_option("--rounds", pl_cfg.rounds, "Round budget K")->capture_default_str();
  plan->add_option("--policy", pl_policy, "uniform | cen_eps | dec_eps")->capture_default_str();
  plan->add_option("--epsilon", pl_cfg.epsilon, "Epsilon for epsilon-greedy planning")->capture_default_str();
  plan->add_option("--start", pl_start, "Default action u0 (all zeros when omitted)");
  add_output(plan, pl_out);

  SourceOpts tn_src;
  OutputOpts tn_out;
  fl::TrainConfig tn_cfg;
  std::string tn_game = "riskreward";
  int tn_agents = 2, tn_actions = 3;
  double tn_punishment = -2.0;
  auto* train = mrvf->add_subcommand("train", "Tabular training on a one-step game");
  train->add_option("--game", tn_game, "riskreward | pp | payoff (use --corpus/--payoff)")->capture_default_str();
  train->add_option("--agents", tn_agents, "Risk-reward agent count")->capture_default_str();
  train->add_option("--actions", tn_actions, "Risk-reward action count")->capture_default_str();
  train->add_option("--punishment", tn_punishment, "One-step predator-prey punishment")->capture_default_str();
  train->add_option("--rounds", tn_cfg.max_rounds, "Round budget K")->capture_default_str();
  train->add_option("--p", tn_cfg.p, "Probability of executing a random round's greedy")->capture_default_str();
  train->add_option("--steps", tn_cfg.total_steps, "Training steps")->capture_default_str();
  train->add_option("--lr", tn_cfg.lr, "Learning rate")->capture_default_str();
  train->add_option("--seed", tn_cfg.seed, "Seed (game and training)")->capture_default_str();
  train->add_option("--eval-interval", tn_cfg.eval_interval, "Steps between log rows")->capture_default_str();
  add_source(train, tn_src);
  tn_out.format = "csv";
  add_output(train, tn_out);

  // reproduce
  std::string rp_id = "all";
  OutputOpts rp_out;
  auto* reproduce = app.add_subcommand("reproduce", "Run the embedded reproduction checks");
  std::vector<std::string> ids{"all"};
  for (const auto& [id, fn] : fl::criteria()) ids.push_back(id);
  reproduce->add_option("id", rp_id, "Check id or 'all'")->check(CLI::IsMember(ids))->capture_default_str();
  add_output(reproduce, rp_out);

  // gen
  std::string gn_family;
  int gn_agents = 2, gn_actions = 3;
  unsigned long long gn_seed = 0;
  double gn_punishment = -2.0;
  OutputOpts gn_out;
  auto* gen = app.add_subcommand("gen", "Generate a game as JSON");
  gen->add_option("family", gn_family, "riskreward | pp")->required()->check(CLI::IsMember({"riskreward", "pp"}));
  gen->add_option("--agents", gn_agents, "Agent count")->capture_default_str();
  gen->add_option("--actions", gn_actions, "Action count per agent")->capture_default_str();
  gen->add_option("--seed", gn_seed, "Seed")->capture_default_str();
  gen->add_option("--punishment", gn_punishment, "Predator-prey punishment")->capture_default_str();
  add_output(gen, gn_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  fl::RunManifest manifest;
  manifest.command = command_line;

  try {
    if (*analyze) {
      an_cfg.backend = fl::backend_from_string(an_backend);
      const auto scheme = fl::scheme_from_string(an_scheme);
      const auto payoff = an_src.load();
      const auto policy = an_pol.build();
      auto reports = fl::enumerate_stable_points(scheme, payoff, policy, an_cfg);
      manifest.inputs = {an_src.describe()};
      manifest.config = {{"scheme", an_scheme}, {"policy", fl::to_json(policy)}, {"fit", fit_config_json(an_cfg)}};
      manifest.seed = an_cfg.seed;
      std::string text;
      if (an_out.format == "csv") {
        text = fl::stability_csv(reports);
      } else {
        fl::json j{{"scheme", an_scheme}, {"payoff", fl::to_json(payoff)}, {"policy", fl::to_json(policy)}};
        for (const auto& r : reports) j["reports"].push_back(fl::to_json(r));
        text = j.dump(2);
      }
      emit(an_out, text, manifest, start);
      return 0;
    }
    if (*trace) {
      tr_cfg.backend = fl::backend_from_string(tr_backend);
      const auto scheme = fl::scheme_from_string(tr_scheme);
      const auto payoff = tr_src.load();
      const auto policy = tr_pol.build();
      auto t = fl::iterate_transitions(scheme, payoff, parse_action(tr_start), policy, tr_cfg, tr_max_steps);
      manifest.inputs = {tr_src.describe()};
      manifest.config = {{"scheme", tr_scheme},
                         {"start", tr_start},
                         {"max_steps", tr_max_steps},
                         {"policy", fl::to_json(policy)},
                         {"fit", fit_config_json(tr_cfg)}};
      manifest.seed = tr_cfg.seed;
      emit(tr_out, tr_out.format == "csv" ? fl::trace_csv(t) : fl::to_json(t).dump(2), manifest, start);
      return 0;
    }
    if (*plan) {
      const auto payoff = pl_src.load();
      pl_cfg.policy = fl::policy_kind_from_string(pl_policy);
      if (!pl_start.empty()) pl_cfg.default_action = parse_action(pl_start);
      auto res = fl::mrvf_plan(payoff, pl_cfg);
      manifest.inputs = {pl_src.describe()};
      manifest.config = {
          {"rounds", pl_cfg.rounds}, {"policy", pl_policy}, {"epsilon", pl_cfg.epsilon}, {"start", pl_start}};
      if (pl_out.format == "csv") {
        std::ostringstream os;
        os << "k,prev_greedy,greedy,improved,q_hat_greedy\n";
        for (std::size_t k = 0; k < res.rounds.size(); ++k)
          os << res.rounds[k].k << ",\"" << fl::to_string(res.rounds[k].prev_greedy) << "\",\""
             << fl::to_string(res.rounds[k].greedy) << "\"," << res.improvement_flags[k] << ','
             << payoff.at(res.rounds[k].greedy) << '\n';
        emit(pl_out, os.str(), manifest, start);
      } else {
        emit(pl_out, fl::to_json(res).dump(2), manifest, start);
      }
      return 0;
    }
    if (*train) {
      fl::JointPayoff game;
      if (tn_game == "riskreward")
        game = fl::gen_risk_reward(tn_agents, tn_actions, tn_cfg.seed).payoff;
      else if (tn_game == "pp")
        game = fl::one_step_pp_matrix(tn_punishment);
      else if (tn_game == "payoff")
        game = tn_src.load();
      else
        throw fl::InvalidInput("unknown game '" + tn_game + "'");
      auto res = fl::mrvf_train_one_step(game, tn_cfg);
      manifest.inputs = {tn_game == "payoff" ? tn_src.describe() : tn_game};
      manifest.config = {
          {"game", tn_game}, {"agents", tn_agents},         {"actions", tn_actions}, {"rounds", tn_cfg.max_rounds},
          {"p", tn_cfg.p},   {"steps", tn_cfg.total_steps}, {"lr", tn_cfg.lr}};
      manifest.seed = tn_cfg.seed;
      if (tn_out.format == "csv") {
        emit(tn_out, fl::train_log_csv(res, game), manifest, start);
      } else {
        fl::json j{{"payoff", fl::to_json(game)},
                   {"q_hat", res.q_hat.values},
                   {"evaluation", fl::to_json(res.evaluation)},
                   {"final_return", game.at(res.evaluation.output)},
                   {"executed_from_round", res.executed_from_round},
                   {"executed_output", res.executed_output},
                   {"executed_random", res.executed_random}};
        emit(tn_out, j.dump(2), manifest, start);
      }
      return 0;
    }
    if (*reproduce) {
      bool ok = true;
      fl::json j = fl::json::array();
      std::ostringstream os;
      for (const auto& [id, fn] : fl::criteria()) {
        if (rp_id != "all" && rp_id != id) continue;
        const auto r = fn();
        ok = ok && r.passed();
        os << (r.passed() ? "PASS" : "FAIL") << "  " << id << "  " << r.name << "\n";
        fl::json checks = fl::json::array();
        for (const auto& c : r.checks) {
          os << "      " << (c.passed ? "ok  " : "FAIL") << "  " << c.name
             << (c.detail.empty() ? "" : "  [" + c.detail + "]") << "\n";
          checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        }
        j.push_back(
            {{"id", id}, {"criterion", r.id}, {"passed", r.passed()}, {"seconds", r.seconds}, {"checks", checks}});
      }
      manifest.inputs = {rp_id};
      emit(rp_out, rp_out.format == "json" && !rp_out.out.empty() ? j.dump(2) : os.str(), manifest, start);
      return ok ? 0 : kExitCheckFailed;
    }
    if (*gen) {
      fl::json j;
      if (gn_family == "riskreward") {
        j = fl::to_json(fl::gen_risk_reward(gn_agents, gn_actions, gn_seed));
      } else {
        j = {{"family", "pp"},
             {"punishment", gn_punishment},
             {"payoff", fl::to_json(fl::one_step_pp_matrix(gn_punishment))}};
      }
      manifest.inputs = {gn_family};
      manifest.config = {{"agents", gn_agents}, {"actions", gn_actions}, {"punishment", gn_punishment}};
      manifest.seed = gn_seed;
      emit(gn_out, j.dump(2), manifest, start);
      return 0;
    }
  } catch (const fl::CapabilityError& e) {
    std::cerr << "error: capability: " << e.what() << "\n";
    return kExitCapability;
  } catch (const fl::BackendSwitch& e) {
    std::cerr << "error: backend: " << e.what() << " (try --backend gradient)\n";
    return kExitCapability;
  } catch (const fl::UnsupportedShape& e) {
    std::cerr << "error: unsupported: " << e.what() << "\n";
    return kExitCapability;
  } catch (const fl::NonConvergence& e) {
    std::cerr << "error: no convergence: " << e.what() << " (residual " << e.residual << ")\n";
    return kExitCheckFailed;
  } catch (const fl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
