#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "errors.hpp"

namespace factorlab {

enum PpAction : int { Up = 0, Down = 1, Left = 2, Right = 3, Stay = 4, Capture = 5 };
inline constexpr int kPpActions = 6;

struct PredatorPreyConfig {
  int width = 3;
  int height = 3;
  int n_predators = 2;
  int n_prey = 1;
  double punishment = -2.0;
  int episode_limit = 20;
  /// Prey take a uniformly random move each step instead of standing still.
  bool prey_drift = false;

  void validate() const {
    if (width < 1 || height < 1) throw InvalidInput("grid must be at least 1x1");
    if (n_predators < 1 || n_prey < 0) throw InvalidInput("need at least one predator");
    if (punishment > 0) throw InvalidInput("punishment must be nonpositive");
    if (episode_limit < 1) throw InvalidInput("episode limit must be positive");
  }
};

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

struct EnvState {
  std::uint64_t id = 0;
  /// Per predator: own (x, y), then (dx, dy, alive) for each prey; all zeros once removed.
  std::vector<std::vector<double>> observations;
};

struct StepResult {
  EnvState state;
  double reward = 0.0;
  bool done = false;
  int captures = 0;
  int punishments = 0;
};

class PredatorPreyEnv {
 public:
  explicit PredatorPreyEnv(PredatorPreyConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  const PredatorPreyConfig& config() const { return cfg_; }
  const std::vector<Cell>& predators() const { return predators_; }
  const std::vector<Cell>& prey() const { return prey_; }
  const std::vector<bool>& predator_alive() const { return predator_alive_; }
  const std::vector<bool>& prey_alive() const { return prey_alive_; }
  int step_count() const { return step_; }
  int prey_removed() const { return prey_removed_; }
  bool done() const { return done_; }

  EnvState reset(unsigned long long seed) {
    rng_.seed(seed);
    std::uniform_int_distribution<int> cx(0, cfg_.width - 1), cy(0, cfg_.height - 1);
    predators_.assign(cfg_.n_predators, {});
    prey_.assign(cfg_.n_prey, {});
    for (auto& c : predators_) c = {cx(rng_), cy(rng_)};
    for (auto& c : prey_) c = {cx(rng_), cy(rng_)};
    predator_alive_.assign(cfg_.n_predators, true);
    prey_alive_.assign(cfg_.n_prey, true);
    step_ = 0;
    prey_removed_ = 0;
    done_ = cfg_.n_prey == 0;
    return state();
  }

  StepResult step(const std::vector<int>& actions) {
    if (done_) throw ContractError("step called on a finished episode");
    if (static_cast<int>(actions.size()) != cfg_.n_predators) throw InvalidAction("expected one action per predator");
    for (int a : actions)
      if (a < 0 || a >= kPpActions) throw InvalidAction("action index out of range: " + std::to_string(a));

    for (int i = 0; i < cfg_.n_predators; ++i)
      if (predator_alive_[i]) move(predators_[i], actions[i]);
    if (cfg_.prey_drift) {
      std::uniform_int_distribution<int> pick(0, Stay);
      for (int j = 0; j < cfg_.n_prey; ++j)
        if (prey_alive_[j]) move(prey_[j], pick(rng_));
    }

    StepResult out;
    for (int j = 0; j < cfg_.n_prey; ++j) {
      if (!prey_alive_[j]) continue;
      std::vector<int> capturers;
      for (int i = 0; i < cfg_.n_predators; ++i)
        if (predator_alive_[i] && actions[i] == Capture && predators_[i] == prey_[j]) capturers.push_back(i);
      if (capturers.size() >= 2) {
        out.reward += 10.0;
        ++out.captures;
        prey_alive_[j] = false;
        ++prey_removed_;
        for (int i : capturers) predator_alive_[i] = false;
      } else if (capturers.size() == 1) {
        out.reward += cfg_.punishment;
        ++out.punishments;
      }
    }
    ++step_;
    done_ = prey_removed_ == cfg_.n_prey || step_ >= cfg_.episode_limit;
    out.done = done_;
    out.state = state();
    return out;
  }

  EnvState state() const {
    EnvState s;
    const std::uint64_t cells = static_cast<std::uint64_t>(cfg_.width) * cfg_.height + 1;
    auto code = [&](const Cell& c, bool alive) -> std::uint64_t {
      return alive ? static_cast<std::uint64_t>(c.y) * cfg_.width + c.x + 1 : 0;
    };
    for (int i = 0; i < cfg_.n_predators; ++i) s.id = s.id * cells + code(predators_[i], predator_alive_[i]);
    for (int j = 0; j < cfg_.n_prey; ++j) s.id = s.id * cells + code(prey_[j], prey_alive_[j]);
    s.id = s.id * static_cast<std::uint64_t>(cfg_.episode_limit + 1) + static_cast<std::uint64_t>(step_);

    for (int i = 0; i < cfg_.n_predators; ++i) {
      std::vector<double> o(2 + 3 * cfg_.n_prey, 0.0);
      if (predator_alive_[i]) {
        o[0] = predators_[i].x;
        o[1] = predators_[i].y;
        for (int j = 0; j < cfg_.n_prey; ++j) {
          if (!prey_alive_[j]) continue;
          o[2 + 3 * j] = prey_[j].x - predators_[i].x;
          o[3 + 3 * j] = prey_[j].y - predators_[i].y;
          o[4 + 3 * j] = 1.0;
        }
      }
      s.observations.push_back(std::move(o));
    }
    return s;
  }

 private:
  void move(Cell& c, int a) const {
    switch (a) {
      case Up:
        c.y = std::max(0, c.y - 1);
        break;
      case Down:
        c.y = std::min(cfg_.height - 1, c.y + 1);
        break;
      case Left:
        c.x = std::max(0, c.x - 1);
        break;
      case Right:
        c.x = std::min(cfg_.width - 1, c.x + 1);
        break;
      default:
        break;
    }
  }

  PredatorPreyConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<Cell> predators_, prey_;
  std::vector<bool> predator_alive_, prey_alive_;
  int step_ = 0;
  int prey_removed_ = 0;
  bool done_ = true;
};

inline EnvState env_reset(PredatorPreyEnv& env, unsigned long long seed) { return env.reset(seed); }
inline StepResult env_step(PredatorPreyEnv& env, const std::vector<int>& actions) { return env.step(actions); }

}  // namespace factorlab
