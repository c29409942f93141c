#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>

#include "payoff.hpp"

namespace factorlab {

enum class PolicyKind { Uniform, DecentralizedEpsGreedy, CentralizedEpsGreedy };

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Uniform:
      return "uniform";
    case PolicyKind::DecentralizedEpsGreedy:
      return "dec_eps";
    case PolicyKind::CentralizedEpsGreedy:
      return "cen_eps";
  }
  return "?";
}

inline PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "uniform") return PolicyKind::Uniform;
  if (s == "dec_eps") return PolicyKind::DecentralizedEpsGreedy;
  if (s == "cen_eps") return PolicyKind::CentralizedEpsGreedy;
  throw InvalidInput("unknown policy kind '" + s + "'");
}

/// Visitation weights over joint actions. Uniform is pi == 1 unless `normalized`,
/// in which case every action gets 1/|U|.
struct JointPolicy {
  PolicyKind kind = PolicyKind::Uniform;
  double epsilon = 0.0;
  std::optional<JointAction> reference;
  bool normalized = false;

  static JointPolicy uniform(bool normalized = false) {
    JointPolicy p;
    p.normalized = normalized;
    return p;
  }
  static JointPolicy centralized(double eps, JointAction ref) {
    return JointPolicy{PolicyKind::CentralizedEpsGreedy, eps, std::move(ref), false};
  }
  static JointPolicy decentralized(double eps, JointAction ref) {
    return JointPolicy{PolicyKind::DecentralizedEpsGreedy, eps, std::move(ref), false};
  }

  bool is_eps_greedy() const { return kind != PolicyKind::Uniform; }

  JointPolicy with_reference(const JointAction& ref) const {
    JointPolicy p = *this;
    if (is_eps_greedy()) p.reference = ref;
    return p;
  }

  void validate(const Shape& shape) const {
    if (!is_eps_greedy()) return;
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidInput("epsilon must lie in [0,1]");
    if (!reference) throw InvalidInput("epsilon-greedy policy needs a reference action");
    shape.index(*reference);
    if (kind == PolicyKind::DecentralizedEpsGreedy && !shape.homogeneous())
      throw UnsupportedShape("decentralized epsilon-greedy needs a shared per-agent action count");
  }
};

inline double weight(const JointPolicy& pi, const JointAction& u, const Shape& shape) {
  pi.validate(shape);
  switch (pi.kind) {
    case PolicyKind::Uniform:
      return pi.normalized ? 1.0 / static_cast<double>(shape.size()) : 1.0;
    case PolicyKind::CentralizedEpsGreedy: {
      const double base = pi.epsilon / static_cast<double>(shape.size());
      return u == *pi.reference ? 1.0 - pi.epsilon + base : base;
    }
    case PolicyKind::DecentralizedEpsGreedy: {
      const double k = shape.count(0);
      const double off = pi.epsilon / k, on = 1.0 - pi.epsilon + pi.epsilon / k;
      double w = 1.0;
      for (int i = 0; i < shape.n_agents(); ++i) w *= (u[i] == (*pi.reference)[i]) ? on : off;
      return w;
    }
  }
  return 0.0;
}

inline Tensor weights(const JointPolicy& pi, const Shape& shape) {
  Tensor w(shape.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = weight(pi, shape.deindex(i), shape);
  return w;
}

/// Draws a joint action; uniform draws ignore the normalization flag.
template <class Rng>
JointAction sample(const JointPolicy& pi, const Shape& shape, Rng& rng) {
  pi.validate(shape);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  JointAction u(shape.n_agents());
  switch (pi.kind) {
    case PolicyKind::Uniform:
      for (int i = 0; i < shape.n_agents(); ++i) u[i] = std::uniform_int_distribution<int>(0, shape.count(i) - 1)(rng);
      return u;
    case PolicyKind::CentralizedEpsGreedy:
      if (coin(rng) >= pi.epsilon) return *pi.reference;
      return shape.deindex(std::uniform_int_distribution<std::size_t>(0, shape.size() - 1)(rng));
    case PolicyKind::DecentralizedEpsGreedy:
      for (int i = 0; i < shape.n_agents(); ++i)
        u[i] = coin(rng) < pi.epsilon ? std::uniform_int_distribution<int>(0, shape.count(i) - 1)(rng)
                                      : (*pi.reference)[i];
      return u;
  }
  return u;
}

}  // namespace factorlab
