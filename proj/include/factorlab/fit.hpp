#pragma once

#include <optional>
#include <string>
#include <vector>

#include "payoff.hpp"
#include "policy.hpp"

namespace factorlab {

enum class Scheme { VDN, IdealQMIX, WQMIX, ResQ, QPLEX };
enum class Backend { ExhaustiveOrders, ProjectedGradient };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::VDN:
      return "vdn";
    case Scheme::IdealQMIX:
      return "idealqmix";
    case Scheme::WQMIX:
      return "wqmix";
    case Scheme::ResQ:
      return "resq";
    case Scheme::QPLEX:
      return "qplex";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "vdn") return Scheme::VDN;
  if (s == "idealqmix" || s == "qmix") return Scheme::IdealQMIX;
  if (s == "wqmix") return Scheme::WQMIX;
  if (s == "resq") return Scheme::ResQ;
  if (s == "qplex") return Scheme::QPLEX;
  throw InvalidInput("unknown scheme '" + s + "'");
}

inline std::string to_string(Backend b) { return b == Backend::ExhaustiveOrders ? "exhaustive" : "gradient"; }

inline Backend backend_from_string(const std::string& s) {
  if (s == "exhaustive") return Backend::ExhaustiveOrders;
  if (s == "gradient") return Backend::ProjectedGradient;
  throw InvalidInput("unknown backend '" + s + "'");
}

struct FitConfig {
  Backend backend = Backend::ExhaustiveOrders;
  std::size_t order_budget = 1'000'000;
  /// Relative tolerance for loss ties and slice equality.
  double tolerance = 1e-9;
  int max_iters = 20000;
  double alpha = 0.1;
  /// WQMIX weight-1 rule: q_hat(u) > q_hat(u~) when true, >= otherwise.
  bool wqmix_strict = false;
  /// Stationarity tolerance for the QPLEX descent.
  double qplex_tol = 1e-4;
  int qplex_restarts = 64;
  unsigned long long seed = 0;

  void validate() const {
    if (!(tolerance > 0)) throw InvalidInput("tolerance must be positive");
    if (!(alpha > 0 && alpha <= 1)) throw InvalidInput("alpha must lie in (0,1]");
  }
};

struct ResqParts {
  Tensor q_mon;
  Tensor q_r;
  Tensor w_r;
};

struct FactorizedFit {
  Scheme scheme = Scheme::IdealQMIX;
  std::vector<std::vector<double>> per_agent_q;
  Tensor q_tot;
  double loss = 0.0;
  ActionSet greedy_set;
  std::optional<Tensor> wqmix_weights;
  std::optional<ResqParts> resq;
  std::optional<std::vector<Tensor>> qplex_weights;
  /// Per-agent strict orders under which the ideal-QMIX fit was solved.
  std::vector<std::vector<int>> orders;
  Backend backend = Backend::ExhaustiveOrders;
  bool converged = true;
  int iterations = 0;
};

inline std::vector<int> argmax_indices(const std::vector<double>& q, double tol) {
  double m = q[0];
  for (double v : q) m = std::max(m, v);
  std::vector<int> out;
  for (std::size_t a = 0; a < q.size(); ++a)
    if (q[a] >= m - tol) out.push_back(static_cast<int>(a));
  return out;
}

/// Cartesian product of per-agent argmax sets.
inline ActionSet greedy_from_agents(const std::vector<std::vector<double>>& q, double tol = 0.0) {
  std::vector<std::vector<int>> best;
  std::vector<std::size_t> sizes;
  for (const auto& qi : q) {
    best.push_back(argmax_indices(qi, tol));
    sizes.push_back(best.back().size());
  }
  ActionSet out;
  for_each_product(sizes, [&](const std::vector<std::size_t>& k) {
    JointAction u(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) u[i] = best[i][k[i]];
    out.push_back(u);
  });
  canonicalize(out);
  return out;
}

inline double weighted_sse(const Tensor& a, const Tensor& b, const Tensor& w) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += w[i] * (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline double tie_tolerance(const Tensor& target, double rel) {
  double m = 0;
  for (double v : target) m = std::max(m, std::abs(v));
  return rel * (1.0 + m) * 100.0;
}

}  // namespace factorlab
