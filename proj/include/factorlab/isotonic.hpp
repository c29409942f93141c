#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

#include "payoff.hpp"

namespace factorlab {

/// Constraint x[lo] <= x[hi].
struct OrderEdge {
  int lo;
  int hi;
};

namespace detail {

template <class Real>
class MaxFlow {
 public:
  explicit MaxFlow(int n) : head_(n, -1), level_(n), it_(n) {}

  void add_edge(int u, int v, Real cap) {
    edges_.push_back({v, head_[u], cap});
    head_[u] = static_cast<int>(edges_.size()) - 1;
    edges_.push_back({u, head_[v], Real(0)});
    head_[v] = static_cast<int>(edges_.size()) - 1;
  }

  Real run(int s, int t, Real eps) {
    Real flow = 0;
    while (bfs(s, t, eps)) {
      it_ = head_;
      while (Real f = dfs(s, t, std::numeric_limits<Real>::infinity(), eps)) flow += f;
    }
    return flow;
  }

  /// Nodes reachable from s in the residual graph after run().
  std::vector<char> source_side(int s, Real eps) const {
    std::vector<char> seen(head_.size(), 0);
    std::vector<int> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int e = head_[u]; e != -1; e = edges_[e].next)
        if (edges_[e].cap > eps && !seen[edges_[e].to]) {
          seen[edges_[e].to] = 1;
          stack.push_back(edges_[e].to);
        }
    }
    return seen;
  }

 private:
  struct Edge {
    int to;
    int next;
    Real cap;
  };

  bool bfs(int s, int t, Real eps) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int e = head_[u]; e != -1; e = edges_[e].next)
        if (edges_[e].cap > eps && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[u] + 1;
          q.push(edges_[e].to);
        }
    }
    return level_[t] >= 0;
  }

  Real dfs(int u, int t, Real pushed, Real eps) {
    if (u == t) return pushed;
    for (int& e = it_[u]; e != -1; e = edges_[e].next) {
      Edge& ed = edges_[e];
      if (ed.cap <= eps || level_[ed.to] != level_[u] + 1) continue;
      Real f = dfs(ed.to, t, std::min(pushed, ed.cap), eps);
      if (f > 0) {
        ed.cap -= f;
        edges_[e ^ 1].cap += f;
        return f;
      }
    }
    return 0;
  }

  std::vector<Edge> edges_;
  std::vector<int> head_;
  std::vector<int> level_;
  std::vector<int> it_;
};

}  // namespace detail

/// Exact weighted least-squares isotonic regression over an arbitrary partial
/// order given by pairwise edges, by recursive min-cut partitioning
/// (Hochbaum & Queyranne 2003; Spouge, Wan & Wilbur 2003).
/// Weights must be strictly positive.
template <class Real>
std::vector<Real> isotonic_regression(const std::vector<Real>& y, const std::vector<Real>& w,
                                      const std::vector<OrderEdge>& edges) {
  const int n = static_cast<int>(y.size());
  std::vector<Real> x(n);
  std::vector<std::vector<int>> out_edges(n);
  for (const auto& e : edges) out_edges[e.lo].push_back(e.hi);

  std::vector<int> local(n, -1);
  std::vector<std::vector<int>> pending;
  pending.emplace_back(n);
  std::iota(pending.back().begin(), pending.back().end(), 0);

  while (!pending.empty()) {
    std::vector<int> group = std::move(pending.back());
    pending.pop_back();
    Real sw = 0, swy = 0, scale = 0;
    for (int i : group) {
      sw += w[i];
      swy += w[i] * y[i];
    }
    const Real mean = swy / sw;
    if (group.size() == 1) {
      x[group[0]] = mean;
      continue;
    }
    const int m = static_cast<int>(group.size());
    const int s = m, t = m + 1;
    for (int k = 0; k < m; ++k) local[group[k]] = k;
    detail::MaxFlow<Real> flow(m + 2);
    Real positive = 0;
    for (int k = 0; k < m; ++k) {
      const int i = group[k];
      const Real c = w[i] * (y[i] - mean);
      scale += std::abs(c);
      if (c > 0) {
        flow.add_edge(s, k, c);
        positive += c;
      } else if (c < 0) {
        flow.add_edge(k, t, -c);
      }
      for (int j : out_edges[i])
        if (local[j] >= 0) flow.add_edge(k, local[j], std::numeric_limits<Real>::infinity());
    }
    const Real eps = scale * Real(1e-14) + std::numeric_limits<Real>::min();
    const Real cut = flow.run(s, t, eps);
    std::vector<int> upper, lower;
    if (positive - cut > Real(1e-12) * scale) {
      auto side = flow.source_side(s, eps);
      for (int k = 0; k < m; ++k) (side[k] ? upper : lower).push_back(group[k]);
    }
    for (int i : group) local[i] = -1;
    if (upper.empty() || lower.empty()) {
      for (int i : group) x[i] = mean;
      continue;
    }
    pending.push_back(std::move(upper));
    pending.push_back(std::move(lower));
  }
  return x;
}

/// Weighted pool-adjacent-violators for a nondecreasing chain.
template <class Real>
std::vector<Real> pava(const std::vector<Real>& y, const std::vector<Real>& w) {
  struct Block {
    Real sum, weight;
    int len;
  };
  std::vector<Block> st;
  for (std::size_t i = 0; i < y.size(); ++i) {
    st.push_back({w[i] * y[i], w[i], 1});
    while (st.size() > 1) {
      Block& b = st.back();
      Block& a = st[st.size() - 2];
      if (a.sum / a.weight <= b.sum / b.weight) break;
      a.sum += b.sum;
      a.weight += b.weight;
      a.len += b.len;
      st.pop_back();
    }
  }
  std::vector<Real> x;
  x.reserve(y.size());
  for (const auto& b : st) x.insert(x.end(), b.len, b.sum / b.weight);
  return x;
}

/// Edges making the tensor nondecreasing along each agent's axis in the order
/// orders[i] (orders[i][k] is the k-th smallest action of agent i).
inline std::vector<OrderEdge> lattice_edges(const Shape& shape, const std::vector<std::vector<int>>& orders) {
  std::vector<OrderEdge> edges;
  for (std::size_t idx = 0; idx < shape.size(); ++idx) {
    for (int i = 0; i < shape.n_agents(); ++i) {
      const int a = shape.component(idx, i);
      const auto& ord = orders[i];
      const int pos = static_cast<int>(std::find(ord.begin(), ord.end(), a) - ord.begin());
      if (pos + 1 >= static_cast<int>(ord.size())) continue;
      const long diff = static_cast<long>(ord[pos + 1]) - a;
      const long j = static_cast<long>(idx) + diff * static_cast<long>(shape.stride(i));
      edges.push_back({static_cast<int>(idx), static_cast<int>(j)});
    }
  }
  return edges;
}

}  // namespace factorlab
