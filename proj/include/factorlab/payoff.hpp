#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace factorlab {

using JointAction = std::vector<int>;
/// Deduplicated, lexicographically sorted list of joint actions.
using ActionSet = std::vector<JointAction>;
using Tensor = std::vector<double>;

inline void canonicalize(ActionSet& set) {
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
}

inline bool contains(const ActionSet& set, const JointAction& a) {
  return std::binary_search(set.begin(), set.end(), a);
}

inline std::string to_string(const JointAction& a) {
  std::string s = "(";
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(a[i]);
  }
  return s + ")";
}

/// Row-major shape of a joint action space; the last agent varies fastest.
class Shape {
 public:
  Shape() = default;
  explicit Shape(std::vector<int> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw InvalidInput("action_counts must be nonempty");
    for (int c : counts_)
      if (c < 1) throw InvalidInput("action counts must be positive");
    size_ = 1;
    for (int c : counts_) size_ *= static_cast<std::size_t>(c);
  }

  int n_agents() const { return static_cast<int>(counts_.size()); }
  int count(int agent) const { return counts_[agent]; }
  const std::vector<int>& counts() const { return counts_; }
  std::size_t size() const { return size_; }
  bool homogeneous() const {
    return std::all_of(counts_.begin(), counts_.end(), [&](int c) { return c == counts_.front(); });
  }

  std::size_t index(const JointAction& a) const {
    if (a.size() != counts_.size()) throw InvalidAction("joint action " + to_string(a) + " has wrong arity");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (a[i] < 0 || a[i] >= counts_[i])
        throw InvalidAction("component " + std::to_string(i) + " of " + to_string(a) + " out of range");
      idx = idx * counts_[i] + a[i];
    }
    return idx;
  }

  JointAction deindex(std::size_t idx) const {
    if (idx >= size_) throw InvalidAction("flat index out of range");
    JointAction a(counts_.size());
    for (int i = n_agents() - 1; i >= 0; --i) {
      a[i] = static_cast<int>(idx % counts_[i]);
      idx /= counts_[i];
    }
    return a;
  }

  std::size_t stride(int agent) const {
    std::size_t s = 1;
    for (int j = agent + 1; j < n_agents(); ++j) s *= counts_[j];
    return s;
  }

  int component(std::size_t idx, int agent) const { return static_cast<int>((idx / stride(agent)) % counts_[agent]); }

  ActionSet all_actions() const {
    ActionSet out;
    out.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) out.push_back(deindex(i));
    return out;
  }

  bool operator==(const Shape& o) const { return counts_ == o.counts_; }

 private:
  std::vector<int> counts_;
  std::size_t size_ = 0;
};

/// Dense joint payoff tensor Q_jt over a finite product action space.
class JointPayoff {
 public:
  JointPayoff() = default;
  JointPayoff(std::vector<int> counts, Tensor values, std::string label = {})
      : shape_(std::move(counts)), values_(std::move(values)), label_(std::move(label)) {
    if (values_.size() != shape_.size())
      throw InvalidInput("payoff has " + std::to_string(values_.size()) + " values, expected " +
                         std::to_string(shape_.size()));
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidInput("payoff entries must be finite");
  }

  static JointPayoff matrix(const std::vector<std::vector<double>>& rows, std::string label = {}) {
    if (rows.empty()) throw InvalidInput("empty matrix");
    Tensor v;
    for (const auto& r : rows) {
      if (r.size() != rows.front().size()) throw InvalidInput("ragged matrix");
      v.insert(v.end(), r.begin(), r.end());
    }
    return JointPayoff({static_cast<int>(rows.size()), static_cast<int>(rows.front().size())}, std::move(v),
                       std::move(label));
  }

  const Shape& shape() const { return shape_; }
  int n_agents() const { return shape_.n_agents(); }
  const std::vector<int>& action_counts() const { return shape_.counts(); }
  std::size_t size() const { return values_.size(); }
  const Tensor& values() const { return values_; }
  const std::string& label() const { return label_; }
  void set_label(std::string l) { label_ = std::move(l); }

  double operator[](std::size_t i) const { return values_[i]; }
  double at(const JointAction& a) const { return values_[shape_.index(a)]; }
  std::size_t joint_index(const JointAction& a) const { return shape_.index(a); }
  JointAction deindex(std::size_t i) const { return shape_.deindex(i); }

  double max_value() const { return *std::max_element(values_.begin(), values_.end()); }
  double min_value() const { return *std::min_element(values_.begin(), values_.end()); }

  JointPayoff scaled(double c, double shift = 0.0) const {
    Tensor v = values_;
    for (double& x : v) x = c * x + shift;
    return JointPayoff(shape_.counts(), std::move(v), label_);
  }

 private:
  Shape shape_;
  Tensor values_;
  std::string label_;
};

namespace detail {
inline ActionSet extreme_set(const Shape& shape, const Tensor& values, bool want_max) {
  double best = want_max ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  for (double v : values) best = want_max ? std::max(best, v) : std::min(best, v);
  ActionSet out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] == best) out.push_back(shape.deindex(i));
  return out;
}
}  // namespace detail

/// All maximizing joint actions; ties are exact on stored values.
inline ActionSet argmax_set(const JointPayoff& p) { return detail::extreme_set(p.shape(), p.values(), true); }
inline ActionSet argmin_set(const JointPayoff& p) { return detail::extreme_set(p.shape(), p.values(), false); }

/// Pointwise comparison of the slices u_i = a and u_i = b over all u_{-i}.
/// Returns +1 if slice a dominates b, -1 if b dominates a, 2 if equal, 0 if unordered.
inline int compare_slices(const Shape& shape, const Tensor& values, int agent, int a, int b, double tol = 0.0) {
  const std::size_t stride = shape.stride(agent);
  const std::size_t block = stride * shape.count(agent);
  bool a_ge = true, b_ge = true;
  for (std::size_t base = 0; base < shape.size(); base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      const double va = values[base + a * stride + off];
      const double vb = values[base + b * stride + off];
      if (va < vb - tol) a_ge = false;
      if (vb < va - tol) b_ge = false;
    }
  }
  if (a_ge && b_ge) return 2;
  if (a_ge) return 1;
  if (b_ge) return -1;
  return 0;
}

struct MonotonicityWitness {
  int agent = 0;
  int action_a = 0, action_b = 0;
  JointAction completion_a_wins;  // u_{-i} completion where slice a is strictly larger
  JointAction completion_b_wins;
};

struct MonotonicityVerdict {
  bool is_monotonic = true;
  std::optional<MonotonicityWitness> witness;
  double unordered_pair_fraction = 0.0;
};

inline MonotonicityVerdict classify_monotonicity(const JointPayoff& p) {
  const Shape& s = p.shape();
  const Tensor& v = p.values();
  MonotonicityVerdict out;
  std::size_t pairs = 0, unordered = 0;
  for (int i = 0; i < s.n_agents(); ++i) {
    for (int a = 0; a < s.count(i); ++a) {
      for (int b = a + 1; b < s.count(i); ++b) {
        ++pairs;
        if (compare_slices(s, v, i, a, b) != 0) continue;
        ++unordered;
        if (out.witness) continue;
        MonotonicityWitness w{i, a, b, {}, {}};
        for (std::size_t idx = 0; idx < v.size(); ++idx) {
          JointAction u = s.deindex(idx);
          if (u[i] != a) continue;
          JointAction ub = u;
          ub[i] = b;
          const double va = v[idx], vb = p.at(ub);
          JointAction rest = u;
          rest.erase(rest.begin() + i);
          if (va > vb && w.completion_a_wins.empty()) w.completion_a_wins = rest;
          if (vb > va && w.completion_b_wins.empty()) w.completion_b_wins = rest;
        }
        out.witness = w;
      }
    }
  }
  out.is_monotonic = !out.witness.has_value();
  out.unordered_pair_fraction = pairs ? static_cast<double>(unordered) / pairs : 0.0;
  return out;
}

/// Visits every index tuple of the Cartesian product of [0, sizes[k]).
inline void for_each_product(const std::vector<std::size_t>& sizes,
                             const std::function<void(const std::vector<std::size_t>&)>& f) {
  for (std::size_t s : sizes)
    if (s == 0) return;
  std::vector<std::size_t> idx(sizes.size(), 0);
  while (true) {
    f(idx);
    int k = static_cast<int>(sizes.size()) - 1;
    while (k >= 0 && ++idx[k] == sizes[k]) idx[k--] = 0;
    if (k < 0) return;
  }
}

}  // namespace factorlab
