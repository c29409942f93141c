#pragma once

#include <map>
#include <string>

#include "payoff.hpp"

namespace factorlab {

/// Joint payoff of the one-step predator-prey game: 10 when both agents pick
/// action 0 (capture), `punishment` when exactly one does, 0 otherwise.
inline JointPayoff one_step_pp_matrix(double punishment) {
  if (punishment > 0) throw InvalidInput("punishment must be nonpositive");
  std::vector<std::vector<double>> m(6, std::vector<double>(6, 0.0));
  for (int k = 1; k < 6; ++k) m[0][k] = m[k][0] = punishment;
  m[0][0] = 10.0;
  return JointPayoff::matrix(m, "pp_onestep");
}

/// Built-in reference matrices. Keys are public API: never rename.
inline const std::map<std::string, JointPayoff>& paper_corpus() {
  static const std::map<std::string, JointPayoff> corpus = [] {
    std::map<std::string, JointPayoff> c;
    auto add = [&](const std::string& key, std::vector<std::vector<double>> rows) {
      c.emplace(key, JointPayoff::matrix(rows, key));
    };
    const std::vector<std::vector<double>> t6 = {{8, -12, -12}, {-12, 3, 0}, {-12, 0, 5}};
    add("table2_qjt", {{4, 0, -8}, {0, 3, 0}, {-8, 0, -8}});
    add("table4_qhat", t6);
    add("table5_qjt", t6);
    add("table6_qjt", t6);
    add("table7_qjt", t6);
    add("table8_qjt", {{8, 0, 0}, {0, 3, 0}, {0, 0, 5}});
    add("table9_premapped", {{3, -4, -5}, {-4, 5, -6}, {-5, -6, 7}});
    add("table9_qjt", {{7, -6, -5}, {-5, -4, 3}, {-6, 5, -4}});
    add("table10a", {{9, 8, 7}, {6, 5, 4}, {3, 2, 1}});
    add("table10b", {{8, 9, 7}, {2, 3, 1}, {5, 6, 4}});
    add("table10c", {{9, 0, 0}, {0, 5, 0}, {0, 0, 0}});
    add("table10d", {{9, -9, -9}, {-9, 5, 0}, {-9, 0, 0}});
    add("table11_qjt", {{2.2, 1.1, 1.1, -0.9}, {1.1, 2, 1, -1}, {1.1, 1, 2, -1}, {-0.9, -1, -1, -2}});
    JointPayoff pp = one_step_pp_matrix(-2.0);
    pp.set_label("pp_onestep_p2");
    c.emplace("pp_onestep_p2", pp);
    return c;
  }();
  return corpus;
}

inline const JointPayoff& corpus_entry(const std::string& key) {
  const auto& c = paper_corpus();
  auto it = c.find(key);
  if (it == c.end()) throw LookupError("unknown corpus key '" + key + "'");
  return it->second;
}

}  // namespace factorlab
