#include <gtest/gtest.h>

#include "factorlab/corpus.hpp"
#include "factorlab/io.hpp"

using namespace factorlab;

TEST(Io, PayoffRoundTrip) {
  const auto p = gen_uniform_payoff({2, 3, 2}, 6);
  const auto back = payoff_from_json(json::parse(to_json(p).dump()));
  EXPECT_EQ(back.action_counts(), p.action_counts());
  EXPECT_EQ(back.values(), p.values());
}

TEST(Io, PayoffAlternateForms) {
  const auto m = payoff_from_json(json::parse(R"({"matrix": [[1, 2], [3, 4]]})"));
  EXPECT_EQ(m.at({1, 0}), 3.0);
  const auto g = gen_risk_reward(2, 3, 1);
  EXPECT_EQ(payoff_from_json(to_json(g)).values(), g.payoff.values());
  EXPECT_THROW(payoff_from_json(json::parse(R"({"shape": [2, 2]})")), InvalidInput);
  EXPECT_THROW(payoff_from_json(json::parse(R"({"shape": [2, 2], "values": [1, 2, 3]})")), InvalidInput);
}

TEST(Io, PolicyRoundTrip) {
  const auto p = JointPolicy::decentralized(0.25, {1, 2});
  const auto back = policy_from_json(to_json(p));
  EXPECT_EQ(back.kind, p.kind);
  EXPECT_EQ(back.epsilon, p.epsilon);
  EXPECT_EQ(back.reference, p.reference);
  EXPECT_FALSE(policy_from_json(to_json(JointPolicy::uniform())).reference);
}

TEST(Io, ReportsSerialize) {
  const auto& q = corpus_entry("table6_qjt");
  const auto reports = enumerate_stable_points(Scheme::IdealQMIX, q, JointPolicy::uniform(), {});
  const auto csv = stability_csv(reports);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "candidate,classification,min_loss");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
  const auto j = to_json(reports.front());
  EXPECT_EQ(j.at("candidate"), json({0, 0}));
  const auto plan = to_json(mrvf_plan(q));
  EXPECT_EQ(plan.at("output"), json({0, 0}));
  EXPECT_EQ(plan.at("rounds").size(), 3u);
}

TEST(Io, ManifestFields) {
  RunManifest m;
  m.command = "factorlab analyze";
  m.seed = 3;
  const auto j = to_json(m);
  for (const char* key : {"command", "inputs", "config", "seed", "outputs", "tool_version", "wall_clock_seconds"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_THROW(read_json_file("/nonexistent/x.json"), InvalidInput);
}
