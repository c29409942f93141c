#include <gtest/gtest.h>

#include "factorlab/predator_prey.hpp"

using namespace factorlab;

namespace {
PredatorPreyConfig single_cell() {
  PredatorPreyConfig c;
  c.width = c.height = 1;
  return c;
}
}  // namespace

TEST(Env, ResetIsDeterministic) {
  PredatorPreyEnv a, b;
  EXPECT_EQ(a.reset(4).id, b.reset(4).id);
  EXPECT_EQ(a.predators(), b.predators());
  EXPECT_EQ(a.prey(), b.prey());
}

TEST(Env, JointCaptureRewardsAndEnds) {
  PredatorPreyEnv env(single_cell());
  env.reset(0);
  const auto r = env.step({Capture, Capture});
  EXPECT_EQ(r.reward, 10.0);
  EXPECT_EQ(r.captures, 1);
  EXPECT_TRUE(r.done);
  for (const auto& o : r.state.observations)
    for (double v : o) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(env.step({Stay, Stay}), ContractError);
}

TEST(Env, LoneCapturePunishes) {
  auto cfg = single_cell();
  cfg.punishment = -3.5;
  PredatorPreyEnv env(cfg);
  env.reset(0);
  const auto r = env.step({Capture, Up});
  EXPECT_EQ(r.reward, -3.5);
  EXPECT_EQ(r.punishments, 1);
  EXPECT_FALSE(r.done);
  EXPECT_TRUE(env.prey_alive()[0]);
}

TEST(Env, MovesClampAtBorders) {
  PredatorPreyEnv env;
  env.reset(1);
  for (int k = 0; k < 3; ++k) env.step({Up, Right});
  EXPECT_EQ(env.predators()[0].y, 0);
  EXPECT_EQ(env.predators()[1].x, 2);
  for (int k = 0; k < 3; ++k) env.step({Left, Down});
  EXPECT_EQ(env.predators()[0], (Cell{0, 0}));
  EXPECT_EQ(env.predators()[1], (Cell{2, 2}));
}

TEST(Env, EpisodeLimitAndInputChecks) {
  PredatorPreyConfig cfg;
  cfg.episode_limit = 3;
  PredatorPreyEnv env(cfg);
  env.reset(2);
  EXPECT_THROW(env.step({Stay}), InvalidAction);
  EXPECT_THROW(env.step({Stay, 6}), InvalidAction);
  StepResult r;
  for (int k = 0; k < 3; ++k) r = env.step({Stay, Stay});
  EXPECT_TRUE(r.done);
  EXPECT_EQ(env.step_count(), 3);
  cfg.punishment = 1.0;
  EXPECT_THROW(PredatorPreyEnv{cfg}, InvalidInput);
}

TEST(Env, StateIdsDistinguishStepAndPositions) {
  PredatorPreyEnv env;
  const auto s0 = env.reset(3);
  const auto s1 = env.step({Stay, Stay}).state;
  EXPECT_NE(s0.id, s1.id);
  const auto& obs = s1.observations[0];
  ASSERT_EQ(obs.size(), 5u);
  EXPECT_EQ(obs[0], env.predators()[0].x);
  EXPECT_EQ(obs[2], env.prey()[0].x - env.predators()[0].x);
  EXPECT_EQ(obs[4], 1.0);
}
