#include "phasechange/environment.hpp"

#include <gtest/gtest.h>

#include <random>
#include <stdexcept>

namespace phasechange::env {
namespace {

// Horizontal boundary on row 4 of an 8x8 grid, used for the +P fixture.
PhaseDiagram HorizontalFixture() {
  return PhaseDiagram(8, 8, {{Orientation::kHorizontal, 4, 0, 7}});
}

TEST(PhaseDiagramTest, RejectsDegenerateGrids) {
  EXPECT_THROW(PhaseDiagram(1, 5, {}), std::invalid_argument);
  EXPECT_THROW(PhaseDiagram(5, 1, {}), std::invalid_argument);
  EXPECT_NO_THROW(PhaseDiagram(2, 2, {}));
}

TEST(PhaseDiagramTest, RejectsBadSegments) {
  EXPECT_THROW(PhaseDiagram(8, 8, {{Orientation::kVertical, 8, 0, 7}}),
               std::invalid_argument);
  EXPECT_THROW(PhaseDiagram(8, 8, {{Orientation::kVertical, 3, 5, 4}}),
               std::invalid_argument);
  EXPECT_THROW(PhaseDiagram(8, 8, {{Orientation::kHorizontal, 3, 0, 8}}),
               std::invalid_argument);
  // Crossing segments share the cell (3,3).
  EXPECT_THROW(PhaseDiagram(8, 8, {{Orientation::kVertical, 3, 0, 7},
                                   {Orientation::kHorizontal, 3, 0, 7}}),
               std::invalid_argument);
}

TEST(PhaseDiagramTest, DefaultGeometry) {
  const PhaseDiagram d = PhaseDiagram::Default();
  EXPECT_EQ(d.width(), 32);
  EXPECT_EQ(d.height(), 32);
  for (int p = 0; p < 32; ++p) {
    EXPECT_EQ(d.BoundaryAt({12, p}), Orientation::kVertical);
    EXPECT_EQ(d.BoundaryAt({22, p}), Orientation::kVertical);
    EXPECT_FALSE(d.IsBoundary({11, p}));
  }
  EXPECT_FALSE(d.BoundaryAt({-1, 0}).has_value());
}

TEST(ScenarioTest, RejectsInvalidScenarios) {
  const PhaseDiagram d = PhaseDiagram::Default();
  EXPECT_THROW(Environment(d, {"x", {3, 3}, {3, 3}, Mode::kMarkov}),
               std::invalid_argument);
  EXPECT_THROW(Environment(d, {"x", {3, 32}, {0, 0}, Mode::kMarkov}),
               std::invalid_argument);
  EXPECT_THROW(Environment(d, {"x", {3, 3}, {-1, 0}, Mode::kMarkov}),
               std::invalid_argument);
}

TEST(EnvironmentTest, ResetPlacesAgentAtStart) {
  const auto scenarios = DefaultScenarios(Mode::kSemiMarkov);
  Environment easy(PhaseDiagram::Default(), FindScenario(scenarios, "easy"));
  EXPECT_EQ(easy.Reset(), (Observation{26, 12, std::nullopt}));
  Environment hard(PhaseDiagram::Default(), FindScenario(scenarios, "hard"));
  EXPECT_EQ(hard.Reset(), (Observation{2, 22, std::nullopt}));
}

TEST(EnvironmentTest, ResetClearsLatentFlag) {
  Environment env(PhaseDiagram::Default(),
                  {"s", {12, 5}, {30, 10}, Mode::kSemiMarkov});
  env.Reset();
  env.Step(Action::kWPlus);
  ASSERT_EQ(env.state().flag, LatentFlag::kPrimedPositive);
  env.Reset();
  EXPECT_EQ(env.state().flag, LatentFlag::kNone);
  EXPECT_EQ(env.steps(), 0);
}

TEST(EnvironmentTest, StepBeforeResetOrAfterTerminationThrows) {
  Environment env(PhaseDiagram::Default(),
                  {"s", {5, 5}, {6, 5}, Mode::kSemiMarkov});
  EXPECT_THROW(env.Step(Action::kQPlus), std::logic_error);
  EXPECT_THROW(env.Observe(), std::logic_error);
  env.Reset();
  const StepResult r = env.Step(Action::kQPlus);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_THROW(env.Step(Action::kQPlus), std::logic_error);
}

TEST(EnvironmentTest, WithinPhaseMove) {
  Environment env(PhaseDiagram::Default(),
                  {"s", {5, 5}, {30, 10}, Mode::kSemiMarkov});
  env.Reset();
  const StepResult r = env.Step(Action::kQPlus);
  EXPECT_EQ(r.observation, (Observation{6, 5, std::nullopt}));
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_FALSE(r.done);
  EXPECT_FALSE(r.truncated);
}

TEST(EnvironmentTest, EdgeClamp) {
  Environment env(PhaseDiagram::Default(),
                  {"s", {0, 0}, {30, 10}, Mode::kSemiMarkov});
  env.Reset();
  EXPECT_EQ(env.Step(Action::kQMinus).observation, (Observation{0, 0, std::nullopt}));
  EXPECT_EQ(env.Step(Action::kWMinus).observation, (Observation{0, 0, std::nullopt}));
}

TEST(EnvironmentTest, HorizontalBoundaryTwoActionCrossing) {
  // ...(s_x, s_y), a=1, (s_x, s_y), a=3, (s_x, s_y+1)...
  Environment env(HorizontalFixture(), {"s", {3, 4}, {7, 7}, Mode::kSemiMarkov});
  env.Reset();
  StepResult r = env.Step(Action::kQPlus);
  EXPECT_EQ(r.observation, (Observation{3, 4, std::nullopt}));
  EXPECT_EQ(env.state().flag, LatentFlag::kPrimedPositive);
  r = env.Step(Action::kWPlus);
  EXPECT_EQ(r.observation, (Observation{3, 5, std::nullopt}));
  EXPECT_EQ(env.state().flag, LatentFlag::kNone);
}

TEST(EnvironmentTest, CrossingWithoutPrimingStallsAndClearsFlag) {
  const PhaseDiagram d = HorizontalFixture();
  EnvState s{3, 4, LatentFlag::kNone};
  EXPECT_EQ(ApplyAction(d, Mode::kSemiMarkov, s, Action::kWPlus), s);
  // Wrong-sign priming does not unlock the crossing and is cleared.
  s.flag = LatentFlag::kPrimedNegative;
  EXPECT_EQ(ApplyAction(d, Mode::kSemiMarkov, s, Action::kWPlus),
            (EnvState{3, 4, LatentFlag::kNone}));
  // Priming in the opposite sign overwrites.
  s.flag = LatentFlag::kPrimedPositive;
  EXPECT_EQ(ApplyAction(d, Mode::kSemiMarkov, s, Action::kQMinus).flag,
            LatentFlag::kPrimedNegative);
}

TEST(EnvironmentTest, EdgeBlockedCrossingConsumesFlag) {
  // Boundary on the top row: the primed crossing is blocked by the edge.
  const PhaseDiagram d(8, 8, {{Orientation::kHorizontal, 7, 0, 7}});
  const EnvState primed{3, 7, LatentFlag::kPrimedPositive};
  EXPECT_EQ(ApplyAction(d, Mode::kSemiMarkov, primed, Action::kWPlus),
            (EnvState{3, 7, LatentFlag::kNone}));
}

TEST(EnvironmentTest, MarkovBoundaryIsOneStep) {
  Environment env(PhaseDiagram::Default(), {"s", {12, 5}, {30, 10}, Mode::kMarkov});
  env.Reset();
  EXPECT_EQ(env.Step(Action::kQPlus).observation, (Observation{13, 5, std::nullopt}));
  EXPECT_EQ(env.state().flag, LatentFlag::kNone);
}

TEST(EnvironmentTest, ObservationHidesPriming) {
  Environment env(PhaseDiagram::Default(),
                  {"s", {12, 5}, {30, 10}, Mode::kSemiMarkov});
  const Observation before = env.Reset();
  const Observation after = env.Step(Action::kWPlus).observation;
  EXPECT_NE(env.state().flag, LatentFlag::kNone);
  EXPECT_EQ(before, after);
}

TEST(EnvironmentTest, GoalAugmentedObservation) {
  Environment env(PhaseDiagram::Default(),
                  FindScenario(DefaultScenarios(Mode::kSemiMarkov), "hard"),
                  {.goal_augmented = true});
  const Observation obs = env.Reset();
  EXPECT_EQ(obs, (Observation{2, 22, Cell{30, 10}}));
}

TEST(EnvironmentTest, TruncatesAtStepCap) {
  Environment env(PhaseDiagram::Default(),
                  {"s", {0, 0}, {30, 10}, Mode::kSemiMarkov}, {.step_cap = 3});
  env.Reset();
  EXPECT_FALSE(env.Step(Action::kQMinus).truncated);
  EXPECT_FALSE(env.Step(Action::kQMinus).truncated);
  const StepResult last = env.Step(Action::kQMinus);
  EXPECT_TRUE(last.truncated);
  EXPECT_FALSE(last.done);
  EXPECT_TRUE(env.terminated());
}

TEST(EncodeObservationTest, ScalesByAxisMaximum) {
  const PhaseDiagram d = PhaseDiagram::Default();
  EXPECT_EQ(EncodeObservation({31, 31, std::nullopt}, d),
            (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(EncodeObservation({0, 0, std::nullopt}, d),
            (std::vector<double>{0.0, 0.0}));
  const auto v = EncodeObservation({2, 22, Cell{30, 10}}, d);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_DOUBLE_EQ(v[0], 2.0 / 31);
  EXPECT_DOUBLE_EQ(v[1], 22.0 / 31);
  EXPECT_DOUBLE_EQ(v[2], 30.0 / 31);
  EXPECT_DOUBLE_EQ(v[3], 10.0 / 31);
}

TEST(EnvironmentPropertyTest, FlagOnlyAtBoundariesAndDeterministic) {
  const PhaseDiagram d(10, 9, {{Orientation::kVertical, 4, 1, 7},
                               {Orientation::kHorizontal, 5, 6, 9}});
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(0, kNumActions - 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Action> actions(200);
    for (auto& a : actions) a = ActionFromIndex(pick(rng));
    auto rollout = [&] {
      Environment env(d, {"s", {0, 0}, {9, 8}, Mode::kSemiMarkov});
      env.Reset();
      std::vector<EnvState> states;
      for (Action a : actions) {
        if (env.terminated()) break;
        const EnvState before = env.state();
        env.Step(a);
        const EnvState& after = env.state();
        if (after.flag != LatentFlag::kNone) {
          EXPECT_TRUE(d.IsBoundary(after.cell()));
        }
        if (after.cell() != before.cell()) {
          EXPECT_EQ(after.flag, LatentFlag::kNone);
        }
        states.push_back(after);
      }
      return states;
    };
    EXPECT_EQ(rollout(), rollout());
  }
}

TEST(EnvironmentPropertyTest, RewardOnlyAtGoal) {
  const PhaseDiagram d = PhaseDiagram::Scaled16();
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pick(0, kNumActions - 1);
  Environment env(d, FindScenario(Scaled16Scenarios(Mode::kSemiMarkov), "easy"),
                  {.step_cap = 500});
  for (int episode = 0; episode < 20; ++episode) {
    env.Reset();
    while (!env.terminated()) {
      const StepResult r = env.Step(ActionFromIndex(pick(rng)));
      const bool at_goal = env.state().cell() == env.scenario().goal;
      EXPECT_EQ(r.reward, at_goal ? 1.0 : 0.0);
      EXPECT_EQ(r.done, at_goal);
    }
  }
}

}  // namespace
}  // namespace phasechange::env
