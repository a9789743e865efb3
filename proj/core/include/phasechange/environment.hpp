#ifndef PHASECHANGE_ENVIRONMENT_HPP_
#define PHASECHANGE_ENVIRONMENT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phasechange/geometry.hpp"

namespace phasechange::env {

// Hidden priming state accumulated at a boundary cell. Never observed in
// semi-Markov mode.
enum class LatentFlag : std::uint8_t {
  kNone,
  kPrimedPositive,
  kPrimedNegative,
};

enum class Mode : std::uint8_t {
  kSemiMarkov,
  kMarkov,
};

std::string_view ModeName(Mode mode);  // "semi" / "markov"
Mode ParseMode(std::string_view name);  // accepts semi, semi-markov, markov

struct EnvState {
  int t = 0;
  int p = 0;
  LatentFlag flag = LatentFlag::kNone;

  Cell cell() const { return {t, p}; }
  friend bool operator==(const EnvState&, const EnvState&) = default;
};

// Visible projection of the state. The goal is present only when the
// environment is configured for goal-augmented observations.
struct Observation {
  int t = 0;
  int p = 0;
  std::optional<Cell> goal;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct ScenarioConfig {
  std::string name;
  Cell start;
  Cell goal;
  Mode mode = Mode::kSemiMarkov;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

// Throws std::invalid_argument if start == goal or either lies off the grid.
void ValidateScenario(const PhaseDiagram& diagram,
                      const ScenarioConfig& scenario);

// Named scenarios on the 32x32 default geometry (goal (30,10)):
// hard (2,22), mod (16,14), easy (26,12).
std::vector<ScenarioConfig> DefaultScenarios(Mode mode);
// Analogous scenarios on the 16x16 geometry (goal (15,5)):
// hard (1,11), mod (8,7), easy (13,6).
std::vector<ScenarioConfig> Scaled16Scenarios(Mode mode);

// Looks up a scenario by name; throws std::invalid_argument if absent.
const ScenarioConfig& FindScenario(const std::vector<ScenarioConfig>& scenarios,
                                   std::string_view name);

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;       // goal reached
  bool truncated = false;  // step cap reached without reaching the goal
};

// One application of the dynamics. Pure; shared by the environment and the
// exact solvers.
//
// Markov mode, and semi-Markov mode away from boundaries: each action moves
// one cell along its axis, clamped at the grid edge. At a semi-Markov
// boundary cell, leaving along the crossing axis in direction d takes the
// ordered pair (partner(d), d):
//
//   horizontal boundary:  +P = Q+ then W+    -P = Q- then W-
//   vertical boundary:    +T = W+ then Q+    -T = W- then Q-
//
// The partner action primes the latent flag without moving. A crossing
// action moves only if the matching flag is set and otherwise stays put and
// clears the flag. Every action that is not a priming action leaves the flag
// clear, including a move blocked by the grid edge.
EnvState ApplyAction(const PhaseDiagram& diagram, Mode mode,
                     const EnvState& state, Action action);

inline constexpr int kDefaultStepCap = 10'000;

struct EnvOptions {
  int step_cap = kDefaultStepCap;
  bool goal_augmented = false;
};

class Environment {
 public:
  // Throws std::invalid_argument for an invalid scenario.
  Environment(PhaseDiagram diagram, ScenarioConfig scenario,
              EnvOptions options = {});

  Observation Reset();

  // Throws std::logic_error if called before Reset() or after the episode
  // has terminated (goal or truncation).
  StepResult Step(Action action);

  // Throws std::logic_error before the first Reset().
  Observation Observe() const;

  const PhaseDiagram& diagram() const { return diagram_; }
  const ScenarioConfig& scenario() const { return scenario_; }
  const EnvOptions& options() const { return options_; }
  void set_step_cap(int step_cap);

  // Full latent state, for diagnostics and tests.
  const EnvState& state() const { return state_; }
  int steps() const { return steps_; }
  bool terminated() const { return terminated_; }
  bool is_reset() const { return is_reset_; }

 private:
  PhaseDiagram diagram_;
  ScenarioConfig scenario_;
  EnvOptions options_;
  EnvState state_;
  int steps_ = 0;
  bool is_reset_ = false;
  bool terminated_ = false;
};

// Scales every coordinate to [0, 1] by its axis maximum. Layout:
// [t, p] or, with a goal, [t, p, goal_t, goal_p].
std::vector<double> EncodeObservation(const Observation& obs,
                                      const PhaseDiagram& diagram);

inline int EncodedSize(bool goal_augmented) { return goal_augmented ? 4 : 2; }

}  // namespace phasechange::env

#endif  // PHASECHANGE_ENVIRONMENT_HPP_
