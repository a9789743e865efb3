#include "phasechange/environment.hpp"

#include <stdexcept>
#include <utility>

namespace phasechange::env {
namespace {

struct Move {
  int dt;
  int dp;
};

constexpr Move MoveOf(Action action) {
  switch (action) {
    case Action::kQMinus:
      return {-1, 0};
    case Action::kQPlus:
      return {1, 0};
    case Action::kWMinus:
      return {0, -1};
    case Action::kWPlus:
      return {0, 1};
  }
  return {0, 0};
}

constexpr bool IsHeat(Action action) {
  return action == Action::kQMinus || action == Action::kQPlus;
}

constexpr bool IsPositive(Action action) {
  return action == Action::kQPlus || action == Action::kWPlus;
}

EnvState ClampedMove(const PhaseDiagram& diagram, const EnvState& state,
                     Action action) {
  const Move move = MoveOf(action);
  const Cell next{state.t + move.dt, state.p + move.dp};
  if (!diagram.Contains(next)) return {state.t, state.p, LatentFlag::kNone};
  return {next.t, next.p, LatentFlag::kNone};
}

}  // namespace

std::string_view ModeName(Mode mode) {
  return mode == Mode::kMarkov ? "markov" : "semi";
}

Mode ParseMode(std::string_view name) {
  if (name == "semi" || name == "semi-markov" || name == "semimarkov") {
    return Mode::kSemiMarkov;
  }
  if (name == "markov") return Mode::kMarkov;
  throw std::invalid_argument("unknown mode '" + std::string(name) +
                              "' (expected semi or markov)");
}

void ValidateScenario(const PhaseDiagram& diagram,
                      const ScenarioConfig& scenario) {
  const std::string where = "scenario '" + scenario.name + "'";
  if (!diagram.Contains(scenario.start)) {
    throw std::invalid_argument(where + ": start " +
                                ToString(scenario.start) + " is off the grid");
  }
  if (!diagram.Contains(scenario.goal)) {
    throw std::invalid_argument(where + ": goal " + ToString(scenario.goal) +
                                " is off the grid");
  }
  if (scenario.start == scenario.goal) {
    throw std::invalid_argument(where + ": start equals goal");
  }
}

std::vector<ScenarioConfig> DefaultScenarios(Mode mode) {
  const Cell goal{30, 10};
  return {{"easy", {26, 12}, goal, mode},
          {"mod", {16, 14}, goal, mode},
          {"hard", {2, 22}, goal, mode}};
}

std::vector<ScenarioConfig> Scaled16Scenarios(Mode mode) {
  const Cell goal{15, 5};
  return {{"easy", {13, 6}, goal, mode},
          {"mod", {8, 7}, goal, mode},
          {"hard", {1, 11}, goal, mode}};
}

const ScenarioConfig& FindScenario(const std::vector<ScenarioConfig>& scenarios,
                                   std::string_view name) {
  for (const auto& scenario : scenarios) {
    if (scenario.name == name) return scenario;
  }
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

EnvState ApplyAction(const PhaseDiagram& diagram, Mode mode,
                     const EnvState& state, Action action) {
  const std::optional<Orientation> boundary = diagram.BoundaryAt(state.cell());
  if (mode == Mode::kMarkov || !boundary) {
    return ClampedMove(diagram, state, action);
  }

  // On a vertical boundary the heat actions cross and work actions prime;
  // on a horizontal boundary it is the other way round.
  const bool crosses = (*boundary == Orientation::kVertical) == IsHeat(action);
  if (!crosses) {
    return {state.t, state.p,
            IsPositive(action) ? LatentFlag::kPrimedPositive
                               : LatentFlag::kPrimedNegative};
  }
  const LatentFlag required = IsPositive(action) ? LatentFlag::kPrimedPositive
                                                 : LatentFlag::kPrimedNegative;
  if (state.flag != required) return {state.t, state.p, LatentFlag::kNone};
  return ClampedMove(diagram, state, action);
}

Environment::Environment(PhaseDiagram diagram, ScenarioConfig scenario,
                         EnvOptions options)
    : diagram_(std::move(diagram)),
      scenario_(std::move(scenario)),
      options_(options) {
  ValidateScenario(diagram_, scenario_);
  set_step_cap(options_.step_cap);
}

void Environment::set_step_cap(int step_cap) {
  if (step_cap < 1) throw std::invalid_argument("step cap must be positive");
  options_.step_cap = step_cap;
}

Observation Environment::Reset() {
  state_ = {scenario_.start.t, scenario_.start.p, LatentFlag::kNone};
  steps_ = 0;
  is_reset_ = true;
  terminated_ = false;
  return Observe();
}

StepResult Environment::Step(Action action) {
  if (!is_reset_) throw std::logic_error("Step() called before Reset()");
  if (terminated_) {
    throw std::logic_error("Step() called on a terminated episode");
  }
  state_ = ApplyAction(diagram_, scenario_.mode, state_, action);
  ++steps_;

  StepResult result;
  result.done = state_.cell() == scenario_.goal;
  result.reward = result.done ? 1.0 : 0.0;
  result.truncated = !result.done && steps_ >= options_.step_cap;
  terminated_ = result.done || result.truncated;
  result.observation = Observe();
  return result;
}

Observation Environment::Observe() const {
  if (!is_reset_) throw std::logic_error("Observe() called before Reset()");
  Observation obs{state_.t, state_.p, std::nullopt};
  if (options_.goal_augmented) obs.goal = scenario_.goal;
  return obs;
}

std::vector<double> EncodeObservation(const Observation& obs,
                                      const PhaseDiagram& diagram) {
  const double t_max = diagram.width() - 1;
  const double p_max = diagram.height() - 1;
  std::vector<double> features{obs.t / t_max, obs.p / p_max};
  if (obs.goal) {
    features.push_back(obs.goal->t / t_max);
    features.push_back(obs.goal->p / p_max);
  }
  return features;
}

}  // namespace phasechange::env
