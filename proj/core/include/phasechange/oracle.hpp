#ifndef PHASECHANGE_ORACLE_HPP_
#define PHASECHANGE_ORACLE_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "phasechange/environment.hpp"
#include "phasechange/geometry.hpp"

namespace phasechange::oracle {

// Position plus latent flag: the state over which the semi-Markov
// dynamics are Markov.
using AugmentedState = env::EnvState;

inline constexpr int kNumFlags = 3;

inline int AugmentedIndex(const env::PhaseDiagram& diagram,
                          const AugmentedState& state) {
  return diagram.CellIndex(state.cell()) * kNumFlags +
         static_cast<int>(state.flag);
}

inline int NumAugmentedStates(const env::PhaseDiagram& diagram) {
  return diagram.NumCells() * kNumFlags;
}

// True when the move from `from` to `to` exits a boundary cell along that
// boundary's crossing axis.
bool IsBoundaryCrossing(const env::PhaseDiagram& diagram,
                        const AugmentedState& from, const AugmentedState& to);

struct ShortestPath {
  int steps = 0;
  // Fewest boundary crossings among all paths of length `steps`.
  int crossings = 0;
};

// Breadth-first search over augmented states under the exact environment
// dynamics; nullopt when the goal cannot be entered.
std::optional<ShortestPath> FindShortestPath(const env::PhaseDiagram& diagram,
                                             const env::ScenarioConfig& scenario);

// Minimum number of actions to enter the goal. Throws std::invalid_argument
// for an invalid scenario and std::runtime_error if the goal is unreachable.
int OptimalSteps(const env::PhaseDiagram& diagram,
                 const env::ScenarioConfig& scenario);

// |dt| + |dp|.
int ManhattanLowerBound(const env::ScenarioConfig& scenario);

struct TabularOptions {
  int episodes = 2'000;
  // Stops training early once this many environment steps are spent; 0 means
  // no step budget.
  std::int64_t max_training_steps = 0;
  double alpha = 0.1;
  double gamma = 0.95;
  double epsilon_start = 1.0;  // linear per-episode decay
  double epsilon_end = 0.05;
  int step_cap = env::kDefaultStepCap;
};

struct TabularResult {
  // Length of the greedy episode from the start, nullopt if the greedy
  // policy loops or hits the cap without entering the goal.
  std::optional<int> greedy_steps;
  std::int64_t training_steps = 0;
  int training_episodes = 0;
};

// Tabular Q-learning on the fully observable augmented state.
TabularResult TabularQLearning(const env::PhaseDiagram& diagram,
                               const env::ScenarioConfig& scenario,
                               const TabularOptions& options,
                               std::mt19937_64& rng);

struct ScenarioReport {
  std::string name;
  int markov_steps = 0;
  int semi_steps = 0;
  int crossings = 0;  // boundary crossings on a shortest semi-Markov path
};

struct ValidationReport {
  std::vector<ScenarioReport> scenarios;
};

// Checks every scenario is valid and reachable in both modes, and that the
// scenarios named easy, mod and hard cross 0, 1 and 2 boundaries. Throws
// std::invalid_argument or std::runtime_error on the first violation.
ValidationReport ValidateDiagram(const env::PhaseDiagram& diagram,
                                 const std::vector<env::ScenarioConfig>& scenarios);

// Expected crossing count for a labelled scenario, if it has a label.
std::optional<int> ExpectedCrossings(const std::string& scenario_name);

struct OptimalityReport {
  std::string scenario;
  env::Mode mode = env::Mode::kSemiMarkov;
  int optimal_steps = 0;
  double agent_mean_steps = 0.0;
  double ratio = 0.0;  // agent mean / optimal
};

OptimalityReport MakeOptimalityReport(const env::PhaseDiagram& diagram,
                                      const env::ScenarioConfig& scenario,
                                      double agent_mean_steps);

}  // namespace phasechange::oracle

#endif  // PHASECHANGE_ORACLE_HPP_
