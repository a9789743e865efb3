#include "phasechange/oracle.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace phasechange::oracle {
namespace {

AugmentedState FromIndex(const env::PhaseDiagram& diagram, int index) {
  const int cell = index / kNumFlags;
  return {cell % diagram.width(), cell / diagram.width(),
          static_cast<env::LatentFlag>(index % kNumFlags)};
}

int ArgMax(const double* q) {
  int best = 0;
  for (int a = 1; a < env::kNumActions; ++a) {
    if (q[a] > q[best]) best = a;
  }
  return best;
}

}  // namespace

bool IsBoundaryCrossing(const env::PhaseDiagram& diagram,
                        const AugmentedState& from, const AugmentedState& to) {
  const auto orientation = diagram.BoundaryAt(from.cell());
  if (!orientation) return false;
  return *orientation == env::Orientation::kVertical ? from.t != to.t
                                                     : from.p != to.p;
}

std::optional<ShortestPath> FindShortestPath(
    const env::PhaseDiagram& diagram, const env::ScenarioConfig& scenario) {
  env::ValidateScenario(diagram, scenario);
  const int n = NumAugmentedStates(diagram);
  constexpr int kUnseen = -1;
  std::vector<int> dist(n, kUnseen);
  std::vector<int> crossings(n, 0);
  std::vector<int> queue;
  queue.reserve(n);

  const AugmentedState start{scenario.start.t, scenario.start.p,
                             env::LatentFlag::kNone};
  const int start_index = AugmentedIndex(diagram, start);
  dist[start_index] = 0;
  queue.push_back(start_index);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    const AugmentedState from = FromIndex(diagram, u);
    if (from.cell() == scenario.goal) continue;  // episode ends on entry
    for (env::Action action : env::kAllActions) {
      const AugmentedState to =
          env::ApplyAction(diagram, scenario.mode, from, action);
      const int v = AugmentedIndex(diagram, to);
      const int c = crossings[u] + (IsBoundaryCrossing(diagram, from, to) ? 1 : 0);
      if (dist[v] == kUnseen) {
        dist[v] = dist[u] + 1;
        crossings[v] = c;
        queue.push_back(v);
      } else if (dist[v] == dist[u] + 1) {
        crossings[v] = std::min(crossings[v], c);
      }
    }
  }

  std::optional<ShortestPath> best;
  for (int flag = 0; flag < kNumFlags; ++flag) {
    const int v = AugmentedIndex(
        diagram, {scenario.goal.t, scenario.goal.p,
                  static_cast<env::LatentFlag>(flag)});
    if (dist[v] == kUnseen) continue;
    const ShortestPath candidate{dist[v], crossings[v]};
    if (!best || candidate.steps < best->steps ||
        (candidate.steps == best->steps &&
         candidate.crossings < best->crossings)) {
      best = candidate;
    }
  }
  return best;
}

int OptimalSteps(const env::PhaseDiagram& diagram,
                 const env::ScenarioConfig& scenario) {
  const auto path = FindShortestPath(diagram, scenario);
  if (!path) {
    throw std::runtime_error("goal " + env::ToString(scenario.goal) +
                             " unreachable from " +
                             env::ToString(scenario.start));
  }
  return path->steps;
}

int ManhattanLowerBound(const env::ScenarioConfig& scenario) {
  return std::abs(scenario.goal.t - scenario.start.t) +
         std::abs(scenario.goal.p - scenario.start.p);
}

TabularResult TabularQLearning(const env::PhaseDiagram& diagram,
                               const env::ScenarioConfig& scenario,
                               const TabularOptions& options,
                               std::mt19937_64& rng) {
  env::ValidateScenario(diagram, scenario);
  if (options.episodes < 1 || options.step_cap < 1) {
    throw std::invalid_argument("tabular learner needs episodes and a step cap");
  }
  const int n = NumAugmentedStates(diagram);
  std::vector<double> q(static_cast<std::size_t>(n) * env::kNumActions, 0.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> random_action(0, env::kNumActions - 1);
  const AugmentedState start{scenario.start.t, scenario.start.p,
                             env::LatentFlag::kNone};

  TabularResult result;
  for (int episode = 0; episode < options.episodes; ++episode) {
    if (options.max_training_steps > 0 &&
        result.training_steps >= options.max_training_steps) {
      break;
    }
    const double progress =
        options.episodes > 1
            ? static_cast<double>(episode) / (options.episodes - 1)
            : 1.0;
    const double epsilon = options.epsilon_start +
                           (options.epsilon_end - options.epsilon_start) * progress;
    AugmentedState state = start;
    for (int step = 0; step < options.step_cap; ++step) {
      const int s = AugmentedIndex(diagram, state);
      double* qs = &q[static_cast<std::size_t>(s) * env::kNumActions];
      const int a = coin(rng) < epsilon ? random_action(rng) : ArgMax(qs);
      const AugmentedState next =
          env::ApplyAction(diagram, scenario.mode, state, env::ActionFromIndex(a));
      ++result.training_steps;
      const bool done = next.cell() == scenario.goal;
      double target = done ? 1.0 : 0.0;
      if (!done) {
        const double* qn =
            &q[static_cast<std::size_t>(AugmentedIndex(diagram, next)) *
               env::kNumActions];
        target += options.gamma * *std::max_element(qn, qn + env::kNumActions);
      }
      qs[a] += options.alpha * (target - qs[a]);
      if (done) break;
      if (options.max_training_steps > 0 &&
          result.training_steps >= options.max_training_steps) {
        break;
      }
      state = next;
    }
    ++result.training_episodes;
  }

  // Greedy rollout; a revisited state means the deterministic policy loops.
  std::vector<bool> visited(n, false);
  AugmentedState state = start;
  for (int step = 1; step <= options.step_cap; ++step) {
    const int s = AugmentedIndex(diagram, state);
    if (visited[s]) break;
    visited[s] = true;
    const int a = ArgMax(&q[static_cast<std::size_t>(s) * env::kNumActions]);
    state = env::ApplyAction(diagram, scenario.mode, state, env::ActionFromIndex(a));
    if (state.cell() == scenario.goal) {
      result.greedy_steps = step;
      break;
    }
  }
  return result;
}

std::optional<int> ExpectedCrossings(const std::string& scenario_name) {
  if (scenario_name == "easy") return 0;
  if (scenario_name == "mod") return 1;
  if (scenario_name == "hard") return 2;
  return std::nullopt;
}

ValidationReport ValidateDiagram(
    const env::PhaseDiagram& diagram,
    const std::vector<env::ScenarioConfig>& scenarios) {
  ValidationReport report;
  for (const auto& scenario : scenarios) {
    env::ScenarioConfig markov = scenario;
    markov.mode = env::Mode::kMarkov;
    env::ScenarioConfig semi = scenario;
    semi.mode = env::Mode::kSemiMarkov;
    ScenarioReport entry;
    entry.name = scenario.name;
    entry.markov_steps = OptimalSteps(diagram, markov);
    const auto semi_path = FindShortestPath(diagram, semi);
    if (!semi_path) {
      throw std::runtime_error("scenario '" + scenario.name +
                               "' is unreachable in semi-Markov mode");
    }
    entry.semi_steps = semi_path->steps;
    entry.crossings = semi_path->crossings;
    const auto expected = ExpectedCrossings(scenario.name);
    if (expected && *expected != entry.crossings) {
      throw std::runtime_error(
          "scenario '" + scenario.name + "' crosses " +
          std::to_string(entry.crossings) + " boundaries, expected " +
          std::to_string(*expected));
    }
    report.scenarios.push_back(entry);
  }
  return report;
}

OptimalityReport MakeOptimalityReport(const env::PhaseDiagram& diagram,
                                      const env::ScenarioConfig& scenario,
                                      double agent_mean_steps) {
  OptimalityReport report;
  report.scenario = scenario.name;
  report.mode = scenario.mode;
  report.optimal_steps = OptimalSteps(diagram, scenario);
  report.agent_mean_steps = agent_mean_steps;
  report.ratio = agent_mean_steps / report.optimal_steps;
  return report;
}

}  // namespace phasechange::oracle
