#ifndef PHASECHANGE_ENV_CONFIG_HPP_
#define PHASECHANGE_ENV_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "phasechange/environment.hpp"
#include "phasechange/geometry.hpp"

namespace phasechange::env {

// Geometry plus named scenarios, as read from a JSON file:
//
//   {
//     "width": 32, "height": 32,
//     "boundaries": [
//       {"orientation": "vertical", "index": 12, "span": [0, 31]}
//     ],
//     "scenarios": [
//       {"name": "hard", "start": [2, 22], "goal": [30, 10]}
//     ],
//     "mode": "semi"
//   }
//
// "mode" is optional (default "semi") and applies to every scenario.
// Unknown keys are rejected at every level.
struct EnvironmentConfig {
  PhaseDiagram diagram = PhaseDiagram::Default();
  std::vector<ScenarioConfig> scenarios = DefaultScenarios(Mode::kSemiMarkov);
  Mode mode = Mode::kSemiMarkov;

  static EnvironmentConfig Default();
  static EnvironmentConfig Scaled16();

  // Copies of the scenarios with their mode replaced.
  std::vector<ScenarioConfig> ScenariosFor(Mode mode) const;
};

// All three throw std::invalid_argument on malformed or invalid input.
EnvironmentConfig ParseEnvironmentConfig(std::string_view json_text);
EnvironmentConfig LoadEnvironmentConfig(const std::filesystem::path& path);
// "default" and "scaled16" name the built-in geometries; anything else is
// treated as a file path.
EnvironmentConfig ResolveEnvironmentConfig(std::string_view name_or_path);

std::string SerializeEnvironmentConfig(const EnvironmentConfig& config);

}  // namespace phasechange::env

#endif  // PHASECHANGE_ENV_CONFIG_HPP_
