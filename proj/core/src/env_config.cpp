#include "phasechange/env_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json_util.hpp"

namespace phasechange {
namespace detail {
namespace {

env::Cell ParseCell(const Json& json, std::string_view where) {
  if (!json.is_array() || json.size() != 2 || !json[0].is_number_integer() ||
      !json[1].is_number_integer()) {
    throw std::invalid_argument(std::string(where) +
                                ": expected a [t, p] integer pair");
  }
  return {json[0].get<int>(), json[1].get<int>()};
}

env::Orientation ParseOrientation(const std::string& name,
                                  std::string_view where) {
  if (name == "vertical") return env::Orientation::kVertical;
  if (name == "horizontal") return env::Orientation::kHorizontal;
  throw std::invalid_argument(std::string(where) + ": unknown orientation '" +
                              name + "'");
}

}  // namespace

env::EnvironmentConfig EnvironmentConfigFromJson(const Json& json) {
  RejectUnknownKeys(json, {"width", "height", "boundaries", "scenarios", "mode"},
                    "environment config");
  const int width = Require<int>(json, "width", "environment config");
  const int height = Require<int>(json, "height", "environment config");

  std::vector<env::BoundarySegment> boundaries;
  const Json segments = Optional<Json>(json, "boundaries", Json::array(),
                                       "environment config");
  if (!segments.is_array()) {
    throw std::invalid_argument("environment config: 'boundaries' must be a list");
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::string where = "boundaries[" + std::to_string(i) + "]";
    const Json& seg = segments[i];
    RejectUnknownKeys(seg, {"orientation", "index", "span"}, where);
    const env::Cell span = ParseCell(Require<Json>(seg, "span", where), where);
    boundaries.push_back(
        {ParseOrientation(Require<std::string>(seg, "orientation", where), where),
         Require<int>(seg, "index", where), span.t, span.p});
  }

  env::EnvironmentConfig config;
  config.diagram = env::PhaseDiagram(width, height, std::move(boundaries));
  config.mode = env::ParseMode(
      Optional<std::string>(json, "mode", "semi", "environment config"));

  const Json scenarios = Require<Json>(json, "scenarios", "environment config");
  if (!scenarios.is_array() || scenarios.empty()) {
    throw std::invalid_argument(
        "environment config: 'scenarios' must be a non-empty list");
  }
  config.scenarios.clear();
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const std::string where = "scenarios[" + std::to_string(i) + "]";
    const Json& entry = scenarios[i];
    RejectUnknownKeys(entry, {"name", "start", "goal"}, where);
    env::ScenarioConfig scenario{
        Require<std::string>(entry, "name", where),
        ParseCell(Require<Json>(entry, "start", where), where + ".start"),
        ParseCell(Require<Json>(entry, "goal", where), where + ".goal"),
        config.mode};
    for (const auto& existing : config.scenarios) {
      if (existing.name == scenario.name) {
        throw std::invalid_argument(where + ": duplicate scenario name '" +
                                    scenario.name + "'");
      }
    }
    env::ValidateScenario(config.diagram, scenario);
    config.scenarios.push_back(std::move(scenario));
  }
  return config;
}

}  // namespace detail

namespace env {

EnvironmentConfig EnvironmentConfig::Default() { return {}; }

EnvironmentConfig EnvironmentConfig::Scaled16() {
  return {PhaseDiagram::Scaled16(), Scaled16Scenarios(Mode::kSemiMarkov),
          Mode::kSemiMarkov};
}

std::vector<ScenarioConfig> EnvironmentConfig::ScenariosFor(Mode m) const {
  std::vector<ScenarioConfig> out = scenarios;
  for (auto& scenario : out) scenario.mode = m;
  return out;
}

EnvironmentConfig ParseEnvironmentConfig(std::string_view json_text) {
  detail::Json json;
  try {
    json = detail::Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("environment config: ") + e.what());
  }
  return detail::EnvironmentConfigFromJson(json);
}

EnvironmentConfig LoadEnvironmentConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot read environment config " +
                                path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return ParseEnvironmentConfig(text.str());
}

EnvironmentConfig ResolveEnvironmentConfig(std::string_view name_or_path) {
  if (name_or_path == "default") return EnvironmentConfig::Default();
  if (name_or_path == "scaled16") return EnvironmentConfig::Scaled16();
  return LoadEnvironmentConfig(std::filesystem::path(name_or_path));
}

std::string SerializeEnvironmentConfig(const EnvironmentConfig& config) {
  detail::Json json;
  json["width"] = config.diagram.width();
  json["height"] = config.diagram.height();
  json["boundaries"] = detail::Json::array();
  for (const auto& seg : config.diagram.boundaries()) {
    json["boundaries"].push_back(
        {{"orientation", OrientationName(seg.orientation)},
         {"index", seg.fixed_index},
         {"span", {seg.span_begin, seg.span_end}}});
  }
  json["scenarios"] = detail::Json::array();
  for (const auto& scenario : config.scenarios) {
    json["scenarios"].push_back(
        {{"name", scenario.name},
         {"start", {scenario.start.t, scenario.start.p}},
         {"goal", {scenario.goal.t, scenario.goal.p}}});
  }
  json["mode"] = ModeName(config.mode);
  return json.dump(2) + "\n";
}

}  // namespace env
}  // namespace phasechange
