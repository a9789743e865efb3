#include "phasechange/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json_util.hpp"
#include "phasechange/oracle.hpp"

namespace phasechange::harness {
namespace {

using detail::Json;

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

agents::AgentConfig ParseAgentBlock(const Json& json,
                                    ExperimentConfig& config) {
  constexpr std::string_view kWhere = "experiment config 'agent'";
  detail::RejectUnknownKeys(
      json,
      {"gamma", "batch_size", "learning_rate", "buffer_capacity", "warmup",
       "epsilon_start", "epsilon_decrement", "epsilon_min", "epsilon_cadence",
       "her_fraction",
       "dqn_hidden", "drqn_hidden", "gradient_clip", "updates_per_episode"},
      kWhere);
  agents::AgentConfig a = config.agent;
  a.gamma = detail::Optional(json, "gamma", a.gamma, kWhere);
  a.batch_size = detail::Optional(json, "batch_size", a.batch_size, kWhere);
  a.learning_rate =
      detail::Optional(json, "learning_rate", a.learning_rate, kWhere);
  a.buffer_capacity =
      detail::Optional(json, "buffer_capacity", a.buffer_capacity, kWhere);
  a.warmup = detail::Optional(json, "warmup", a.warmup, kWhere);
  a.epsilon.start =
      detail::Optional(json, "epsilon_start", a.epsilon.start, kWhere);
  a.epsilon.decrement =
      detail::Optional(json, "epsilon_decrement", a.epsilon.decrement, kWhere);
  a.epsilon.floor = detail::Optional(json, "epsilon_min", a.epsilon.floor, kWhere);
  if (json.contains("epsilon_cadence")) {
    a.epsilon.cadence = agents::ParseEpsilonCadence(
        detail::Require<std::string>(json, "epsilon_cadence", kWhere));
  }
  a.her_fraction = detail::Optional(json, "her_fraction", a.her_fraction, kWhere);
  a.gradient_clip =
      detail::Optional(json, "gradient_clip", a.gradient_clip, kWhere);
  a.updates_per_episode = detail::Optional(json, "updates_per_episode",
                                           a.updates_per_episode, kWhere);
  config.dqn_hidden = detail::Optional(json, "dqn_hidden", config.dqn_hidden, kWhere);
  config.drqn_hidden =
      detail::Optional(json, "drqn_hidden", config.drqn_hidden, kWhere);
  return a;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<std::uint64_t> ExperimentConfig::DefaultSeeds(int count) {
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(std::max(count, 0)));
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i;
  return seeds;
}

void ExperimentConfig::Validate() const {
  if (episodes < 1) throw std::invalid_argument("episodes must be positive");
  if (eval_interval < 1) {
    throw std::invalid_argument("eval interval must be positive");
  }
  if (episodes % eval_interval != 0) {
    throw std::invalid_argument("eval interval must divide the episode budget");
  }
  if (!(eval_epsilon >= 0.0 && eval_epsilon <= 1.0)) {
    throw std::invalid_argument("eval epsilon must lie in [0, 1]");
  }
  if (eval_step_cap < 1 || train_step_cap < 1) {
    throw std::invalid_argument("step caps must be positive");
  }
  if (seeds.empty()) throw std::invalid_argument("seed list is empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() !=
      seeds.size()) {
    throw std::invalid_argument("seed list contains duplicates");
  }
  if (agents.empty() || scenarios.empty() || modes.empty()) {
    throw std::invalid_argument("agents, scenarios and modes must be non-empty");
  }
  if (jobs < 1) throw std::invalid_argument("jobs must be positive");
  if (dqn_hidden < 1 || drqn_hidden < 1) {
    throw std::invalid_argument("hidden widths must be positive");
  }
  for (const auto& name : agents) AgentFor(name).Validate();
  for (const auto& name : scenarios) {
    env::ValidateScenario(environment.diagram,
                          env::FindScenario(environment.scenarios, name));
  }
}

agents::AgentConfig ExperimentConfig::AgentFor(std::string_view agent_name) const {
  agents::AgentConfig a = agent;
  agents::ApplyAgentName(agent_name, a);
  a.hidden_size = a.kind == agents::AgentKind::kDqn ? dqn_hidden : drqn_hidden;
  return a;
}

ExperimentConfig ParseExperimentConfig(std::string_view json_text,
                                       const std::filesystem::path& base_dir) {
  constexpr std::string_view kWhere = "experiment config";
  Json json;
  try {
    json = Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("experiment config: ") + e.what());
  }
  detail::RejectUnknownKeys(
      json,
      {"environment", "agents", "scenarios", "modes", "agent", "episodes",
       "eval_interval", "eval_epsilon", "eval_step_cap", "train_step_cap",
       "seeds", "num_seeds", "base_seed", "output_dir", "jobs"},
      kWhere);

  ExperimentConfig config;
  if (json.contains("environment")) {
    const Json& e = json.at("environment");
    if (e.is_string()) {
      std::string ref = e.get<std::string>();
      if (ref != "default" && ref != "scaled16" &&
          std::filesystem::path(ref).is_relative() && !base_dir.empty()) {
        ref = (base_dir / ref).string();
      }
      config.environment = env::ResolveEnvironmentConfig(ref);
    } else {
      config.environment = detail::EnvironmentConfigFromJson(e);
    }
  }
  config.agents = detail::Optional(json, "agents", config.agents, kWhere);
  config.scenarios = detail::Optional(json, "scenarios", config.scenarios, kWhere);
  if (json.contains("modes")) {
    config.modes.clear();
    for (const auto& m :
         detail::Require<std::vector<std::string>>(json, "modes", kWhere)) {
      config.modes.push_back(env::ParseMode(m));
    }
  }
  if (json.contains("agent")) config.agent = ParseAgentBlock(json.at("agent"), config);
  config.episodes = detail::Optional(json, "episodes", config.episodes, kWhere);
  config.eval_interval =
      detail::Optional(json, "eval_interval", config.eval_interval, kWhere);
  config.eval_epsilon =
      detail::Optional(json, "eval_epsilon", config.eval_epsilon, kWhere);
  config.eval_step_cap =
      detail::Optional(json, "eval_step_cap", config.eval_step_cap, kWhere);
  config.train_step_cap =
      detail::Optional(json, "train_step_cap", config.train_step_cap, kWhere);
  if (json.contains("seeds") && json.contains("num_seeds")) {
    throw std::invalid_argument(
        "experiment config: give either 'seeds' or 'num_seeds', not both");
  }
  if (json.contains("seeds")) {
    config.seeds =
        detail::Require<std::vector<std::uint64_t>>(json, "seeds", kWhere);
  } else if (json.contains("num_seeds")) {
    config.seeds = ExperimentConfig::DefaultSeeds(
        detail::Require<int>(json, "num_seeds", kWhere));
  }
  config.base_seed = detail::Optional(json, "base_seed", config.base_seed, kWhere);
  config.output_dir =
      detail::Optional<std::string>(json, "output_dir", "results", kWhere);
  config.jobs = detail::Optional(json, "jobs", config.jobs, kWhere);
  config.Validate();
  return config;
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot read experiment config " + path.string());
  }
  std::ostringstream text;
  text << in.rdbuf();
  return ParseExperimentConfig(text.str(), path.parent_path());
}

std::uint64_t DeriveSeed(std::uint64_t base_seed, const RunKey& key) {
  const std::string text = std::to_string(base_seed) + "|" + key.agent + "|" +
                           key.scenario + "|" +
                           std::string(env::ModeName(key.mode)) + "|" +
                           std::to_string(key.seed);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return SplitMix64(hash);
}

RunSeeds SplitRunSeed(std::uint64_t run_seed) {
  return {SplitMix64(run_seed ^ 1), SplitMix64(run_seed ^ 2),
          SplitMix64(run_seed ^ 3)};
}

std::vector<EvalPoint> RunSeed(const ExperimentConfig& config,
                               const RunKey& key, const SeedHooks& hooks) {
  const agents::AgentConfig agent_config = config.AgentFor(key.agent);
  const env::ScenarioConfig scenario = env::FindScenario(
      config.environment.ScenariosFor(key.mode), key.scenario);
  const bool goal_augmented = agent_config.her_enabled;
  env::Environment environment(
      config.environment.diagram, scenario,
      {.step_cap = config.train_step_cap, .goal_augmented = goal_augmented});

  const RunSeeds seeds = SplitRunSeed(DeriveSeed(config.base_seed, key));
  agents::Agent agent(agent_config, env::EncodedSize(goal_augmented),
                      seeds.init);
  std::mt19937_64 train_rng(seeds.train);
  std::mt19937_64 eval_rng(seeds.eval);
  agents::EpsilonSchedule schedule = agent_config.epsilon;

  std::vector<EvalPoint> points;
  points.reserve(static_cast<std::size_t>(config.episodes / config.eval_interval));
  for (int episode = 1; episode <= config.episodes; ++episode) {
    agents::RunEpisode(agent, environment, schedule, /*train=*/true,
                       config.train_step_cap, train_rng);
    if (episode % config.eval_interval != 0) continue;
    if (hooks.before_eval) hooks.before_eval(episode, agent);
    agents::EpsilonSchedule eval_schedule =
        agents::EpsilonSchedule::Constant(config.eval_epsilon);
    const agents::EpisodeRecord eval =
        agents::RunEpisode(agent, environment, eval_schedule, /*train=*/false,
                           config.eval_step_cap, eval_rng);
    points.push_back({key.agent, std::string(env::ModeName(key.mode)),
                      key.scenario, key.seed, episode,
                      eval.success ? eval.steps : config.eval_step_cap,
                      eval.success});
  }
  return points;
}

ExperimentResult RunExperiment(const ExperimentConfig& config,
                               const ProgressFn& progress) {
  config.Validate();
  for (const auto& mode : config.modes) {
    for (const auto& name : config.scenarios) {
      env::ScenarioConfig scenario =
          env::FindScenario(config.environment.scenarios, name);
      scenario.mode = mode;
      oracle::OptimalSteps(config.environment.diagram, scenario);
    }
  }

  std::vector<RunKey> keys;
  for (const auto& agent : config.agents) {
    for (env::Mode mode : config.modes) {
      for (const auto& scenario : config.scenarios) {
        for (std::uint64_t seed : config.seeds) {
          keys.push_back({agent, mode, scenario, seed});
        }
      }
    }
  }

  std::vector<std::vector<EvalPoint>> per_run(keys.size());
  std::vector<std::string> errors(keys.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto log = [&](const std::string& line) {
    if (!progress) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    progress(line);
  };
  auto describe = [](const RunKey& k) {
    return k.agent + "/" + std::string(env::ModeName(k.mode)) + "/" +
           k.scenario + "/seed " + std::to_string(k.seed);
  };
  auto worker = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++) {
      try {
        per_run[i] = RunSeed(config, keys[i]);
        log("done " + describe(keys[i]));
      } catch (const agents::DivergenceError& e) {
        errors[i] = e.what();
        log("warning: excluding diverged run " + describe(keys[i]) + ": " +
            e.what());
      }
    }
  };
  const int workers =
      std::min<int>(config.jobs, static_cast<int>(keys.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  ExperimentResult result;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!errors[i].empty()) {
      result.failures.push_back({keys[i], errors[i]});
      continue;
    }
    result.raw.insert(result.raw.end(), per_run[i].begin(), per_run[i].end());
  }
  SortRows(result.raw);
  result.curves = Aggregate(result.raw);
  return result;
}

void SortRows(std::vector<EvalPoint>& raw) {
  std::sort(raw.begin(), raw.end(), [](const EvalPoint& a, const EvalPoint& b) {
    return std::tie(a.agent, a.mode, a.scenario, a.seed, a.episode) <
           std::tie(b.agent, b.mode, b.scenario, b.seed, b.episode);
  });
}

std::vector<LearningCurve> Aggregate(const std::vector<EvalPoint>& raw) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::map<int, std::vector<double>>> groups;
  for (const auto& row : raw) {
    groups[{row.agent, row.mode, row.scenario}][row.episode].push_back(row.steps);
  }
  std::vector<LearningCurve> curves;
  for (const auto& [key, by_episode] : groups) {
    LearningCurve curve{std::get<0>(key), std::get<1>(key), std::get<2>(key), {}};
    for (const auto& [episode, values] : by_episode) {
      const double n = static_cast<double>(values.size());
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= n;
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      const double stddev = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      curve.points.push_back(
          {episode, mean, stddev, static_cast<int>(values.size())});
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

void WriteRawCsv(const std::vector<EvalPoint>& raw,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "agent,mode,scenario,seed,episode,steps,success\n";
  for (const auto& r : raw) {
    out << CsvField(r.agent) << ',' << r.mode << ',' << CsvField(r.scenario)
        << ',' << r.seed << ',' << r.episode << ',' << r.steps << ','
        << (r.success ? 1 : 0) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void WriteAggregateCsv(const std::vector<LearningCurve>& curves,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "agent,mode,scenario,episode,mean_steps,stddev,n_seeds\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out << CsvField(c.agent) << ',' << c.mode << ',' << CsvField(c.scenario)
          << ',' << p.episode << ',' << FormatDouble(p.mean_steps) << ','
          << FormatDouble(p.stddev) << ',' << p.n_seeds << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ResultFiles WriteResults(const ExperimentResult& result,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ResultFiles files{dir / "raw.csv", dir / "aggregate.csv"};
  WriteRawCsv(result.raw, files.raw);
  WriteAggregateCsv(result.curves, files.aggregate);
  return files;
}

std::vector<EvalPoint> ReadRawCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "agent,mode,scenario,seed,episode,steps,success") {
    throw std::runtime_error(path.string() + ": unexpected raw CSV header");
  }
  std::vector<EvalPoint> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7) {
      throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
    }
    rows.push_back({fields[0], fields[1], fields[2], std::stoull(fields[3]),
                    std::stoi(fields[4]), std::stoi(fields[5]),
                    fields[6] == "1"});
  }
  return rows;
}

double SignTestPValue(int wins, int losses) {
  if (wins < 0 || losses < 0) throw std::invalid_argument("negative count");
  const int n = wins + losses;
  if (n == 0) return 1.0;
  const double log_half_n = n * std::log(0.5);
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                  std::lgamma(n - k + 1.0) + log_half_n);
  }
  return std::min(1.0, p);
}

}  // namespace phasechange::harness
