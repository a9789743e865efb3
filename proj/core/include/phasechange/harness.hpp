#ifndef PHASECHANGE_HARNESS_HPP_
#define PHASECHANGE_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "phasechange/agent.hpp"
#include "phasechange/env_config.hpp"
#include "phasechange/environment.hpp"

namespace phasechange::harness {

// Name of the environment variable that, when set, replaces the configured
// output directory.
inline constexpr const char* kOutputDirEnvVar = "PHASECHANGE_OUTPUT_DIR";

struct ExperimentConfig {
  env::EnvironmentConfig environment;
  std::vector<std::string> agents = {"dqn", "drqn", "dqn_her", "drqn_her"};
  std::vector<std::string> scenarios = {"easy", "mod", "hard"};
  std::vector<env::Mode> modes = {env::Mode::kSemiMarkov, env::Mode::kMarkov};

  // Shared hyperparameters; kind, HER and hidden width are set per agent.
  agents::AgentConfig agent;
  int dqn_hidden = 48;
  int drqn_hidden = 128;

  int episodes = 20'000;
  int eval_interval = 50;
  double eval_epsilon = 0.2;
  int eval_step_cap = env::kDefaultStepCap;
  int train_step_cap = env::kDefaultStepCap;

  std::vector<std::uint64_t> seeds = DefaultSeeds(30);
  std::uint64_t base_seed = 20'200;

  std::filesystem::path output_dir = "results";
  int jobs = 1;

  static std::vector<std::uint64_t> DefaultSeeds(int count);

  // Throws std::invalid_argument: non-positive episodes or interval, an
  // interval that does not divide the budget, an empty or duplicated seed
  // list, unknown agent or scenario names.
  void Validate() const;

  agents::AgentConfig AgentFor(std::string_view agent_name) const;
};

// JSON; see README for the schema. Unknown keys are rejected.
ExperimentConfig ParseExperimentConfig(std::string_view json_text,
                                       const std::filesystem::path& base_dir = {});
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);

struct RunKey {
  std::string agent;
  env::Mode mode = env::Mode::kSemiMarkov;
  std::string scenario;
  std::uint64_t seed = 0;
};

// Per-run seed: FNV-1a over "base|agent|scenario|mode|seed", finished with
// SplitMix64.
std::uint64_t DeriveSeed(std::uint64_t base_seed, const RunKey& key);

// Independent streams drawn from a run seed.
struct RunSeeds {
  std::uint64_t init;   // network weights and replay/HER sampling
  std::uint64_t train;  // exploration during training episodes
  std::uint64_t eval;   // exploration during evaluation episodes
};
RunSeeds SplitRunSeed(std::uint64_t run_seed);

struct EvalPoint {
  std::string agent;
  std::string mode;
  std::string scenario;
  std::uint64_t seed = 0;
  int episode = 0;  // training episodes completed
  int steps = 0;    // the eval step cap when the goal was not reached
  bool success = false;

  friend bool operator==(const EvalPoint&, const EvalPoint&) = default;
};

struct CurvePoint {
  int episode = 0;
  double mean_steps = 0.0;
  double stddev = 0.0;  // sample standard deviation over seeds
  int n_seeds = 0;
};

struct LearningCurve {
  std::string agent;
  std::string mode;
  std::string scenario;
  std::vector<CurvePoint> points;
};

struct RunFailure {
  RunKey key;
  std::string message;
};

struct ExperimentResult {
  std::vector<EvalPoint> raw;  // sorted by agent, mode, scenario, seed, episode
  std::vector<LearningCurve> curves;
  std::vector<RunFailure> failures;
};

struct SeedHooks {
  // Called with the agent just before each evaluation episode.
  std::function<void(int episode, const agents::Agent&)> before_eval;
};

// One (agent, scenario, mode, seed) run: a fresh agent trains for
// `episodes` episodes and is evaluated every `eval_interval` episodes with
// a fixed epsilon, no learning and no buffer writes. Throws
// agents::DivergenceError if training diverges.
std::vector<EvalPoint> RunSeed(const ExperimentConfig& config,
                               const RunKey& key, const SeedHooks& hooks = {});

using ProgressFn = std::function<void(const std::string&)>;

// Runs the full agent x scenario x mode x seed matrix on `config.jobs`
// worker threads. Diverged runs are reported in `failures`, logged through
// `progress`, and excluded from the curves.
ExperimentResult RunExperiment(const ExperimentConfig& config,
                               const ProgressFn& progress = {});

std::vector<LearningCurve> Aggregate(const std::vector<EvalPoint>& raw);

void SortRows(std::vector<EvalPoint>& raw);

// Header: agent,mode,scenario,seed,episode,steps,success
void WriteRawCsv(const std::vector<EvalPoint>& raw,
                 const std::filesystem::path& path);
// Header: agent,mode,scenario,episode,mean_steps,stddev,n_seeds
void WriteAggregateCsv(const std::vector<LearningCurve>& curves,
                       const std::filesystem::path& path);

struct ResultFiles {
  std::filesystem::path raw;
  std::filesystem::path aggregate;
};

// Writes raw.csv and aggregate.csv into `dir`, creating it if needed.
ResultFiles WriteResults(const ExperimentResult& result,
                         const std::filesystem::path& dir);

std::vector<EvalPoint> ReadRawCsv(const std::filesystem::path& path);

// One-sided exact sign test: P(X >= wins) for X ~ Binomial(wins + losses,
// 1/2). Ties are dropped by the caller.
double SignTestPValue(int wins, int losses);

}  // namespace phasechange::harness

#endif  // PHASECHANGE_HARNESS_HPP_
