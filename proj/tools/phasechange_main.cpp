// phasechange: train agents, run sweeps and query the exact solvers.
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "phasechange/env_config.hpp"
#include "phasechange/gradcheck.hpp"
#include "phasechange/harness.hpp"
#include "phasechange/oracle.hpp"

namespace {

namespace fs = std::filesystem;
using phasechange::harness::ExperimentConfig;

struct CommonFlags {
  std::string config;
  std::string environment;
  std::optional<int> episodes;
  std::optional<int> seeds;
  std::optional<int> jobs;
  std::string out;
};

ExperimentConfig LoadConfig(const CommonFlags& flags) {
  ExperimentConfig config;
  if (!flags.config.empty()) {
    config = phasechange::harness::LoadExperimentConfig(flags.config);
  }
  if (!flags.environment.empty()) {
    config.environment =
        phasechange::env::ResolveEnvironmentConfig(flags.environment);
  }
  if (flags.episodes) config.episodes = *flags.episodes;
  if (flags.seeds) config.seeds = ExperimentConfig::DefaultSeeds(*flags.seeds);
  if (flags.jobs) config.jobs = *flags.jobs;
  return config;
}

void AddCommonFlags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "Experiment config (JSON)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--env", flags.environment,
                  "Environment: default, scaled16 or a JSON file");
  cmd->add_option("--episodes", flags.episodes, "Training episodes per run");
  cmd->add_option("--seeds", flags.seeds, "Number of seeds (0..N-1)");
  cmd->add_option("--jobs", flags.jobs, "Worker threads");
}

void Progress(const std::string& line) { std::cerr << line << "\n"; }

int RunTrain(const CommonFlags& flags, const std::string& agent,
             const std::string& scenario, const std::string& mode,
             const std::string& aggregate_out) {
  ExperimentConfig config = LoadConfig(flags);
  config.agents = {agent};
  config.scenarios = {scenario};
  config.modes = {phasechange::env::ParseMode(mode)};
  config.Validate();
  const auto result = phasechange::harness::RunExperiment(config, Progress);
  const fs::path raw_path = flags.out.empty() ? fs::path("raw.csv") : fs::path(flags.out);
  if (raw_path.has_parent_path()) fs::create_directories(raw_path.parent_path());
  phasechange::harness::WriteRawCsv(result.raw, raw_path);
  if (!aggregate_out.empty()) {
    phasechange::harness::WriteAggregateCsv(result.curves, aggregate_out);
  }
  std::cout << "wrote " << result.raw.size() << " rows to " << raw_path.string()
            << "\n";
  return result.failures.empty() ? 0 : 3;
}

int RunSweep(const CommonFlags& flags) {
  ExperimentConfig config = LoadConfig(flags);
  if (!flags.out.empty()) {
    config.output_dir = flags.out;
  } else if (const char* dir = std::getenv(phasechange::harness::kOutputDirEnvVar)) {
    config.output_dir = dir;
  }
  config.Validate();
  const auto result = phasechange::harness::RunExperiment(config, Progress);
  const auto files = phasechange::harness::WriteResults(result, config.output_dir);
  std::cout << "wrote " << files.raw.string() << " (" << result.raw.size()
            << " rows) and " << files.aggregate.string() << "\n";
  if (!result.failures.empty()) {
    std::cerr << result.failures.size() << " run(s) diverged and were excluded\n";
    return 3;
  }
  return 0;
}

int RunOracle(const std::string& environment, const std::string& scenario_name,
              const std::string& mode) {
  const auto config = phasechange::env::ResolveEnvironmentConfig(environment);
  auto scenario = phasechange::env::FindScenario(config.scenarios, scenario_name);
  scenario.mode = phasechange::env::ParseMode(mode);
  const auto path = phasechange::oracle::FindShortestPath(config.diagram, scenario);
  if (!path) {
    std::cerr << "error: goal unreachable\n";
    return 1;
  }
  auto semi = scenario;
  semi.mode = phasechange::env::Mode::kSemiMarkov;
  const auto semi_path = phasechange::oracle::FindShortestPath(config.diagram, semi);
  std::cout << path->steps << "\n"
            << "crossings " << (semi_path ? semi_path->crossings : 0) << "\n";
  return 0;
}

int RunValidate(const std::string& environment) {
  const auto config = phasechange::env::ResolveEnvironmentConfig(environment);
  const auto report =
      phasechange::oracle::ValidateDiagram(config.diagram, config.scenarios);
  std::cout << "scenario,markov_steps,semi_steps,crossings\n";
  for (const auto& s : report.scenarios) {
    std::cout << s.name << ',' << s.markov_steps << ',' << s.semi_steps << ','
              << s.crossings << "\n";
  }
  std::cout << "ok\n";
  return 0;
}

int RunGradcheck(int instances, std::uint64_t seed, double step,
                 double tolerance) {
  const auto summary =
      phasechange::gradcheck::RunGradientChecks(instances, seed, step);
  std::cout << "mlp instances " << summary.mlp.size() << " max relative error "
            << summary.mlp_max_error << "\n"
            << "gru instances " << summary.gru.size() << " max relative error "
            << summary.gru_max_error << "\n";
  const bool ok = summary.mlp_max_error < tolerance &&
                  summary.gru_max_error < tolerance;
  std::cout << (ok ? "ok" : "FAILED") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-change environment: agents, oracles and experiments"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  std::string agent = "dqn", scenario = "hard", mode = "semi", aggregate_out;
  auto* train = app.add_subcommand("train", "Train one agent/scenario/mode");
  AddCommonFlags(train, train_flags);
  train->add_option("--agent", agent, "dqn, drqn, dqn_her or drqn_her");
  train->add_option("--scenario", scenario, "Scenario name");
  train->add_option("--mode", mode, "semi or markov");
  train->add_option("--out", train_flags.out, "Raw CSV output path");
  train->add_option("--aggregate-out", aggregate_out,
                    "Optional aggregate CSV output path");

  CommonFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "Run the full experiment matrix");
  AddCommonFlags(sweep, sweep_flags);
  sweep->add_option("--out", sweep_flags.out,
                    std::string("Output directory (else $") +
                        phasechange::harness::kOutputDirEnvVar +
                        ", else the config's output_dir)");

  std::string oracle_env = "default", oracle_scenario = "hard", oracle_mode = "semi";
  auto* oracle = app.add_subcommand("oracle", "Print the optimal step count");
  oracle->add_option("--env", oracle_env, "default, scaled16 or a JSON file");
  oracle->add_option("--scenario", oracle_scenario, "Scenario name");
  oracle->add_option("--mode", oracle_mode, "semi or markov");

  std::string validate_env = "default";
  auto* validate = app.add_subcommand("validate", "Check a phase diagram");
  validate->add_option("--env", validate_env, "default, scaled16 or a JSON file");

  int instances = 20;
  std::uint64_t grad_seed = 1;
  double grad_step = 1e-5, tolerance = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference checks");
  gradcheck->add_option("--instances", instances, "Random networks per kind");
  gradcheck->add_option("--seed", grad_seed, "RNG seed");
  gradcheck->add_option("--step", grad_step, "Central-difference step");
  gradcheck->add_option("--tolerance", tolerance, "Max relative error");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return RunTrain(train_flags, agent, scenario, mode, aggregate_out);
    if (*sweep) return RunSweep(sweep_flags);
    if (*oracle) return RunOracle(oracle_env, oracle_scenario, oracle_mode);
    if (*validate) return RunValidate(validate_env);
    if (*gradcheck) return RunGradcheck(instances, grad_seed, grad_step, tolerance);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
