#ifndef PHASECHANGE_AGENT_HPP_
#define PHASECHANGE_AGENT_HPP_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phasechange/environment.hpp"
#include "phasechange/geometry.hpp"
#include "phasechange/nn.hpp"

namespace phasechange::agents {

using nn::Vector;

enum class AgentKind : std::uint8_t {
  kDqn,   // dense hidden layer
  kDrqn,  // GRU hidden layer
};

// Raised when Q-values or the training loss stop being finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// When the schedule ticks: once per training environment step, or once per
// training episode.
enum class EpsilonCadence : std::uint8_t { kPerStep, kPerEpisode };

std::string_view EpsilonCadenceName(EpsilonCadence cadence);
EpsilonCadence ParseEpsilonCadence(std::string_view name);

// eps(k) = max(floor, start - decrement * k), k = ticks so far.
struct EpsilonSchedule {
  double start = 1.0;
  double decrement = 1e-5;
  double floor = 0.01;
  EpsilonCadence cadence = EpsilonCadence::kPerStep;
  std::int64_t ticks = 0;

  double Value() const {
    return std::max(floor, start - decrement * static_cast<double>(ticks));
  }
  void Advance() { ++ticks; }
  void OnStep() {
    if (cadence == EpsilonCadence::kPerStep) Advance();
  }
  void OnEpisodeEnd() {
    if (cadence == EpsilonCadence::kPerEpisode) Advance();
  }

  static EpsilonSchedule Constant(double epsilon) {
    return {epsilon, 0.0, epsilon, EpsilonCadence::kPerStep, 0};
  }
};

struct AgentConfig {
  AgentKind kind = AgentKind::kDqn;
  bool her_enabled = false;
  double gamma = 0.95;
  int batch_size = 127;
  // 0 selects the default for the kind: 48 dense units or 128 GRU units.
  int hidden_size = 0;
  int buffer_capacity = 100'000;
  int warmup = 1'000;
  double learning_rate = 1e-3;
  EpsilonSchedule epsilon;
  double her_fraction = 0.05;
  // Global-norm gradient clipping; 0 disables it.
  double gradient_clip = 0.0;
  // Adam steps taken after each episode once warm; each draws a fresh batch.
  int updates_per_episode = 1;

  int ResolvedHiddenSize() const {
    if (hidden_size > 0) return hidden_size;
    return kind == AgentKind::kDqn ? 48 : 128;
  }

  // Throws std::invalid_argument when a field is out of range.
  void Validate() const;
};

// Names used on the command line and in result files:
// dqn, drqn, dqn_her, drqn_her.
std::string AgentName(const AgentConfig& config);
// Sets kind and her_enabled from a name, leaving other fields alone.
void ApplyAgentName(std::string_view name, AgentConfig& config);

struct Transition {
  Vector obs;
  env::Action action = env::Action::kQMinus;
  double reward = 0.0;
  Vector next_obs;
  bool done = false;  // goal reached; truncation is not terminal
  env::Cell goal;
  env::Cell achieved;  // position recorded in next_obs
  // Recurrent agents only: hidden state before consuming obs / next_obs.
  std::optional<Vector> h_pre;
  std::optional<Vector> h_post;
};

// Bounded FIFO; the oldest transition is evicted when full.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void Add(Transition transition);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return storage_.size(); }
  bool empty() const { return size_ == 0; }

  // i = 0 is the oldest stored transition.
  const Transition& operator[](std::size_t i) const;

  // Uniform sampling with replacement.
  std::vector<const Transition*> Sample(std::size_t count,
                                        std::mt19937_64& rng) const;

 private:
  std::vector<Transition> storage_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
};

// Relabels each zero-reward transition independently with probability
// `fraction` as a success toward the state it actually reached: reward 1,
// done, goal = achieved, and the goal features inside obs/next_obs
// rewritten. Transitions with reward 1 pass through untouched. Requires
// goal-augmented (4-feature) observations; throws std::invalid_argument
// otherwise.
std::vector<Transition> HerRelabel(std::vector<Transition> episode,
                                   double fraction, std::mt19937_64& rng,
                                   int* relabeled_count = nullptr);

// r for terminal transitions, r + gamma * max_a Q(s', a) otherwise, with
// the same parameters producing the targets. Recurrent parameters evaluate
// s' from the stored h_post. Throws DivergenceError on non-finite values.
std::vector<double> TdTargets(const nn::NetworkParams& params,
                              std::span<const Transition* const> batch,
                              double gamma);

// Mean of (Q(s, a) - target)^2 over the batch for externally supplied
// targets. When `gradient` is non-null it receives d(loss)/d(params).
double SquaredErrorLoss(const nn::NetworkParams& params,
                        std::span<const Transition* const> batch,
                        std::span<const double> targets, Vector* gradient);

// Mean squared TD error: targets from TdTargets, then SquaredErrorLoss, so
// the gradient flows only through Q(s, a).
double TdLoss(const nn::NetworkParams& params,
              std::span<const Transition* const> batch, double gamma,
              Vector* gradient);

struct TrainStats {
  bool trained = false;  // false while the buffer is below warmup
  double loss = 0.0;  // mean pre-update loss over the episode's steps
  std::size_t buffer_size = 0;
  int relabeled = 0;
};

class Agent {
 public:
  // `seed` initializes the network weights and the agent's replay/HER
  // sampling stream.
  Agent(AgentConfig config, int input_size, std::uint64_t seed);

  const AgentConfig& config() const { return config_; }
  bool recurrent() const { return config_.kind == AgentKind::kDrqn; }
  int input_size() const { return input_size_; }

  // Zeroes the acting hidden state.
  void BeginEpisode();

  // Epsilon-greedy with ties broken toward the lowest action index. A
  // recurrent agent always runs its forward pass, so the acting hidden
  // state advances even on exploratory steps.
  env::Action SelectAction(const Vector& obs, double epsilon,
                           std::mt19937_64& rng);

  // Q(obs, .) using the current acting hidden state, without advancing it.
  Vector QValues(const Vector& obs) const;

  // Acting hidden state; empty for DQN.
  const Vector& hidden() const { return hidden_; }

  // Appends the episode (HER-relabeled when enabled) and, once the buffer
  // holds at least `warmup` transitions, takes `updates_per_episode` (by
  // default exactly one) gradient steps, each on a uniformly sampled batch.
  TrainStats StoreAndMaybeTrain(std::vector<Transition> episode);

  // One Adam step on the batch; returns the pre-update loss.
  double TrainOnBatch(std::span<const Transition* const> batch);

  const ReplayBuffer& buffer() const { return buffer_; }
  const nn::NetworkParams& params() const { return params_; }
  nn::NetworkParams& mutable_params() { return params_; }
  const nn::AdamState& optimizer() const { return adam_; }
  std::int64_t gradient_steps() const { return adam_.step; }

 private:
  AgentConfig config_;
  int input_size_;
  nn::NetworkParams params_;
  nn::AdamState adam_;
  ReplayBuffer buffer_;
  std::mt19937_64 rng_;
  Vector hidden_;
};

struct EpisodeRecord {
  int steps = 0;
  bool success = false;
  bool truncated = false;
  std::vector<Transition> transitions;  // filled only when training
  std::optional<TrainStats> train_stats;
};

// Resets the environment and the agent's hidden state, then acts until the
// goal or `step_cap` actions. When `train` is set the schedule ticks at its
// cadence, every transition is recorded and the episode is handed to
// StoreAndMaybeTrain. Otherwise the schedule and buffer are left
// untouched. `rng` drives exploration.
EpisodeRecord RunEpisode(Agent& agent, env::Environment& environment,
                         EpsilonSchedule& schedule, bool train, int step_cap,
                         std::mt19937_64& rng);

}  // namespace phasechange::agents

#endif  // PHASECHANGE_AGENT_HPP_
