#include "phasechange/agent.hpp"

#include <cmath>
#include <utility>

namespace phasechange::agents {
namespace {

using nn::Matrix;

int ArgMax(const Vector& q) {
  int best = 0;
  for (int a = 1; a < q.size(); ++a) {
    if (q[a] > q[best]) best = a;
  }
  return best;
}

void CheckFinite(const Matrix& q) {
  if (!q.allFinite()) throw DivergenceError("non-finite Q-values");
}

struct BatchMatrices {
  Matrix obs;
  Matrix next_obs;
  Matrix h_pre;
  Matrix h_post;
};

BatchMatrices Gather(const nn::NetworkParams& params,
                     std::span<const Transition* const> batch) {
  const auto& arch = params.architecture();
  const auto n = static_cast<Eigen::Index>(batch.size());
  const bool recurrent = arch.kind == nn::NetworkKind::kGru;
  BatchMatrices m;
  m.obs.resize(arch.input_size, n);
  m.next_obs.resize(arch.input_size, n);
  if (recurrent) {
    m.h_pre.resize(arch.hidden_size, n);
    m.h_post.resize(arch.hidden_size, n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& tr = *batch[i];
    if (tr.obs.size() != arch.input_size ||
        tr.next_obs.size() != arch.input_size) {
      throw std::invalid_argument("transition observation size mismatch");
    }
    m.obs.col(i) = tr.obs;
    m.next_obs.col(i) = tr.next_obs;
    if (recurrent) {
      if (!tr.h_pre || !tr.h_post) {
        throw std::invalid_argument(
            "recurrent training needs stored hidden states");
      }
      m.h_pre.col(i) = *tr.h_pre;
      m.h_post.col(i) = *tr.h_post;
    }
  }
  return m;
}

std::vector<double> TargetsFrom(const nn::NetworkParams& params,
                                std::span<const Transition* const> batch,
                                const BatchMatrices& m, double gamma) {
  const bool recurrent =
      params.architecture().kind == nn::NetworkKind::kGru;
  const Matrix next_q = recurrent
                            ? nn::GruForward(params, m.next_obs, m.h_post).q
                            : nn::MlpForward(params, m.next_obs).q;
  CheckFinite(next_q);
  std::vector<double> targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& tr = *batch[i];
    targets[i] = tr.done ? tr.reward
                         : tr.reward + gamma * next_q.col(
                                                   static_cast<Eigen::Index>(i))
                                                   .maxCoeff();
  }
  return targets;
}

double SquaredErrorFrom(const nn::NetworkParams& params,
                        std::span<const Transition* const> batch,
                        const BatchMatrices& m, std::span<const double> targets,
                        Vector* gradient) {
  const bool recurrent =
      params.architecture().kind == nn::NetworkKind::kGru;
  nn::MlpOutput mlp;
  nn::GruOutput gru;
  if (recurrent) {
    gru = nn::GruForward(params, m.obs, m.h_pre);
  } else {
    mlp = nn::MlpForward(params, m.obs);
  }
  const Matrix& q = recurrent ? gru.q : mlp.q;
  CheckFinite(q);

  const auto n = static_cast<Eigen::Index>(batch.size());
  Matrix dq = Matrix::Zero(nn::kNumQValues, n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = env::ToIndex(batch[i]->action);
    const double err = q(a, i) - targets[i];
    loss += err * err;
    dq(a, i) = 2.0 * err / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);
  if (!std::isfinite(loss)) throw DivergenceError("non-finite TD loss");
  if (gradient != nullptr) {
    *gradient = recurrent ? nn::GruBackward(params, gru.cache, dq).params
                          : nn::MlpBackward(params, mlp.cache, dq);
  }
  return loss;
}

}  // namespace

void AgentConfig::Validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1)");
  }
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  if (buffer_capacity < batch_size) {
    throw std::invalid_argument("batch size exceeds buffer capacity");
  }
  if (warmup < 0) throw std::invalid_argument("warmup must be non-negative");
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (hidden_size < 0) throw std::invalid_argument("hidden size is negative");
  if (!(her_fraction >= 0.0 && her_fraction <= 1.0)) {
    throw std::invalid_argument("HER fraction must lie in [0, 1]");
  }
  if (epsilon.decrement < 0.0 || epsilon.floor < 0.0 || epsilon.start > 1.0 ||
      epsilon.floor > epsilon.start) {
    throw std::invalid_argument("invalid epsilon schedule");
  }
  if (updates_per_episode < 1) {
    throw std::invalid_argument("updates per episode must be positive");
  }
  if (gradient_clip < 0.0) {
    throw std::invalid_argument("gradient clip must be non-negative");
  }
}

std::string_view EpsilonCadenceName(EpsilonCadence cadence) {
  return cadence == EpsilonCadence::kPerStep ? "step" : "episode";
}

EpsilonCadence ParseEpsilonCadence(std::string_view name) {
  if (name == "step") return EpsilonCadence::kPerStep;
  if (name == "episode") return EpsilonCadence::kPerEpisode;
  throw std::invalid_argument("unknown epsilon cadence '" + std::string(name) +
                              "' (expected step or episode)");
}

std::string AgentName(const AgentConfig& config) {
  std::string name = config.kind == AgentKind::kDqn ? "dqn" : "drqn";
  if (config.her_enabled) name += "_her";
  return name;
}

void ApplyAgentName(std::string_view name, AgentConfig& config) {
  if (name == "dqn" || name == "dqn_her") {
    config.kind = AgentKind::kDqn;
  } else if (name == "drqn" || name == "drqn_her") {
    config.kind = AgentKind::kDrqn;
  } else {
    throw std::invalid_argument("unknown agent '" + std::string(name) +
                                "' (expected dqn, drqn, dqn_her or drqn_her)");
  }
  config.her_enabled = name.ends_with("_her");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : storage_(capacity) {
  if (capacity == 0) {
    throw std::invalid_argument("replay buffer capacity must be positive");
  }
}

void ReplayBuffer::Add(Transition transition) {
  storage_[head_] = std::move(transition);
  head_ = (head_ + 1) % storage_.size();
  if (size_ < storage_.size()) ++size_;
}

const Transition& ReplayBuffer::operator[](std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay buffer index");
  const std::size_t oldest = (head_ + storage_.size() - size_) % storage_.size();
  return storage_[(oldest + i) % storage_.size()];
}

std::vector<const Transition*> ReplayBuffer::Sample(std::size_t count,
                                                    std::mt19937_64& rng) const {
  if (size_ == 0) throw std::logic_error("sampling from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<const Transition*> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(&(*this)[pick(rng)]);
  return out;
}

std::vector<Transition> HerRelabel(std::vector<Transition> episode,
                                   double fraction, std::mt19937_64& rng,
                                   int* relabeled_count) {
  std::bernoulli_distribution select(fraction);
  int relabeled = 0;
  for (Transition& tr : episode) {
    if (tr.obs.size() != 4 || tr.next_obs.size() != 4) {
      throw std::invalid_argument(
          "hindsight relabeling needs goal-augmented observations");
    }
    if (tr.reward != 0.0 || !select(rng)) continue;
    tr.reward = 1.0;
    tr.done = true;
    tr.goal = tr.achieved;
    tr.obs.tail<2>() = tr.next_obs.head<2>();
    tr.next_obs.tail<2>() = tr.next_obs.head<2>();
    ++relabeled;
  }
  if (relabeled_count != nullptr) *relabeled_count = relabeled;
  return episode;
}

std::vector<double> TdTargets(const nn::NetworkParams& params,
                              std::span<const Transition* const> batch,
                              double gamma) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  return TargetsFrom(params, batch, Gather(params, batch), gamma);
}

double SquaredErrorLoss(const nn::NetworkParams& params,
                        std::span<const Transition* const> batch,
                        std::span<const double> targets, Vector* gradient) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (targets.size() != batch.size()) {
    throw std::invalid_argument("one target per transition required");
  }
  return SquaredErrorFrom(params, batch, Gather(params, batch), targets,
                          gradient);
}

double TdLoss(const nn::NetworkParams& params,
              std::span<const Transition* const> batch, double gamma,
              Vector* gradient) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const BatchMatrices m = Gather(params, batch);
  const std::vector<double> targets = TargetsFrom(params, batch, m, gamma);
  return SquaredErrorFrom(params, batch, m, targets, gradient);
}

Agent::Agent(AgentConfig config, int input_size, std::uint64_t seed)
    : config_((config.Validate(), config)),
      input_size_(input_size),
      params_(nn::Architecture{}),
      adam_(0, {}),
      buffer_(static_cast<std::size_t>(config_.buffer_capacity)),
      rng_(seed) {
  const nn::Architecture arch{
      recurrent() ? nn::NetworkKind::kGru : nn::NetworkKind::kMlp, input_size,
      config_.ResolvedHiddenSize(), nn::kNumQValues};
  params_ = nn::NetworkParams::Random(arch, rng_);
  adam_ = nn::AdamState(params_.size(), {.learning_rate = config_.learning_rate});
  BeginEpisode();
}

void Agent::BeginEpisode() {
  if (recurrent()) {
    hidden_ = Vector::Zero(config_.ResolvedHiddenSize());
  } else {
    hidden_.resize(0);
  }
}

env::Action Agent::SelectAction(const Vector& obs, double epsilon,
                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> random_action(0, env::kNumActions - 1);
  const bool explore = coin(rng) < epsilon;
  if (recurrent()) {
    Vector next;
    const Vector q = nn::QValues(params_, obs, hidden_, &next);
    hidden_ = std::move(next);
    if (explore) return env::ActionFromIndex(random_action(rng));
    if (!q.allFinite()) throw DivergenceError("non-finite Q-values");
    return env::ActionFromIndex(ArgMax(q));
  }
  if (explore) return env::ActionFromIndex(random_action(rng));
  const Vector q = nn::QValues(params_, obs);
  if (!q.allFinite()) throw DivergenceError("non-finite Q-values");
  return env::ActionFromIndex(ArgMax(q));
}

Vector Agent::QValues(const Vector& obs) const {
  if (recurrent()) return nn::QValues(params_, obs, hidden_, nullptr);
  return nn::QValues(params_, obs);
}

TrainStats Agent::StoreAndMaybeTrain(std::vector<Transition> episode) {
  TrainStats stats;
  if (config_.her_enabled) {
    episode = HerRelabel(std::move(episode), config_.her_fraction, rng_,
                         &stats.relabeled);
  }
  for (Transition& tr : episode) buffer_.Add(std::move(tr));
  stats.buffer_size = buffer_.size();
  if (buffer_.size() < static_cast<std::size_t>(config_.warmup) ||
      buffer_.empty()) {
    return stats;
  }
  double total = 0.0;
  for (int i = 0; i < config_.updates_per_episode; ++i) {
    const auto batch =
        buffer_.Sample(static_cast<std::size_t>(config_.batch_size), rng_);
    total += TrainOnBatch(batch);
  }
  stats.loss = total / config_.updates_per_episode;
  stats.trained = true;
  return stats;
}

double Agent::TrainOnBatch(std::span<const Transition* const> batch) {
  Vector grad;
  const double loss = TdLoss(params_, batch, config_.gamma, &grad);
  if (config_.gradient_clip > 0.0) {
    const double norm = grad.norm();
    if (norm > config_.gradient_clip) grad *= config_.gradient_clip / norm;
  }
  nn::AdamUpdate(params_, grad, adam_);
  if (!params_.values().allFinite()) {
    throw DivergenceError("non-finite parameters after update");
  }
  return loss;
}

EpisodeRecord RunEpisode(Agent& agent, env::Environment& environment,
                         EpsilonSchedule& schedule, bool train, int step_cap,
                         std::mt19937_64& rng) {
  environment.set_step_cap(step_cap);
  const env::PhaseDiagram& diagram = environment.diagram();
  const env::Cell goal = environment.scenario().goal;
  env::Observation obs = environment.Reset();
  agent.BeginEpisode();
  Vector x = Eigen::Map<const Vector>(
      env::EncodeObservation(obs, diagram).data(),
      env::EncodedSize(obs.goal.has_value()));
  if (x.size() != agent.input_size()) {
    throw std::invalid_argument("observation size does not match the agent");
  }

  EpisodeRecord record;
  while (true) {
    std::optional<Vector> h_pre;
    if (train && agent.recurrent()) h_pre = agent.hidden();
    const env::Action action = agent.SelectAction(x, schedule.Value(), rng);
    if (train) schedule.OnStep();
    const env::StepResult step = environment.Step(action);
    ++record.steps;
    const std::vector<double> features =
        env::EncodeObservation(step.observation, diagram);
    Vector next = Eigen::Map<const Vector>(
        features.data(), static_cast<Eigen::Index>(features.size()));
    if (train) {
      Transition tr;
      tr.obs = x;
      tr.action = action;
      tr.reward = step.reward;
      tr.next_obs = next;
      tr.done = step.done;
      tr.goal = goal;
      tr.achieved = {step.observation.t, step.observation.p};
      if (agent.recurrent()) {
        tr.h_pre = std::move(h_pre);
        tr.h_post = agent.hidden();
      }
      record.transitions.push_back(std::move(tr));
    }
    if (step.done || step.truncated) {
      record.success = step.done;
      record.truncated = step.truncated;
      break;
    }
    x = std::move(next);
  }
  if (train) {
    schedule.OnEpisodeEnd();
    record.train_stats = agent.StoreAndMaybeTrain(record.transitions);
  }
  return record;
}

}  // namespace phasechange::agents
