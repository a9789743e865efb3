#include "phasechange/gradcheck.hpp"

#include <algorithm>
#include <random>

#include "phasechange/agent.hpp"

namespace phasechange::gradcheck {
namespace {

using nn::Matrix;
using nn::Vector;

Vector RandomVector(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

std::vector<agents::Transition> RandomBatch(const nn::Architecture& arch,
                                            int count, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> action(0, env::kNumActions - 1);
  std::bernoulli_distribution terminal(0.25);
  std::uniform_real_distribution<double> hidden(-0.9, 0.9);
  std::vector<agents::Transition> batch(count);
  for (auto& tr : batch) {
    tr.obs = RandomVector(arch.input_size, rng);
    tr.next_obs = RandomVector(arch.input_size, rng);
    tr.action = env::ActionFromIndex(action(rng));
    tr.done = terminal(rng);
    tr.reward = tr.done ? 1.0 : 0.0;
    if (arch.kind == nn::NetworkKind::kGru) {
      tr.h_pre = Vector::NullaryExpr(arch.hidden_size, [&] { return hidden(rng); });
      tr.h_post = Vector::NullaryExpr(arch.hidden_size, [&] { return hidden(rng); });
    }
  }
  return batch;
}

InstanceResult CheckInstance(nn::NetworkKind kind, std::mt19937_64& rng,
                             double step) {
  std::uniform_int_distribution<int> width(2, 10);
  std::bernoulli_distribution goal_augmented(0.5);
  const nn::Architecture arch{kind, goal_augmented(rng) ? 4 : 2, width(rng),
                              nn::kNumQValues};
  const nn::NetworkParams params = nn::NetworkParams::Random(arch, rng);
  const std::vector<agents::Transition> storage = RandomBatch(arch, 5, rng);
  std::vector<const agents::Transition*> batch;
  for (const auto& tr : storage) batch.push_back(&tr);
  const std::vector<double> targets = agents::TdTargets(params, batch, 0.95);

  InstanceResult result;
  result.architecture = arch;
  nn::NetworkParams probe = params;
  const nn::LossFunction loss = [&](const Vector& theta, Vector* grad) {
    probe.values() = theta;
    return agents::SquaredErrorLoss(probe, batch, targets, grad);
  };
  result.param_error =
      nn::FiniteDifferenceCheck(params.values(), loss, step).max_relative_error;

  if (kind == nn::NetworkKind::kGru) {
    // Scalar loss sum(w .* q) as a function of the incoming hidden state.
    const Vector x = RandomVector(arch.input_size, rng);
    const Vector w = RandomVector(nn::kNumQValues, rng);
    const Vector h0 = RandomVector(arch.hidden_size, rng).array() - 0.5;
    const nn::LossFunction hidden_loss = [&](const Vector& h, Vector* grad) {
      const nn::GruOutput out = nn::GruForward(params, x, h);
      if (grad != nullptr) {
        *grad = nn::GruBackward(params, out.cache, w).h_prev.col(0);
      }
      return w.dot(out.q.col(0));
    };
    result.hidden_error =
        nn::FiniteDifferenceCheck(h0, hidden_loss, step).max_relative_error;
  }
  return result;
}

}  // namespace

Summary RunGradientChecks(int instances, std::uint64_t seed, double step) {
  std::mt19937_64 rng(seed);
  Summary summary;
  for (int i = 0; i < instances; ++i) {
    summary.mlp.push_back(CheckInstance(nn::NetworkKind::kMlp, rng, step));
    summary.mlp_max_error =
        std::max(summary.mlp_max_error, summary.mlp.back().param_error);
    summary.gru.push_back(CheckInstance(nn::NetworkKind::kGru, rng, step));
    summary.gru_max_error =
        std::max({summary.gru_max_error, summary.gru.back().param_error,
                  summary.gru.back().hidden_error});
  }
  return summary;
}

}  // namespace phasechange::gradcheck
