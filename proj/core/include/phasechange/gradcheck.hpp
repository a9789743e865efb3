#ifndef PHASECHANGE_GRADCHECK_HPP_
#define PHASECHANGE_GRADCHECK_HPP_

#include <cstdint>
#include <vector>

#include "phasechange/nn.hpp"

namespace phasechange::gradcheck {

struct InstanceResult {
  nn::Architecture architecture;
  double param_error = 0.0;   // TD-loss parameter gradient
  double hidden_error = 0.0;  // GRU only: gradient w.r.t. h_prev
};

struct Summary {
  std::vector<InstanceResult> mlp;
  std::vector<InstanceResult> gru;
  double mlp_max_error = 0.0;
  double gru_max_error = 0.0;  // includes the h_prev checks
};

// Builds `instances` random MLP and GRU networks (widths 2..10, inputs 2 or
// 4) with random TD batches, and compares analytic gradients against
// central differences with the given step. Targets are frozen at the
// initial parameters, matching the semi-gradient used in training.
Summary RunGradientChecks(int instances, std::uint64_t seed,
                          double step = 1e-5);

}  // namespace phasechange::gradcheck

#endif  // PHASECHANGE_GRADCHECK_HPP_
