#ifndef PHASECHANGE_NN_HPP_
#define PHASECHANGE_NN_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace phasechange::nn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr int kNumQValues = 4;

enum class NetworkKind : std::uint8_t {
  kMlp,  // input -> dense + ReLU -> linear output
  kGru,  // input -> GRU cell -> linear output
};

std::string_view NetworkKindName(NetworkKind kind);
NetworkKind ParseNetworkKind(std::string_view name);

struct Architecture {
  NetworkKind kind = NetworkKind::kMlp;
  int input_size = 2;
  int hidden_size = 48;
  int output_size = kNumQValues;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// Tensor slots in declaration order.
enum MlpTensor : int { kW1, kB1, kW2, kB2 };
enum GruTensor : int { kWz, kUz, kBz, kWr, kUr, kBr, kWh, kUh, kBh, kWo, kBo };

struct TensorInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  Eigen::Index offset = 0;
  int fan_in = 0;
};

// Weights and biases stored contiguously in declaration order, each matrix
// column-major. Gradients and optimizer moments use the same flat layout.
//
//   MLP: W1 (H x I), b1 (H), W2 (O x H), b2 (O)
//   GRU: Wz (H x I), Uz (H x H), bz, Wr, Ur, br, Wh, Uh, bh, Wo (O x H), bo
class NetworkParams {
 public:
  // Zero-initialized. Throws std::invalid_argument for non-positive sizes
  // or an output width other than four.
  explicit NetworkParams(Architecture arch);

  // Each tensor uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], where fan_in
  // is the column count of the weight matrix the tensor feeds (biases take
  // the fan-in of their layer's input matrix).
  static NetworkParams Random(Architecture arch, std::mt19937_64& rng);

  const Architecture& architecture() const { return arch_; }
  const std::vector<TensorInfo>& layout() const { return layout_; }

  Vector& values() { return values_; }
  const Vector& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }

  Eigen::Map<const Matrix> tensor(int slot) const;
  Eigen::Map<Matrix> mutable_tensor(int slot);

 private:
  Architecture arch_;
  std::vector<TensorInfo> layout_;
  Vector values_;
};

// Number of scalars for an architecture.
Eigen::Index ParameterCount(const Architecture& arch);

// ---- Dense Q-network -------------------------------------------------------

struct MlpCache {
  Matrix input;           // I x B
  Matrix pre_activation;  // H x B
  Matrix hidden;          // H x B
};

struct MlpOutput {
  Matrix q;  // 4 x B
  MlpCache cache;
};

// q = W2 relu(W1 x + b1) + b2, one column per sample.
// Throws std::invalid_argument on shape mismatch.
MlpOutput MlpForward(const NetworkParams& params, const Matrix& inputs);

// Parameter gradient of a scalar loss whose gradient w.r.t. q is `dq`.
Vector MlpBackward(const NetworkParams& params, const MlpCache& cache,
                   const Matrix& dq);

// ---- Recurrent Q-network ---------------------------------------------------

struct GruCache {
  Matrix input;      // I x B
  Matrix h_prev;     // H x B
  Matrix update;     // z
  Matrix reset;      // r
  Matrix candidate;  // h~
  Matrix h_next;     // H x B
};

struct GruOutput {
  Matrix q;       // 4 x B
  Matrix h_next;  // H x B
  GruCache cache;
};

// Reset gate applied to the previous hidden state inside the candidate:
//
//   z  = sigmoid(Wz x + Uz h + bz)
//   r  = sigmoid(Wr x + Ur h + br)
//   h~ = tanh(Wh x + Uh (r * h) + bh)
//   h' = (1 - z) * h + z * h~
//   q  = Wo h' + bo
//
// Throws std::invalid_argument on shape mismatch.
GruOutput GruForward(const NetworkParams& params, const Matrix& inputs,
                     const Matrix& h_prev);

struct GruGradients {
  Vector params;
  Matrix h_prev;  // H x B
};

GruGradients GruBackward(const NetworkParams& params, const GruCache& cache,
                         const Matrix& dq);

// Single-sample conveniences.
Vector QValues(const NetworkParams& params, const Vector& input);
Vector QValues(const NetworkParams& params, const Vector& input,
               const Vector& h_prev, Vector* h_next);

// ---- Adam ------------------------------------------------------------------

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamState(Eigen::Index size, AdamOptions opts);

  Vector first_moment;
  Vector second_moment;
  std::int64_t step = 0;
  AdamOptions options;
};

// Bias-corrected Adam descent step. Throws std::invalid_argument on shape
// mismatch.
void AdamUpdate(Vector& params, const Vector& grads, AdamState& state);
void AdamUpdate(NetworkParams& params, const Vector& grads, AdamState& state);

// ---- Gradient verification -------------------------------------------------

// Returns the loss at `params` and, when `gradient` is non-null, writes the
// analytic gradient there.
using LossFunction = std::function<double(const Vector& params, Vector* gradient)>;

struct GradientCheckResult {
  double max_relative_error = 0.0;
  Eigen::Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central differences against the analytic gradient, elementwise relative
// error |a - n| / max(|a|, |n|, 1e-6). Throws std::domain_error if the loss
// is non-finite and std::invalid_argument for step <= 0.
GradientCheckResult FiniteDifferenceCheck(const Vector& params,
                                          const LossFunction& loss,
                                          double step);

// ---- Checkpoints -----------------------------------------------------------

// Text layout, one field per line:
//
//   phasechange-params 1
//   kind <mlp|gru>
//   input <I>
//   hidden <H>
//   output <O>
//   values <N>
//   <N lines, one value each, %.17g>
std::string SerializeParams(const NetworkParams& params);
NetworkParams ParseParams(std::string_view text);
void SaveParams(const NetworkParams& params, const std::filesystem::path& path);
NetworkParams LoadParams(const std::filesystem::path& path);

}  // namespace phasechange::nn

#endif  // PHASECHANGE_NN_HPP_
