#include "phasechange/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace phasechange::nn {
namespace {

std::vector<TensorInfo> BuildLayout(const Architecture& arch) {
  const int in = arch.input_size;
  const int hid = arch.hidden_size;
  const int out = arch.output_size;
  std::vector<TensorInfo> layout;
  if (arch.kind == NetworkKind::kMlp) {
    layout = {{"W1", hid, in, 0, in},
              {"b1", hid, 1, 0, in},
              {"W2", out, hid, 0, hid},
              {"b2", out, 1, 0, hid}};
  } else {
    for (const char* gate : {"z", "r", "h"}) {
      layout.push_back({std::string("W") + gate, hid, in, 0, in});
      layout.push_back({std::string("U") + gate, hid, hid, 0, hid});
      layout.push_back({std::string("b") + gate, hid, 1, 0, in});
    }
    layout.push_back({"Wo", out, hid, 0, hid});
    layout.push_back({"bo", out, 1, 0, hid});
  }
  Eigen::Index offset = 0;
  for (auto& info : layout) {
    info.offset = offset;
    offset += static_cast<Eigen::Index>(info.rows) * info.cols;
  }
  return layout;
}

void CheckArchitecture(const Architecture& arch) {
  if (arch.input_size < 1 || arch.hidden_size < 1) {
    throw std::invalid_argument("network sizes must be positive");
  }
  if (arch.output_size != kNumQValues) {
    throw std::invalid_argument("output layer must have exactly 4 units");
  }
}

void CheckKind(const NetworkParams& params, NetworkKind kind) {
  if (params.architecture().kind != kind) {
    throw std::invalid_argument(std::string("expected ") +
                                std::string(NetworkKindName(kind)) +
                                " parameters");
  }
}

void CheckRows(const Matrix& m, int rows, const char* what) {
  if (m.rows() != rows) {
    throw std::invalid_argument(std::string(what) + " has " +
                                std::to_string(m.rows()) + " rows, expected " +
                                std::to_string(rows));
  }
}

void CheckCols(const Matrix& m, Eigen::Index cols, const char* what) {
  if (m.cols() != cols) {
    throw std::invalid_argument(std::string(what) + " batch size mismatch");
  }
}

Matrix Sigmoid(const Matrix& a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

// Writes into the flat gradient at a tensor's offset.
Eigen::Map<Matrix> GradSlot(Vector& grad, const NetworkParams& params,
                            int slot) {
  const TensorInfo& info = params.layout()[slot];
  return {grad.data() + info.offset, info.rows, info.cols};
}

}  // namespace

std::string_view NetworkKindName(NetworkKind kind) {
  return kind == NetworkKind::kMlp ? "mlp" : "gru";
}

NetworkKind ParseNetworkKind(std::string_view name) {
  if (name == "mlp") return NetworkKind::kMlp;
  if (name == "gru") return NetworkKind::kGru;
  throw std::invalid_argument("unknown network kind '" + std::string(name) +
                              "'");
}

Eigen::Index ParameterCount(const Architecture& arch) {
  CheckArchitecture(arch);
  const auto layout = BuildLayout(arch);
  const auto& last = layout.back();
  return last.offset + static_cast<Eigen::Index>(last.rows) * last.cols;
}

NetworkParams::NetworkParams(Architecture arch)
    : arch_(arch), layout_((CheckArchitecture(arch), BuildLayout(arch))) {
  values_ = Vector::Zero(ParameterCount(arch_));
}

NetworkParams NetworkParams::Random(Architecture arch, std::mt19937_64& rng) {
  NetworkParams params(arch);
  for (const auto& info : params.layout_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(info.fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const Eigen::Index n = static_cast<Eigen::Index>(info.rows) * info.cols;
    for (Eigen::Index i = 0; i < n; ++i) {
      params.values_[info.offset + i] = dist(rng);
    }
  }
  return params;
}

Eigen::Map<const Matrix> NetworkParams::tensor(int slot) const {
  const TensorInfo& info = layout_.at(slot);
  return {values_.data() + info.offset, info.rows, info.cols};
}

Eigen::Map<Matrix> NetworkParams::mutable_tensor(int slot) {
  const TensorInfo& info = layout_.at(slot);
  return {values_.data() + info.offset, info.rows, info.cols};
}

MlpOutput MlpForward(const NetworkParams& params, const Matrix& inputs) {
  CheckKind(params, NetworkKind::kMlp);
  CheckRows(inputs, params.architecture().input_size, "input");
  MlpOutput out;
  out.cache.input = inputs;
  out.cache.pre_activation =
      (params.tensor(kW1) * inputs).colwise() + params.tensor(kB1).col(0);
  out.cache.hidden = out.cache.pre_activation.cwiseMax(0.0);
  out.q = (params.tensor(kW2) * out.cache.hidden).colwise() +
          params.tensor(kB2).col(0);
  return out;
}

Vector MlpBackward(const NetworkParams& params, const MlpCache& cache,
                   const Matrix& dq) {
  CheckKind(params, NetworkKind::kMlp);
  CheckRows(dq, kNumQValues, "output gradient");
  CheckCols(dq, cache.input.cols(), "output gradient");
  Vector grad = Vector::Zero(params.size());
  GradSlot(grad, params, kW2).noalias() = dq * cache.hidden.transpose();
  GradSlot(grad, params, kB2) = dq.rowwise().sum();
  const Matrix d_hidden = params.tensor(kW2).transpose() * dq;
  const Matrix d_pre =
      (cache.pre_activation.array() > 0.0).select(d_hidden, 0.0);
  GradSlot(grad, params, kW1).noalias() = d_pre * cache.input.transpose();
  GradSlot(grad, params, kB1) = d_pre.rowwise().sum();
  return grad;
}

GruOutput GruForward(const NetworkParams& params, const Matrix& inputs,
                     const Matrix& h_prev) {
  CheckKind(params, NetworkKind::kGru);
  const Architecture& arch = params.architecture();
  CheckRows(inputs, arch.input_size, "input");
  CheckRows(h_prev, arch.hidden_size, "hidden state");
  CheckCols(h_prev, inputs.cols(), "hidden state");

  GruOutput out;
  GruCache& c = out.cache;
  c.input = inputs;
  c.h_prev = h_prev;
  Matrix a = params.tensor(kWz) * inputs;
  a.noalias() += params.tensor(kUz) * h_prev;
  c.update = Sigmoid(a.colwise() + params.tensor(kBz).col(0));
  a.noalias() = params.tensor(kWr) * inputs;
  a.noalias() += params.tensor(kUr) * h_prev;
  c.reset = Sigmoid(a.colwise() + params.tensor(kBr).col(0));
  const Matrix gated = c.reset.cwiseProduct(h_prev);
  a.noalias() = params.tensor(kWh) * inputs;
  a.noalias() += params.tensor(kUh) * gated;
  c.candidate = (a.colwise() + params.tensor(kBh).col(0)).array().tanh().matrix();
  c.h_next = h_prev + c.update.cwiseProduct(c.candidate - h_prev);
  out.q = (params.tensor(kWo) * c.h_next).colwise() + params.tensor(kBo).col(0);
  out.h_next = c.h_next;
  return out;
}

GruGradients GruBackward(const NetworkParams& params, const GruCache& c,
                         const Matrix& dq) {
  CheckKind(params, NetworkKind::kGru);
  CheckRows(dq, kNumQValues, "output gradient");
  CheckCols(dq, c.input.cols(), "output gradient");
  GruGradients g;
  g.params = Vector::Zero(params.size());
  Vector& grad = g.params;

  GradSlot(grad, params, kWo).noalias() = dq * c.h_next.transpose();
  GradSlot(grad, params, kBo) = dq.rowwise().sum();
  const Matrix d_h = params.tensor(kWo).transpose() * dq;

  const Matrix d_update = d_h.cwiseProduct(c.candidate - c.h_prev);
  const Matrix d_candidate = d_h.cwiseProduct(c.update);
  g.h_prev = d_h - d_h.cwiseProduct(c.update);

  const Matrix d_cand_pre =
      (d_candidate.array() * (1.0 - c.candidate.array().square())).matrix();
  const Matrix gated = c.reset.cwiseProduct(c.h_prev);
  GradSlot(grad, params, kWh).noalias() = d_cand_pre * c.input.transpose();
  GradSlot(grad, params, kUh).noalias() = d_cand_pre * gated.transpose();
  GradSlot(grad, params, kBh) = d_cand_pre.rowwise().sum();
  const Matrix d_gated = params.tensor(kUh).transpose() * d_cand_pre;
  const Matrix d_reset = d_gated.cwiseProduct(c.h_prev);
  g.h_prev += d_gated.cwiseProduct(c.reset);

  const Matrix d_reset_pre =
      (d_reset.array() * c.reset.array() * (1.0 - c.reset.array())).matrix();
  GradSlot(grad, params, kWr).noalias() = d_reset_pre * c.input.transpose();
  GradSlot(grad, params, kUr).noalias() = d_reset_pre * c.h_prev.transpose();
  GradSlot(grad, params, kBr) = d_reset_pre.rowwise().sum();
  g.h_prev.noalias() += params.tensor(kUr).transpose() * d_reset_pre;

  const Matrix d_update_pre =
      (d_update.array() * c.update.array() * (1.0 - c.update.array())).matrix();
  GradSlot(grad, params, kWz).noalias() = d_update_pre * c.input.transpose();
  GradSlot(grad, params, kUz).noalias() = d_update_pre * c.h_prev.transpose();
  GradSlot(grad, params, kBz) = d_update_pre.rowwise().sum();
  g.h_prev.noalias() += params.tensor(kUz).transpose() * d_update_pre;
  return g;
}

Vector QValues(const NetworkParams& params, const Vector& input) {
  return MlpForward(params, input).q.col(0);
}

Vector QValues(const NetworkParams& params, const Vector& input,
               const Vector& h_prev, Vector* h_next) {
  GruOutput out = GruForward(params, input, h_prev);
  if (h_next != nullptr) *h_next = out.h_next.col(0);
  return out.q.col(0);
}

AdamState::AdamState(Eigen::Index size, AdamOptions opts)
    : first_moment(Vector::Zero(size)),
      second_moment(Vector::Zero(size)),
      options(opts) {}

void AdamUpdate(Vector& params, const Vector& grads, AdamState& state) {
  if (grads.size() != params.size() ||
      state.first_moment.size() != params.size()) {
    throw std::invalid_argument("Adam: parameter/gradient size mismatch");
  }
  const AdamOptions& o = state.options;
  ++state.step;
  state.first_moment = o.beta1 * state.first_moment + (1.0 - o.beta1) * grads;
  state.second_moment = o.beta2 * state.second_moment +
                        (1.0 - o.beta2) * grads.cwiseAbs2();
  const double step = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(o.beta1, step);
  const double bias2 = 1.0 - std::pow(o.beta2, step);
  params.array() -= o.learning_rate * (state.first_moment.array() / bias1) /
                    ((state.second_moment.array() / bias2).sqrt() + o.epsilon);
}

void AdamUpdate(NetworkParams& params, const Vector& grads, AdamState& state) {
  AdamUpdate(params.values(), grads, state);
}

GradientCheckResult FiniteDifferenceCheck(const Vector& params,
                                          const LossFunction& loss,
                                          double step) {
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  Vector analytic(params.size());
  const double base = loss(params, &analytic);
  if (!std::isfinite(base)) throw std::domain_error("non-finite loss");

  GradientCheckResult result;
  Vector probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + step;
    const double up = loss(probe, nullptr);
    probe[i] = params[i] - step;
    const double down = loss(probe, nullptr);
    probe[i] = params[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::domain_error("non-finite loss");
    }
    const double numeric = (up - down) / (2.0 * step);
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    const double err = std::abs(analytic[i] - numeric) / denom;
    if (err > result.max_relative_error || result.worst_index < 0) {
      result = {err, i, analytic[i], numeric};
    }
  }
  return result;
}

std::string SerializeParams(const NetworkParams& params) {
  const Architecture& arch = params.architecture();
  std::ostringstream out;
  out << "phasechange-params 1\n"
      << "kind " << NetworkKindName(arch.kind) << "\n"
      << "input " << arch.input_size << "\n"
      << "hidden " << arch.hidden_size << "\n"
      << "output " << arch.output_size << "\n"
      << "values " << params.size() << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", params.values()[i]);
    out << buf;
  }
  return out.str();
}

NetworkParams ParseParams(std::string_view text) {
  std::istringstream in{std::string(text)};
  auto expect = [&in](const char* key) {
    std::string word;
    if (!(in >> word) || word != key) {
      throw std::invalid_argument(std::string("checkpoint: expected '") + key +
                                  "'");
    }
  };
  auto read_int = [&in](const char* key) {
    long long v = 0;
    if (!(in >> v)) {
      throw std::invalid_argument(std::string("checkpoint: bad ") + key);
    }
    return v;
  };
  expect("phasechange-params");
  if (read_int("version") != 1) {
    throw std::invalid_argument("checkpoint: unsupported version");
  }
  expect("kind");
  std::string kind;
  in >> kind;
  Architecture arch;
  arch.kind = ParseNetworkKind(kind);
  expect("input");
  arch.input_size = static_cast<int>(read_int("input"));
  expect("hidden");
  arch.hidden_size = static_cast<int>(read_int("hidden"));
  expect("output");
  arch.output_size = static_cast<int>(read_int("output"));
  NetworkParams params(arch);
  expect("values");
  if (read_int("values") != params.size()) {
    throw std::invalid_argument("checkpoint: value count does not match layout");
  }
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    if (!(in >> params.values()[i])) {
      throw std::invalid_argument("checkpoint: truncated value list");
    }
  }
  return params;
}

void SaveParams(const NetworkParams& params,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << SerializeParams(params);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

NetworkParams LoadParams(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return ParseParams(text.str());
}

}  // namespace phasechange::nn
