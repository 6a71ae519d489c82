#pragma once

// Three-layer feedforward network: identity input, tanh hidden, linear output.
//
// Parameters are enumerated in one canonical order wherever a flat view is
// needed (optimizers, checkpoints):
//   hidden_weights (row-major), hidden_bias, output_weights (row-major),
//   output_bias.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fxnet/errors.hpp"
#include "fxnet/linalg.hpp"
#include "fxnet/preprocess.hpp"
#include "fxnet/random.hpp"

namespace fxnet {

struct MlpShape {
  std::size_t inputs = 20;
  std::size_t hidden = 40;
  std::size_t outputs = 1;

  std::size_t parameter_count() const noexcept {
    return hidden * inputs + hidden + outputs * hidden + outputs;
  }
  bool operator==(const MlpShape&) const = default;
};

/// Weight containers of an MlpShape. Used both for the network itself and for
/// its gradient, which has exactly the same layout.
struct MlpParameters {
  Matrix hidden_weights;  // hidden x inputs
  Vector hidden_bias;     // hidden
  Matrix output_weights;  // outputs x hidden
  Vector output_bias;     // outputs

  MlpParameters() = default;
  explicit MlpParameters(const MlpShape& s)
      : hidden_weights(s.hidden, s.inputs),
        hidden_bias(s.hidden, 0.0),
        output_weights(s.outputs, s.hidden),
        output_bias(s.outputs, 0.0) {}

  MlpShape shape() const noexcept {
    return {hidden_weights.cols(), hidden_weights.rows(), output_weights.rows()};
  }

  std::size_t parameter_count() const noexcept {
    return hidden_weights.size() + hidden_bias.size() + output_weights.size() + output_bias.size();
  }

  /// Calls fn(span) for each block in canonical order.
  template <typename Fn>
  void for_each_block(Fn&& fn) {
    fn(hidden_weights.flat());
    fn(std::span<double>(hidden_bias));
    fn(output_weights.flat());
    fn(std::span<double>(output_bias));
  }
  template <typename Fn>
  void for_each_block(Fn&& fn) const {
    fn(hidden_weights.flat());
    fn(std::span<const double>(hidden_bias));
    fn(output_weights.flat());
    fn(std::span<const double>(output_bias));
  }

  Vector flatten() const {
    Vector out;
    out.reserve(parameter_count());
    for_each_block([&](std::span<const double> block) { out.insert(out.end(), block.begin(), block.end()); });
    return out;
  }

  void assign(std::span<const double> flat) {
    require_size(flat.size(), parameter_count(), "MlpParameters::assign");
    std::size_t offset = 0;
    for_each_block([&](std::span<double> block) {
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), block.size(), block.begin());
      offset += block.size();
    });
  }

  bool finite() const {
    bool ok = true;
    for_each_block([&](std::span<const double> block) { ok = ok && all_finite(block); });
    return ok;
  }

  bool operator==(const MlpParameters&) const = default;
};

using MlpNetwork = MlpParameters;
using MlpGradient = MlpParameters;

/// Weights uniform in [-scale, scale] from the seeded generator, biases zero.
/// Draw order follows the canonical enumeration.
inline MlpNetwork init_mlp(const MlpShape& shape, std::uint64_t seed, double scale) {
  if (shape.inputs < 1 || shape.hidden < 1 || shape.outputs < 1) {
    throw DomainError("layer sizes must be at least 1");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("init scale must be positive");
  MlpNetwork net(shape);
  Rng rng(seed);
  for (double& w : net.hidden_weights.flat()) w = rng.uniform(-scale, scale);
  for (double& w : net.output_weights.flat()) w = rng.uniform(-scale, scale);
  return net;
}

struct MlpActivations {
  Vector output;
  Vector hidden;
};

/// h = tanh(W_h x + b_h), y = W_o h + b_o.
inline MlpActivations mlp_forward(const MlpNetwork& net, std::span<const double> input) {
  require_size(input.size(), net.hidden_weights.cols(), "mlp_forward input");
  if (!all_finite(input)) throw ShapeError("mlp_forward: non-finite input");
  MlpActivations act{net.output_bias, net.hidden_bias};
  gemv_add(net.hidden_weights, input, act.hidden);
  for (double& h : act.hidden) h = std::tanh(h);
  gemv_add(net.output_weights, act.hidden, act.output);
  return act;
}

/// Inputs plus row-major targets (samples x outputs). A SupervisedSet is the
/// single-output case.
struct BatchView {
  const Matrix& inputs;
  std::span<const double> targets;

  BatchView(const Matrix& in, std::span<const double> t) : inputs(in), targets(t) {}
  BatchView(const SupervisedSet& set) : inputs(set.inputs), targets(set.targets) {}  // NOLINT

  std::size_t size() const noexcept { return inputs.rows(); }
};

inline void check_batch(const MlpNetwork& net, const BatchView& data) {
  if (data.size() == 0) throw ShapeError("empty dataset");
  require_size(data.inputs.cols(), net.hidden_weights.cols(), "dataset columns");
  require_size(data.targets.size(), data.size() * net.output_weights.rows(), "dataset targets");
}

/// Mean over samples of the squared error, summed across outputs.
inline double mlp_loss(const MlpNetwork& net, const BatchView& data) {
  check_batch(net, data);
  const std::size_t n_out = net.output_weights.rows();
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto y = mlp_forward(net, data.inputs.row(i)).output;
    for (std::size_t k = 0; k < n_out; ++k) {
      const double err = y[k] - data.targets[i * n_out + k];
      sum += err * err;
    }
  }
  return sum / static_cast<double>(data.size());
}

struct LossAndGradient {
  double loss = 0.0;
  MlpGradient gradient;
};

/// Full-batch backpropagation of the MSE. Samples are accumulated in order, so
/// the result is bitwise reproducible.
inline LossAndGradient mlp_gradient(const MlpNetwork& net, const BatchView& data) {
  check_batch(net, data);
  const MlpShape shape = net.shape();
  LossAndGradient out{0.0, MlpGradient(shape)};
  auto& g = out.gradient;
  const double scale = 2.0 / static_cast<double>(data.size());
  Vector delta_out(shape.outputs);
  Vector delta_hidden(shape.hidden);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.inputs.row(i);
    const auto act = mlp_forward(net, x);
    for (std::size_t k = 0; k < shape.outputs; ++k) {
      const double err = act.output[k] - data.targets[i * shape.outputs + k];
      out.loss += err * err;
      delta_out[k] = scale * err;
    }
    axpy(1.0, delta_out, g.output_bias);
    add_outer(g.output_weights, delta_out, act.hidden);

    std::fill(delta_hidden.begin(), delta_hidden.end(), 0.0);
    gemv_t_add(net.output_weights, delta_out, delta_hidden);
    for (std::size_t j = 0; j < shape.hidden; ++j) {
      const double h = act.hidden[j];
      delta_hidden[j] *= 1.0 - h * h;
    }
    axpy(1.0, delta_hidden, g.hidden_bias);
    add_outer(g.hidden_weights, delta_hidden, x);
  }
  out.loss /= static_cast<double>(data.size());
  return out;
}

}  // namespace fxnet
