#pragma once

// Elman simple recurrent network with a single linear output.
//
//   a[t] = W_in x[t] + W_rec h[t-1] + b_h
//   h[t] = tanh(a[t])
//   y[t] = w_out . h[t] + b_o
//
// Canonical weight enumeration, shared with the EKF covariance and with
// checkpoints:
//   input_weights (row-major), recurrent_weights (row-major), hidden_bias,
//   output_weights, output_bias.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <utility>
#include <vector>

#include "fxnet/errors.hpp"
#include "fxnet/linalg.hpp"
#include "fxnet/random.hpp"

namespace fxnet {

struct ElmanShape {
  std::size_t inputs = 20;
  std::size_t hidden = 10;

  std::size_t parameter_count() const noexcept { return hidden * inputs + hidden * hidden + 2 * hidden + 1; }
  bool operator==(const ElmanShape&) const = default;
};

struct ElmanNetwork {
  Matrix input_weights;      // hidden x inputs
  Matrix recurrent_weights;  // hidden x hidden
  Vector hidden_bias;        // hidden
  Matrix output_weights;     // 1 x hidden
  double output_bias = 0.0;

  ElmanNetwork() = default;
  explicit ElmanNetwork(const ElmanShape& s)
      : input_weights(s.hidden, s.inputs),
        recurrent_weights(s.hidden, s.hidden),
        hidden_bias(s.hidden, 0.0),
        output_weights(1, s.hidden) {}

  ElmanShape shape() const noexcept { return {input_weights.cols(), input_weights.rows()}; }
  std::size_t parameter_count() const noexcept { return shape().parameter_count(); }

  /// Offsets of each block inside the canonical flat vector.
  struct Layout {
    std::size_t input_weights, recurrent_weights, hidden_bias, output_weights, output_bias, total;
  };
  Layout layout() const noexcept {
    const auto s = shape();
    Layout l{};
    l.input_weights = 0;
    l.recurrent_weights = s.hidden * s.inputs;
    l.hidden_bias = l.recurrent_weights + s.hidden * s.hidden;
    l.output_weights = l.hidden_bias + s.hidden;
    l.output_bias = l.output_weights + s.hidden;
    l.total = l.output_bias + 1;
    return l;
  }

  Vector flatten() const {
    Vector out;
    out.reserve(parameter_count());
    auto append = [&](std::span<const double> b) { out.insert(out.end(), b.begin(), b.end()); };
    append(input_weights.flat());
    append(recurrent_weights.flat());
    append(hidden_bias);
    append(output_weights.flat());
    out.push_back(output_bias);
    return out;
  }

  void assign(std::span<const double> flat) {
    require_size(flat.size(), parameter_count(), "ElmanNetwork::assign");
    auto it = flat.begin();
    auto take = [&](std::span<double> b) {
      std::copy_n(it, b.size(), b.begin());
      it += static_cast<std::ptrdiff_t>(b.size());
    };
    take(input_weights.flat());
    take(recurrent_weights.flat());
    take(hidden_bias);
    take(output_weights.flat());
    output_bias = *it;
  }

  bool finite() const {
    return all_finite(input_weights.flat()) && all_finite(recurrent_weights.flat()) && all_finite(hidden_bias) &&
           all_finite(output_weights.flat()) && std::isfinite(output_bias);
  }

  bool operator==(const ElmanNetwork&) const = default;
};

/// Weights uniform in [-scale, scale] in canonical order; biases zero.
inline ElmanNetwork init_elman(const ElmanShape& shape, std::uint64_t seed, double scale) {
  if (shape.inputs < 1 || shape.hidden < 1) throw DomainError("layer sizes must be at least 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("init scale must be positive");
  ElmanNetwork net(shape);
  Rng rng(seed);
  for (double& w : net.input_weights.flat()) w = rng.uniform(-scale, scale);
  for (double& w : net.recurrent_weights.flat()) w = rng.uniform(-scale, scale);
  for (double& w : net.output_weights.flat()) w = rng.uniform(-scale, scale);
  return net;
}

/// Context units. Zero at stream start.
struct HiddenState {
  Vector h;

  static HiddenState zeros(std::size_t n) { return {Vector(n, 0.0)}; }
  bool operator==(const HiddenState&) const = default;
};

/// Everything backpropagation needs from one step.
struct StepRecord {
  Vector input;
  Vector h_prev;
  Vector pre_activation;
  Vector h;
};

/// The most recent `capacity` step records, oldest first.
class StreamBuffer {
 public:
  explicit StreamBuffer(std::size_t capacity = 20) : capacity_(capacity) {
    if (capacity_ < 1) throw DomainError("stream buffer capacity must be at least 1");
  }

  void push(StepRecord record) {
    if (records_.size() == capacity_) records_.pop_front();
    records_.push_back(std::move(record));
  }
  void clear() { records_.clear(); }

  std::size_t size() const noexcept { return records_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return records_.empty(); }
  const StepRecord& operator[](std::size_t i) const { return records_[i]; }
  const StepRecord& back() const { return records_.back(); }

 private:
  std::size_t capacity_;
  std::deque<StepRecord> records_;
};

struct ElmanStep {
  double output = 0.0;
  HiddenState state;
  Vector pre_activation;
};

inline ElmanStep elman_step(const ElmanNetwork& net, const HiddenState& state, std::span<const double> input) {
  const auto s = net.shape();
  require_size(input.size(), s.inputs, "elman_step input");
  require_size(state.h.size(), s.hidden, "elman_step state");
  if (!all_finite(input)) throw ShapeError("elman_step: non-finite input");
  ElmanStep out{net.output_bias, HiddenState{Vector(s.hidden)}, net.hidden_bias};
  gemv_add(net.input_weights, input, out.pre_activation);
  gemv_add(net.recurrent_weights, state.h, out.pre_activation);
  for (std::size_t j = 0; j < s.hidden; ++j) out.state.h[j] = std::tanh(out.pre_activation[j]);
  out.output += dot(net.output_weights.row(0), out.state.h);
  return out;
}

/// elman_step that also appends the step to `buffer`.
inline ElmanStep elman_advance(const ElmanNetwork& net, const HiddenState& state, std::span<const double> input,
                               StreamBuffer& buffer) {
  ElmanStep step = elman_step(net, state, input);
  buffer.push({Vector(input.begin(), input.end()), state.h, step.pre_activation, step.state.h});
  return step;
}

struct ElmanRun {
  std::vector<double> outputs;
  HiddenState final_state;
};

/// Threads the hidden state through the rows of `inputs` in order.
inline ElmanRun elman_run(const ElmanNetwork& net, const Matrix& inputs, HiddenState initial) {
  if (inputs.rows() == 0) throw ShapeError("elman_run: no input rows");
  ElmanRun run{{}, std::move(initial)};
  run.outputs.reserve(inputs.rows());
  for (std::size_t t = 0; t < inputs.rows(); ++t) {
    auto step = elman_step(net, run.final_state, inputs.row(t));
    run.outputs.push_back(step.output);
    run.final_state = std::move(step.state);
  }
  return run;
}

/// d y[t] / d w for the newest record in `buffer`, in canonical order.
/// Credit flows back through at most `window` steps (and never past the
/// oldest buffered record). With window >= steps since a zero-state reset this
/// is the full BPTT derivative.
inline Vector tbptt_jacobian(const ElmanNetwork& net, const StreamBuffer& buffer, std::size_t window) {
  if (buffer.empty()) throw ShapeError("tbptt_jacobian: empty buffer");
  if (window < 1) throw DomainError("truncation window must be at least 1");
  const auto s = net.shape();
  const auto lay = net.layout();
  Vector jac(lay.total, 0.0);

  const StepRecord& newest = buffer.back();
  require_size(newest.h.size(), s.hidden, "tbptt_jacobian record");
  std::copy(newest.h.begin(), newest.h.end(), jac.begin() + static_cast<std::ptrdiff_t>(lay.output_weights));
  jac[lay.output_bias] = 1.0;

  const auto w_out = net.output_weights.row(0);
  Vector dh(w_out.begin(), w_out.end());
  Vector da(s.hidden);
  const std::size_t depth = std::min(window, buffer.size());
  for (std::size_t k = 0; k < depth; ++k) {
    const StepRecord& rec = buffer[buffer.size() - 1 - k];
    for (std::size_t j = 0; j < s.hidden; ++j) da[j] = dh[j] * (1.0 - rec.h[j] * rec.h[j]);
    for (std::size_t j = 0; j < s.hidden; ++j) {
      const double d = da[j];
      double* in_row = jac.data() + lay.input_weights + j * s.inputs;
      for (std::size_t i = 0; i < s.inputs; ++i) in_row[i] += d * rec.input[i];
      double* rec_row = jac.data() + lay.recurrent_weights + j * s.hidden;
      for (std::size_t i = 0; i < s.hidden; ++i) rec_row[i] += d * rec.h_prev[i];
      jac[lay.hidden_bias + j] += d;
    }
    if (k + 1 < depth) {
      std::fill(dh.begin(), dh.end(), 0.0);
      gemv_t_add(net.recurrent_weights, da, dh);
    }
  }
  return jac;
}

}  // namespace fxnet
