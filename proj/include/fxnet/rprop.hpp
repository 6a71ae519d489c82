#pragma once

// First-order full-batch trainers for the feedforward network: gradient
// descent, RPROP+ (sign-based steps with weight backtracking) and iRPROP+
// (backtracking only when the epoch error went up).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "fxnet/errors.hpp"
#include "fxnet/linalg.hpp"
#include "fxnet/mlp.hpp"
#include "fxnet/training_report.hpp"

namespace fxnet {

enum class FeedforwardAlgorithm { Backprop, RpropPlus, IrpropPlus };

inline std::string_view to_string(FeedforwardAlgorithm a) {
  switch (a) {
    case FeedforwardAlgorithm::Backprop: return "backprop";
    case FeedforwardAlgorithm::RpropPlus: return "rprop+";
    case FeedforwardAlgorithm::IrpropPlus: return "irprop+";
  }
  return "?";
}

inline FeedforwardAlgorithm parse_feedforward_algorithm(std::string_view text) {
  if (text == "backprop") return FeedforwardAlgorithm::Backprop;
  if (text == "rprop+") return FeedforwardAlgorithm::RpropPlus;
  if (text == "irprop+") return FeedforwardAlgorithm::IrpropPlus;
  throw DomainError("unknown feedforward algorithm '" + std::string(text) + "'");
}

struct RpropConfig {
  double initial_step = 0.1;
  double increase = 1.2;
  double decrease = 0.5;
  double min_step = 1e-6;
  double max_step = 50.0;

  void validate() const {
    if (!(0.0 < decrease && decrease < 1.0 && 1.0 < increase)) {
      throw DomainError("RPROP factors must satisfy 0 < decrease < 1 < increase");
    }
    if (!(0.0 < min_step && min_step <= initial_step && initial_step <= max_step)) {
      throw DomainError("RPROP steps must satisfy 0 < min <= initial <= max");
    }
  }
};

struct RpropState {
  RpropConfig config;
  Vector step_sizes;
  Vector prev_grad;
  Vector prev_delta_w;
  double prev_error = std::numeric_limits<double>::infinity();

  RpropState() = default;
  RpropState(std::size_t n, const RpropConfig& cfg)
      : config(cfg), step_sizes(n, cfg.initial_step), prev_grad(n, 0.0), prev_delta_w(n, 0.0) {
    cfg.validate();
  }

  std::size_t size() const noexcept { return step_sizes.size(); }
};

namespace detail {

inline void rprop_update(std::span<double> w, std::span<const double> g, RpropState& s, bool backtrack) {
  require_size(g.size(), w.size(), "rprop gradient");
  require_size(s.size(), w.size(), "rprop state");
  const auto& c = s.config;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double product = g[i] * s.prev_grad[i];
    if (product > 0.0) {
      s.step_sizes[i] = std::min(s.step_sizes[i] * c.increase, c.max_step);
      const double dw = -sign(g[i]) * s.step_sizes[i];
      w[i] += dw;
      s.prev_delta_w[i] = dw;
      s.prev_grad[i] = g[i];
    } else if (product < 0.0) {
      s.step_sizes[i] = std::max(s.step_sizes[i] * c.decrease, c.min_step);
      if (backtrack) {
        w[i] -= s.prev_delta_w[i];
        s.prev_delta_w[i] = -s.prev_delta_w[i];
      } else {
        s.prev_delta_w[i] = 0.0;
      }
      s.prev_grad[i] = 0.0;
    } else {
      const double dw = -sign(g[i]) * s.step_sizes[i];
      w[i] += dw;
      s.prev_delta_w[i] = dw;
      s.prev_grad[i] = g[i];
    }
  }
}

}  // namespace detail

/// RPROP+ on a flat weight vector. A sign flip shrinks the step, undoes the
/// previous weight change and zeroes the stored gradient.
inline void rprop_plus_update(std::span<double> weights, std::span<const double> grad, RpropState& state) {
  detail::rprop_update(weights, grad, state, true);
}

/// iRPROP+ on a flat weight vector. A sign flip undoes the previous change
/// only when `error` exceeds the previous epoch's error.
inline void irprop_plus_update(std::span<double> weights, std::span<const double> grad, RpropState& state,
                               double error) {
  detail::rprop_update(weights, grad, state, error > state.prev_error);
  state.prev_error = error;
}

/// w <- w - rate * g
inline MlpNetwork gd_step(MlpNetwork net, const MlpGradient& grad, double rate) {
  if (!(rate > 0.0)) throw DomainError("learning rate must be positive");
  if (!(grad.shape() == net.shape())) throw ShapeError("gradient shape differs from network");
  const Vector g = grad.flatten();
  Vector w = net.flatten();
  axpy(-rate, g, w);
  net.assign(w);
  return net;
}

inline std::pair<MlpNetwork, RpropState> rprop_plus_step(MlpNetwork net, const MlpGradient& grad,
                                                         RpropState state) {
  if (!(grad.shape() == net.shape())) throw ShapeError("gradient shape differs from network");
  Vector w = net.flatten();
  rprop_plus_update(w, grad.flatten(), state);
  net.assign(w);
  return {std::move(net), std::move(state)};
}

inline std::pair<MlpNetwork, RpropState> irprop_plus_step(MlpNetwork net, const MlpGradient& grad,
                                                          RpropState state, double error) {
  if (!(grad.shape() == net.shape())) throw ShapeError("gradient shape differs from network");
  Vector w = net.flatten();
  irprop_plus_update(w, grad.flatten(), state, error);
  net.assign(w);
  return {std::move(net), std::move(state)};
}

struct FeedforwardOptions {
  double learning_rate = 0.01;
  RpropConfig rprop;
};

/// Full-batch epochs of gradient -> step -> MSE. Stops once the MSE is at or
/// below the target, when the epoch budget runs out, or when the loss or a
/// weight turns non-finite; in the last case the network from before the
/// offending step is returned.
inline std::pair<MlpNetwork, TrainingReport> train_feedforward(MlpNetwork net, const BatchView& train,
                                                               FeedforwardAlgorithm algorithm,
                                                               const StopCriteria& stop,
                                                               const FeedforwardOptions& options = {}) {
  if (train.size() == 0) throw DomainError("training set is empty");
  stop.validate();
  if (algorithm == FeedforwardAlgorithm::Backprop && !(options.learning_rate > 0.0)) {
    throw DomainError("learning rate must be positive");
  }
  const auto t0 = std::chrono::steady_clock::now();
  TrainingReport report;
  auto finish = [&](StopReason reason) {
    report.stop_reason = reason;
    report.epochs_run = report.error_curve.size();
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  auto current = mlp_gradient(net, train);
  report.initial_mse = current.loss;
  if (!std::isfinite(current.loss)) {
    finish(StopReason::Diverged);
    return {std::move(net), std::move(report)};
  }
  if (current.loss <= stop.target_mse) {
    finish(StopReason::TargetReached);
    return {std::move(net), std::move(report)};
  }

  RpropState state(net.parameter_count(), options.rprop);
  Vector weights = net.flatten();
  for (std::size_t epoch = 0; epoch < stop.max_epochs; ++epoch) {
    const Vector grad = current.gradient.flatten();
    Vector next = weights;
    switch (algorithm) {
      case FeedforwardAlgorithm::Backprop: axpy(-options.learning_rate, grad, next); break;
      case FeedforwardAlgorithm::RpropPlus: rprop_plus_update(next, grad, state); break;
      case FeedforwardAlgorithm::IrpropPlus: irprop_plus_update(next, grad, state, current.loss); break;
    }
    if (!all_finite(next)) {
      finish(StopReason::Diverged);
      return {std::move(net), std::move(report)};
    }
    MlpNetwork candidate = net;
    candidate.assign(next);
    auto evaluated = mlp_gradient(candidate, train);
    if (!std::isfinite(evaluated.loss)) {
      finish(StopReason::Diverged);
      return {std::move(net), std::move(report)};
    }
    net = std::move(candidate);
    weights = std::move(next);
    current = std::move(evaluated);
    report.error_curve.push_back(current.loss);
    if (current.loss <= stop.target_mse) {
      finish(StopReason::TargetReached);
      return {std::move(net), std::move(report)};
    }
  }
  finish(StopReason::MaxEpochs);
  return {std::move(net), std::move(report)};
}

}  // namespace fxnet
