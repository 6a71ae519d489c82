#pragma once

// Global extended Kalman filter training of an Elman network, run over
// several streams at once.
//
// All weights form one state vector with one covariance P. Each step, every
// stream contributes one output derivative column to H (n_w x N_s) and one
// residual, and a single joint update is applied:
//
//   A  = (I / eta + H^T P H)^-1
//   K  = P H A
//   w' = w + K r
//   P' = P - K H^T P + q I,  then P' <- (P' + P'^T) / 2
//
// Streams are separate copies of the network (same weights, private hidden
// state) positioned on contiguous segments of the training series.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fxnet/elman.hpp"
#include "fxnet/errors.hpp"
#include "fxnet/linalg.hpp"
#include "fxnet/random.hpp"
#include "fxnet/training_report.hpp"

namespace fxnet {

struct EkfConfig {
  double initial_covariance = 100.0;
  double learning_rate = 0.5;
  double process_noise = 1e-6;
  double pivot_tolerance = 1e-12;

  void validate() const {
    if (!(initial_covariance > 0.0)) throw DomainError("initial covariance must be positive");
    if (!(learning_rate > 0.0)) throw DomainError("EKF learning rate must be positive");
    if (!(process_noise >= 0.0)) throw DomainError("process noise must be non-negative");
  }
};

struct EkfState {
  Matrix covariance;
  double process_noise = 0.0;
  double learning_rate = 1.0;
  double pivot_tolerance = 1e-12;
  std::size_t step = 0;

  static EkfState init(std::size_t n_weights, const EkfConfig& cfg) {
    cfg.validate();
    return {Matrix::identity(n_weights, cfg.initial_covariance), cfg.process_noise, cfg.learning_rate,
            cfg.pivot_tolerance, 0};
  }

  std::size_t size() const noexcept { return covariance.rows(); }
};

struct CovarianceAudit {
  double max_asymmetry = 0.0;
  double min_eigenvalue = 0.0;
};

/// Symmetry and definiteness check. Eigenvalues cost O(n^3) per sweep, so
/// this is for small filters.
inline CovarianceAudit audit_covariance(const EkfState& state) {
  return {max_asymmetry(state.covariance), symmetric_eigenvalues(state.covariance).front()};
}

/// One joint update. `jacobians` holds one column per observation,
/// residuals are target - output. On NumericError nothing is modified.
inline void ekf_update(std::span<double> weights, EkfState& state, const Matrix& jacobians,
                       std::span<const double> residuals) {
  const std::size_t n = weights.size();
  const std::size_t m = residuals.size();
  if (m < 1) throw ShapeError("ekf_update: no observations");
  require_size(state.size(), n, "ekf_update covariance");
  require_size(jacobians.rows(), n, "ekf_update jacobian rows");
  require_size(jacobians.cols(), m, "ekf_update jacobian columns");

  Matrix& p = state.covariance;
  const Matrix ph = matmul(p, jacobians);           // n x m
  Matrix innovation = matmul_tn(jacobians, ph);     // m x m
  for (std::size_t i = 0; i < m; ++i) innovation(i, i) += 1.0 / state.learning_rate;
  symmetrize(innovation);
  const Matrix gain_scale = spd_inverse(innovation, state.pivot_tolerance);
  const Matrix gain = matmul(ph, gain_scale);       // n x m

  for (std::size_t i = 0; i < n; ++i) weights[i] += dot(gain.row(i), residuals);

  // K H^T P = K (P H)^T since P is symmetric.
  for (std::size_t i = 0; i < n; ++i) {
    const auto k_row = gain.row(i);
    auto p_row = p.row(i);
    for (std::size_t j = 0; j < n; ++j) p_row[j] -= dot(k_row, ph.row(j));
    p_row[i] += state.process_noise;
  }
  symmetrize(p);
  ++state.step;
}

struct MultistreamConfig {
  std::size_t n_streams = 20;
  std::size_t stream_length = 200;
  std::size_t tbptt_window = 20;
  std::uint64_t seed = 1;
  std::size_t epochs = 10;
  double target_mse = 1e-4;
  /// Draw a fresh stream plan every epoch; otherwise the epoch-0 plan is kept.
  bool resample_each_epoch = true;
  EkfConfig ekf;

  void validate() const {
    if (n_streams < 1) throw DomainError("need at least one stream");
    if (tbptt_window < 1) throw DomainError("truncation window must be at least 1");
    if (stream_length <= tbptt_window) throw DomainError("stream length must exceed the truncation window");
    if (epochs < 1) throw DomainError("epoch budget must be at least 1");
    if (!(target_mse > 0.0)) throw DomainError("target MSE must be positive");
    ekf.validate();
  }
};

struct StreamPlan {
  std::vector<std::size_t> starts;
  bool operator==(const StreamPlan&) const = default;
};

/// Stream starts drawn uniformly, with replacement, from
/// [0, n_train - stream_length]. The generator is seeded with
/// derive_seed(config.seed, epoch).
inline StreamPlan sample_streams(std::size_t n_train, const MultistreamConfig& config, std::size_t epoch = 0) {
  if (config.n_streams < 1) throw DomainError("need at least one stream");
  if (n_train < config.stream_length) {
    throw DomainError("training series of " + std::to_string(n_train) + " points is shorter than one stream (" +
                      std::to_string(config.stream_length) + ")");
  }
  Rng rng(derive_seed(config.seed, epoch));
  StreamPlan plan;
  plan.starts.reserve(config.n_streams);
  const std::size_t last_start = n_train - config.stream_length;
  for (std::size_t s = 0; s < config.n_streams; ++s) plan.starts.push_back(rng.uniform_index(last_start));
  return plan;
}

inline void check_stream_fit(const ElmanNetwork& net, std::size_t n_train, const MultistreamConfig& config) {
  config.validate();
  if (config.stream_length <= net.shape().inputs) {
    throw DomainError("stream length must exceed the input window");
  }
  if (n_train < config.stream_length) {
    throw DomainError("training series of " + std::to_string(n_train) + " points is shorter than one stream");
  }
}

/// MSE of the network over the one-step targets of every stream in `plan`,
/// with hidden states reset at each stream start and no weight updates.
inline double multistream_mse(const ElmanNetwork& net, std::span<const double> train, const StreamPlan& plan,
                              const MultistreamConfig& config) {
  check_stream_fit(net, train.size(), config);
  const std::size_t n_in = net.shape().inputs;
  const std::size_t steps = config.stream_length - n_in;
  double sse = 0.0;
  for (std::size_t start : plan.starts) {
    HiddenState state = HiddenState::zeros(net.shape().hidden);
    for (std::size_t t = 0; t < steps; ++t) {
      auto step = elman_step(net, state, train.subspan(start + t, n_in));
      const double r = train[start + t + n_in] - step.output;
      sse += r * r;
      state = std::move(step.state);
    }
  }
  return sse / static_cast<double>(steps * plan.starts.size());
}

/// Multistream EKF training on a normalized series.
///
/// Per epoch: pick the stream plan, zero every stream's hidden state, then for
/// each of the stream_length - n_in positions advance all streams one step,
/// stack their TBPTT output derivatives into H and apply one ekf_update.
/// Epoch MSE is the mean squared residual seen during that epoch. Stops on the
/// target MSE, the epoch budget, or a non-finite weight or covariance entry
/// (the network from before that step is returned).
inline std::pair<ElmanNetwork, TrainingReport> train_elman_multistream(ElmanNetwork net,
                                                                       std::span<const double> train,
                                                                       const MultistreamConfig& config) {
  check_stream_fit(net, train.size(), config);
  const auto t0 = std::chrono::steady_clock::now();
  const auto shape = net.shape();
  const std::size_t n_w = net.parameter_count();
  const std::size_t n_in = shape.inputs;
  const std::size_t steps = config.stream_length - n_in;
  const std::size_t n_s = config.n_streams;

  TrainingReport report;
  auto finish = [&](StopReason reason) {
    report.stop_reason = reason;
    report.epochs_run = report.error_curve.size();
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  report.initial_mse = multistream_mse(net, train, sample_streams(train.size(), config, 0), config);

  EkfState ekf = EkfState::init(n_w, config.ekf);
  Vector weights = net.flatten();
  Matrix jacobians(n_w, n_s);
  Vector residuals(n_s);
  std::vector<HiddenState> states(n_s);
  std::vector<StreamBuffer> buffers(n_s, StreamBuffer(config.tbptt_window));

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const StreamPlan plan = sample_streams(train.size(), config, config.resample_each_epoch ? epoch : 0);
    for (std::size_t s = 0; s < n_s; ++s) {
      states[s] = HiddenState::zeros(shape.hidden);
      buffers[s].clear();
    }
    double sse = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t s = 0; s < n_s; ++s) {
        const std::size_t pos = plan.starts[s] + t;
        auto step = elman_advance(net, states[s], train.subspan(pos, n_in), buffers[s]);
        residuals[s] = train[pos + n_in] - step.output;
        sse += residuals[s] * residuals[s];
        states[s] = std::move(step.state);
        const Vector column = tbptt_jacobian(net, buffers[s], config.tbptt_window);
        for (std::size_t i = 0; i < n_w; ++i) jacobians(i, s) = column[i];
      }
      Vector next = weights;
      ekf_update(next, ekf, jacobians, residuals);
      if (!all_finite(next) || !all_finite(ekf.covariance.flat())) {
        finish(StopReason::Diverged);
        return {std::move(net), std::move(report)};
      }
      weights = std::move(next);
      net.assign(weights);
    }
    const double mse = sse / static_cast<double>(steps * n_s);
    if (!std::isfinite(mse)) {
      finish(StopReason::Diverged);
      return {std::move(net), std::move(report)};
    }
    report.error_curve.push_back(mse);
    if (mse <= config.target_mse) {
      finish(StopReason::TargetReached);
      return {std::move(net), std::move(report)};
    }
  }
  finish(StopReason::MaxEpochs);
  return {std::move(net), std::move(report)};
}

}  // namespace fxnet
