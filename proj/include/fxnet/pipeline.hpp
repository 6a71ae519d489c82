#pragma once

// End-to-end experiment: rates -> normalized windows -> chronological split ->
// training -> held-out scoring.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>

#include "fxnet/checkpoint.hpp"
#include "fxnet/data_io.hpp"
#include "fxnet/ekf.hpp"
#include "fxnet/elman.hpp"
#include "fxnet/evaluate.hpp"
#include "fxnet/mlp.hpp"
#include "fxnet/preprocess.hpp"
#include "fxnet/random.hpp"
#include "fxnet/rprop.hpp"

namespace fxnet {

struct PreprocessConfig {
  ReturnMode mode = ReturnMode::LogDiff;
  std::size_t window = 20;
  double split_ratio = 0.8;
  /// Fit mean/std only on returns that appear in training rows.
  bool fit_on_train_only = false;
};

struct PreparedData {
  ReturnSeries returns;
  NormalizationParams params;
  NormalizedSeries normalized;
  SupervisedSet rows;
  std::size_t n_train = 0;

  std::size_t n_test() const noexcept { return rows.size() - n_train; }

  /// Normalized values covered by training rows (inputs and targets).
  std::span<const double> train_values() const {
    return std::span<const double>(normalized.values).first(n_train + rows.window());
  }
  std::span<const double> test_targets() const {
    return std::span<const double>(rows.targets).subspan(n_train);
  }
};

/// With `fixed_params`, the stored normalization is reused instead of fitted
/// (scoring a checkpoint on new data).
inline PreparedData prepare_data(const RateSeries& rates, const PreprocessConfig& cfg,
                                 const std::optional<NormalizationParams>& fixed_params = std::nullopt) {
  PreparedData d;
  d.returns = log_returns(rates, cfg.mode);
  if (d.returns.values.size() <= cfg.window) {
    throw DomainError("series too short for a window of " + std::to_string(cfg.window));
  }
  d.n_train = train_row_count(d.returns.values.size() - cfg.window, cfg.split_ratio);
  if (fixed_params) {
    if (fixed_params->mode != cfg.mode) throw DomainError("stored normalization uses a different return mode");
    d.params = *fixed_params;
  } else if (cfg.fit_on_train_only) {
    ReturnSeries fit_part{{d.returns.values.begin(),
                           d.returns.values.begin() + static_cast<std::ptrdiff_t>(d.n_train + cfg.window)},
                          d.returns.mode};
    d.params = fit_normalizer(fit_part);
  } else {
    d.params = fit_normalizer(d.returns);
  }
  d.normalized = normalize(d.returns, d.params);
  d.rows = make_windows(d.normalized, cfg.window);
  return d;
}

enum class ModelKind { Feedforward, Elman };

enum class Trainer { Backprop, RpropPlus, IrpropPlus, Ekf };

inline std::string_view to_string(Trainer t) {
  switch (t) {
    case Trainer::Backprop: return "backprop";
    case Trainer::RpropPlus: return "rprop+";
    case Trainer::IrpropPlus: return "irprop+";
    case Trainer::Ekf: return "ekf";
  }
  return "?";
}

inline Trainer parse_trainer(std::string_view text) {
  if (text == "ekf") return Trainer::Ekf;
  switch (parse_feedforward_algorithm(text)) {
    case FeedforwardAlgorithm::Backprop: return Trainer::Backprop;
    case FeedforwardAlgorithm::RpropPlus: return Trainer::RpropPlus;
    case FeedforwardAlgorithm::IrpropPlus: return Trainer::IrpropPlus;
  }
  return Trainer::IrpropPlus;
}

struct FeedforwardRunConfig {
  std::size_t hidden = 40;
  double init_scale = 0.1;
  StopCriteria stop{1e-3, 1000};
  FeedforwardOptions options;
};

struct ElmanRunConfig {
  std::size_t hidden = 10;
  double init_scale = 0.1;
  MultistreamConfig multistream;
};

struct ExperimentConfig {
  PreprocessConfig preprocess;
  ModelKind model = ModelKind::Feedforward;
  Trainer trainer = Trainer::IrpropPlus;
  std::uint64_t seed = 1;
  FeedforwardRunConfig feedforward;
  ElmanRunConfig elman;

  /// ekf trains only elman; the first-order trainers only ff.
  void validate() const {
    if (model == ModelKind::Elman && trainer != Trainer::Ekf) {
      throw DomainError("the elman model is trained with ekf only");
    }
    if (model == ModelKind::Feedforward && trainer == Trainer::Ekf) {
      throw DomainError("ekf trains the elman model, not ff");
    }
    if (preprocess.window < 1) throw DomainError("window must be at least 1");
    if (!(preprocess.split_ratio > 0.0 && preprocess.split_ratio < 1.0)) {
      throw DomainError("split ratio must lie in (0, 1)");
    }
    if (model == ModelKind::Feedforward) {
      if (feedforward.hidden < 1) throw DomainError("hidden layer must have at least one unit");
      if (!(feedforward.init_scale > 0.0)) throw DomainError("init scale must be positive");
      feedforward.stop.validate();
      if (!(feedforward.options.learning_rate > 0.0)) throw DomainError("learning rate must be positive");
      feedforward.options.rprop.validate();
    } else {
      if (elman.hidden < 1) throw DomainError("hidden layer must have at least one unit");
      if (!(elman.init_scale > 0.0)) throw DomainError("init scale must be positive");
      elman.multistream.validate();
      if (elman.multistream.stream_length <= preprocess.window) {
        throw DomainError("stream length must exceed the input window");
      }
    }
  }

  /// Rows replayed to warm the recurrent state before scoring.
  std::size_t warmup_rows() const {
    if (model != ModelKind::Elman) return 0;
    return elman.multistream.stream_length - preprocess.window;
  }
};

/// Canonical one-line description of every setting that affects training.
/// Its hash goes into checkpoint metadata.
inline std::string describe(const ExperimentConfig& c) {
  std::string s;
  auto kv = [&](std::string_view k, const std::string& v) {
    s += k;
    s += '=';
    s += v;
    s += ';';
  };
  kv("mode", std::string(to_string(c.preprocess.mode)));
  kv("window", std::to_string(c.preprocess.window));
  kv("split", format_real(c.preprocess.split_ratio));
  kv("train_only_stats", c.preprocess.fit_on_train_only ? "1" : "0");
  kv("model", c.model == ModelKind::Elman ? "elman" : "ff");
  kv("trainer", std::string(to_string(c.trainer)));
  kv("seed", std::to_string(c.seed));
  if (c.model == ModelKind::Feedforward) {
    const auto& f = c.feedforward;
    kv("hidden", std::to_string(f.hidden));
    kv("init_scale", format_real(f.init_scale));
    kv("target_mse", format_real(f.stop.target_mse));
    kv("max_epochs", std::to_string(f.stop.max_epochs));
    kv("rate", format_real(f.options.learning_rate));
    const auto& r = f.options.rprop;
    kv("rprop", format_real(r.initial_step) + "," + format_real(r.increase) + "," + format_real(r.decrease) + "," +
                    format_real(r.min_step) + "," + format_real(r.max_step));
  } else {
    const auto& e = c.elman;
    const auto& m = e.multistream;
    kv("hidden", std::to_string(e.hidden));
    kv("init_scale", format_real(e.init_scale));
    kv("streams", std::to_string(m.n_streams));
    kv("stream_length", std::to_string(m.stream_length));
    kv("tbptt_window", std::to_string(m.tbptt_window));
    kv("epochs", std::to_string(m.epochs));
    kv("target_mse", format_real(m.target_mse));
    kv("resample", m.resample_each_epoch ? "1" : "0");
    kv("ekf", format_real(m.ekf.initial_covariance) + "," + format_real(m.ekf.learning_rate) + "," +
                  format_real(m.ekf.process_noise));
  }
  return s;
}

struct ExperimentResult {
  Checkpoint checkpoint;
  TrainingReport report;
  Metrics test_metrics;
  ModelPredictions test_predictions;
};

inline FeedforwardAlgorithm to_feedforward(Trainer t) {
  switch (t) {
    case Trainer::Backprop: return FeedforwardAlgorithm::Backprop;
    case Trainer::RpropPlus: return FeedforwardAlgorithm::RpropPlus;
    default: return FeedforwardAlgorithm::IrpropPlus;
  }
}

/// Held-out predictions for a trained model over the test rows of `data`.
inline ModelPredictions predict_test(const Checkpoint& ck, const PreparedData& data) {
  if (const auto* mlp = std::get_if<MlpNetwork>(&ck.model)) {
    return predict_rows(*mlp, data.rows, data.n_train, data.n_test());
  }
  return predict_rows(std::get<ElmanNetwork>(ck.model), data.rows, data.n_train, data.n_test(), ck.meta.warmup);
}

inline ExperimentResult run_experiment(const PreparedData& data, const ExperimentConfig& cfg) {
  cfg.validate();
  std::string config_hash = fnv1a_hex(describe(cfg));
  ExperimentResult result;
  auto& ck = result.checkpoint;
  ck.normalization = data.params;
  ck.meta = {cfg.seed, std::move(config_hash), std::string(to_string(cfg.trainer)), cfg.preprocess.window,
             cfg.preprocess.split_ratio, cfg.warmup_rows()};

  if (cfg.model == ModelKind::Feedforward) {
    const auto& ff = cfg.feedforward;
    MlpNetwork net = init_mlp({cfg.preprocess.window, ff.hidden, 1}, cfg.seed, ff.init_scale);
    auto train = slice_rows(data.rows, 0, data.n_train);
    auto [trained, report] = train_feedforward(std::move(net), train, to_feedforward(cfg.trainer), ff.stop, ff.options);
    ck.model = std::move(trained);
    result.report = std::move(report);
  } else {
    const auto& el = cfg.elman;
    ElmanNetwork net = init_elman({cfg.preprocess.window, el.hidden}, cfg.seed, el.init_scale);
    MultistreamConfig ms = el.multistream;
    // Stream plans draw from a sub-seed of the run seed.
    ms.seed = derive_seed(cfg.seed, 1);
    auto [trained, report] = train_elman_multistream(std::move(net), data.train_values(), ms);
    ck.model = std::move(trained);
    result.report = std::move(report);
  }
  result.test_predictions = predict_test(ck, data);
  result.test_metrics = evaluate_forecasts(result.test_predictions.clamped, data.test_targets(), data.params);
  return result;
}

}  // namespace fxnet
