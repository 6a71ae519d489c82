#pragma once

// Held-out scoring, one-step rate forecasts and run comparison.

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fxnet/elman.hpp"
#include "fxnet/errors.hpp"
#include "fxnet/mlp.hpp"
#include "fxnet/preprocess.hpp"
#include "fxnet/training_report.hpp"

namespace fxnet {

/// Margin used to pull raw network outputs back inside (0, 1).
inline constexpr double kClampEpsilon = 1e-9;

/// Clamps into [eps, 1 - eps]; bumps `clamp_count` when the value moved.
/// NaN is mapped to 1/2 (zero predicted return) and counted.
inline double clamp_normalized(double y, std::size_t* clamp_count = nullptr) {
  double c = std::clamp(y, kClampEpsilon, 1.0 - kClampEpsilon);
  if (std::isnan(y)) c = 0.5;
  if (clamp_count != nullptr && !(c == y)) ++*clamp_count;
  return c;
}

struct Metrics {
  double mse = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double directional_accuracy = 0.0;
};

/// Error measures in normalized space. Directional accuracy compares return
/// signs after denormalizing both sequences, because the logistic map
/// reverses orientation.
inline Metrics evaluate_forecasts(std::span<const double> predicted, std::span<const double> actual,
                                  const NormalizationParams& params) {
  if (predicted.empty() || predicted.size() != actual.size()) {
    throw ShapeError("forecast and actual sequences must have equal, non-zero length");
  }
  Metrics m;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double err = predicted[i] - actual[i];
    m.mse += err * err;
    m.mae += std::abs(err);
    const double r_pred = denormalize_value(predicted[i], params);
    const double r_true = denormalize_value(actual[i], params);
    if (sign(r_pred) == sign(r_true)) ++hits;
  }
  const double n = static_cast<double>(predicted.size());
  m.mse /= n;
  m.mae /= n;
  m.rmse = std::sqrt(m.mse);
  m.directional_accuracy = static_cast<double>(hits) / n;
  return m;
}

struct Forecast {
  double rate = 0.0;
  double raw_output = 0.0;
  bool clamped = false;
};

inline Forecast forecast_from_output(double raw, const NormalizationParams& params, double last_rate) {
  std::size_t clamps = 0;
  const double y = clamp_normalized(raw, &clamps);
  const double r = denormalize_value(y, params);
  return {invert_returns(last_rate, r, params.mode), raw, clamps > 0};
}

inline void check_forecast_window(std::span<const double> window, std::size_t expected, double last_rate) {
  if (window.size() != expected) {
    throw DomainError("forecast window must hold " + std::to_string(expected) + " values");
  }
  for (double v : window) {
    if (!(v > 0.0 && v < 1.0)) throw DomainError("forecast window values must lie in (0, 1)");
  }
  if (!(last_rate > 0.0)) throw DomainError("last rate must be positive");
}

/// Next-day rate from the feedforward model.
inline Forecast one_step_forecast(const MlpNetwork& net, std::span<const double> window,
                                  const NormalizationParams& params, double last_rate) {
  check_forecast_window(window, net.shape().inputs, last_rate);
  return forecast_from_output(mlp_forward(net, window).output[0], params, last_rate);
}

/// Next-day rate from the recurrent model continuing from `state`.
inline Forecast one_step_forecast(const ElmanNetwork& net, const HiddenState& state,
                                  std::span<const double> window, const NormalizationParams& params,
                                  double last_rate) {
  check_forecast_window(window, net.shape().inputs, last_rate);
  return forecast_from_output(elman_step(net, state, window).output, params, last_rate);
}

struct ModelPredictions {
  std::vector<double> raw;
  std::vector<double> clamped;
  std::size_t clamp_count = 0;
};

inline ModelPredictions finish_predictions(std::vector<double> raw) {
  ModelPredictions p{std::move(raw), {}, 0};
  p.clamped.reserve(p.raw.size());
  for (double y : p.raw) p.clamped.push_back(clamp_normalized(y, &p.clamp_count));
  return p;
}

inline ModelPredictions predict_rows(const MlpNetwork& net, const SupervisedSet& rows, std::size_t first,
                                     std::size_t count) {
  std::vector<double> raw;
  raw.reserve(count);
  for (std::size_t i = first; i < first + count; ++i) raw.push_back(mlp_forward(net, rows.inputs.row(i)).output[0]);
  return finish_predictions(std::move(raw));
}

/// Recurrent predictions for rows [first, first + count). The hidden state is
/// warmed from zero over the `warmup` rows preceding `first`.
inline ModelPredictions predict_rows(const ElmanNetwork& net, const SupervisedSet& rows, std::size_t first,
                                     std::size_t count, std::size_t warmup) {
  if (first + count > rows.size()) throw ShapeError("prediction range exceeds the supervised set");
  const std::size_t begin = first - std::min(first, warmup);
  HiddenState state = HiddenState::zeros(net.shape().hidden);
  std::vector<double> raw;
  raw.reserve(count);
  for (std::size_t i = begin; i < first + count; ++i) {
    auto step = elman_step(net, state, rows.inputs.row(i));
    if (i >= first) raw.push_back(step.output);
    state = std::move(step.state);
  }
  return finish_predictions(std::move(raw));
}

struct ComparisonEntry {
  std::string name;
  TrainingReport report;
  Metrics metrics;
};

struct PairwiseRatio {
  std::string baseline;
  std::string candidate;
  /// candidate epochs / baseline epochs; set only when both reached target.
  std::optional<double> epoch_ratio;
  /// candidate test MSE / baseline test MSE; unset if either run diverged.
  std::optional<double> test_mse_ratio;
};

struct ComparisonReport {
  std::vector<ComparisonEntry> entries;
  std::vector<PairwiseRatio> ratios;

  /// Runs that never reached their target, diverged ones included.
  std::vector<std::string> unreached() const {
    std::vector<std::string> out;
    for (const auto& e : entries)
      if (!e.report.epochs_to_target()) out.push_back(e.name);
    return out;
  }
};

inline ComparisonReport compare_models(std::vector<ComparisonEntry> entries) {
  if (entries.size() < 2) throw DomainError("comparison needs at least two runs");
  ComparisonReport out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = i + 1; j < entries.size(); ++j) {
      const auto& a = entries[i];
      const auto& b = entries[j];
      PairwiseRatio ratio{a.name, b.name, std::nullopt, std::nullopt};
      const auto ea = a.report.epochs_to_target();
      const auto eb = b.report.epochs_to_target();
      if (ea && eb && *ea > 0) ratio.epoch_ratio = static_cast<double>(*eb) / static_cast<double>(*ea);
      if (ea && eb && *ea == 0 && *eb == 0) ratio.epoch_ratio = 1.0;
      const double ma = a.metrics.mse;
      const double mb = b.metrics.mse;
      const bool scored = a.report.stop_reason != StopReason::Diverged &&
                          b.report.stop_reason != StopReason::Diverged && std::isfinite(ma) && std::isfinite(mb);
      if (scored && ma > 0.0) ratio.test_mse_ratio = mb / ma;
      if (scored && ma == 0.0 && mb == 0.0) ratio.test_mse_ratio = 1.0;
      out.ratios.push_back(std::move(ratio));
    }
  }
  out.entries = std::move(entries);
  return out;
}

inline void write_metrics_csv(const Metrics& m, std::ostream& sink) {
  sink << "mse,rmse,mae,directional_accuracy\n"
       << format_real(m.mse) << ',' << format_real(m.rmse) << ',' << format_real(m.mae) << ','
       << format_real(m.directional_accuracy) << '\n';
  if (!sink) throw IoError("write failure while emitting metrics");
}

inline std::string optional_text(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

/// Two tables: per-run results, then pairwise ratios. Empty cells mark ratios
/// that are undefined.
inline void write_comparison_csv(const ComparisonReport& report, std::ostream& sink) {
  sink << "model,stop_reason,epochs_run,epochs_to_target,train_mse,test_mse,test_rmse,test_mae,"
          "directional_accuracy\n";
  for (const auto& e : report.entries) {
    const auto ett = e.report.epochs_to_target();
    sink << e.name << ',' << to_string(e.report.stop_reason) << ',' << e.report.epochs_run << ','
         << (ett ? std::to_string(*ett) : std::string()) << ',' << format_real(e.report.final_mse()) << ','
         << format_real(e.metrics.mse) << ',' << format_real(e.metrics.rmse) << ',' << format_real(e.metrics.mae)
         << ',' << format_real(e.metrics.directional_accuracy) << '\n';
  }
  sink << "\nbaseline,candidate,epoch_ratio,test_mse_ratio\n";
  for (const auto& r : report.ratios) {
    sink << r.baseline << ',' << r.candidate << ',' << optional_text(r.epoch_ratio) << ','
         << optional_text(r.test_mse_ratio) << '\n';
  }
  if (!sink) throw IoError("write failure while emitting comparison");
}

inline void write_comparison_text(const ComparisonReport& report, std::ostream& out) {
  char line[256];
  out << "model              stop            epochs  to-target  train-mse     test-mse      dir-acc\n";
  for (const auto& e : report.entries) {
    const auto ett = e.report.epochs_to_target();
    std::snprintf(line, sizeof line, "%-18s %-15s %6zu  %9s  %-12.6g  %-12.6g  %.3f\n", e.name.c_str(),
                  std::string(to_string(e.report.stop_reason)).c_str(), e.report.epochs_run,
                  ett ? std::to_string(*ett).c_str() : "-", e.report.final_mse(), e.metrics.mse,
                  e.metrics.directional_accuracy);
    out << line;
  }
  out << "\npairwise (candidate / baseline)\n";
  auto cell = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("n/a");
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return std::string(buf);
  };
  for (const auto& r : report.ratios) {
    std::snprintf(line, sizeof line, "%-18s vs %-18s epochs %-10s test-mse %s\n", r.candidate.c_str(),
                  r.baseline.c_str(), cell(r.epoch_ratio).c_str(), cell(r.test_mse_ratio).c_str());
    out << line;
  }
  const auto missing = report.unreached();
  if (!missing.empty()) {
    out << "\nnever reached target:";
    for (const auto& n : missing) out << ' ' << n;
    out << '\n';
  }
}

}  // namespace fxnet
