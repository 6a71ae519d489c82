#pragma once

// Rates -> returns -> logistic-normalized values -> supervised windows.
//
// The logistic map is 1 / (1 + exp((R - mean) / std)). Its exponent is
// positive, so the map is *decreasing* in R: a large positive return lands
// near 0. Sign-sensitive measures must therefore be taken after
// denormalizing.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fxnet/data_io.hpp"
#include "fxnet/errors.hpp"
#include "fxnet/linalg.hpp"

namespace fxnet {

/// LogDiff is ln(E[n] / E[n-1]). LogRatio is ln(E[n]) / ln(E[n-1]), kept for
/// literal replication of the ratio-of-logs variant.
enum class ReturnMode { LogDiff, LogRatio };

inline std::string_view to_string(ReturnMode mode) {
  return mode == ReturnMode::LogDiff ? "log-diff" : "log-ratio";
}

inline ReturnMode parse_return_mode(std::string_view text) {
  if (text == "log-diff") return ReturnMode::LogDiff;
  if (text == "log-ratio") return ReturnMode::LogRatio;
  throw DomainError("unknown return mode '" + std::string(text) + "'");
}

struct ReturnSeries {
  std::vector<double> values;
  ReturnMode mode = ReturnMode::LogDiff;
};

struct NormalizationParams {
  double mean = 0.0;
  double std = 1.0;
  ReturnMode mode = ReturnMode::LogDiff;

  bool operator==(const NormalizationParams&) const = default;
};

struct NormalizedSeries {
  std::vector<double> values;
};

/// inputs(i, :) is values[i, i + window); targets[i] is values[i + window].
struct SupervisedSet {
  Matrix inputs;
  std::vector<double> targets;

  std::size_t size() const noexcept { return targets.size(); }
  std::size_t window() const noexcept { return inputs.cols(); }
};

inline ReturnSeries log_returns(const RateSeries& series, ReturnMode mode = ReturnMode::LogDiff) {
  series.validate();
  ReturnSeries out;
  out.mode = mode;
  out.values.reserve(series.size() - 1);
  for (std::size_t n = 1; n < series.size(); ++n) {
    const double prev = series.rates[n - 1];
    const double cur = series.rates[n];
    if (mode == ReturnMode::LogDiff) {
      out.values.push_back(std::log(cur / prev));
    } else {
      const double denom = std::log(prev);
      if (denom == 0.0) throw DomainError("log-ratio return undefined: a rate equals 1 exactly");
      out.values.push_back(std::log(cur) / denom);
    }
  }
  return out;
}

/// Mean and sample (n - 1) standard deviation of the returns.
inline NormalizationParams fit_normalizer(const ReturnSeries& returns) {
  const auto& v = returns.values;
  if (v.size() < 2) throw DomainError("normalizer needs at least 2 returns");
  if (!all_finite(v)) throw DomainError("returns must be finite");
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw DomainError("returns have zero variance");
  return {mean, sd, returns.mode};
}

inline double normalize_value(double r, const NormalizationParams& p) {
  return 1.0 / (1.0 + std::exp((r - p.mean) / p.std));
}

inline double denormalize_value(double y, const NormalizationParams& p) {
  if (!(y > 0.0 && y < 1.0)) {
    throw DomainError("normalized value " + format_real(y) + " outside (0, 1)");
  }
  // ln(1/y - 1) written as log1p((1 - 2y) / y) keeps precision near y = 1/2.
  return p.mean + p.std * std::log1p((1.0 - 2.0 * y) / y);
}

inline NormalizedSeries normalize(const ReturnSeries& returns, const NormalizationParams& params) {
  if (!(params.std > 0.0)) throw DomainError("normalization std must be positive");
  NormalizedSeries out;
  out.values.reserve(returns.values.size());
  for (double r : returns.values) out.values.push_back(normalize_value(r, params));
  return out;
}

inline ReturnSeries denormalize(const NormalizedSeries& values, const NormalizationParams& params) {
  ReturnSeries out;
  out.mode = params.mode;
  out.values.reserve(values.values.size());
  for (double y : values.values) out.values.push_back(denormalize_value(y, params));
  return out;
}

/// Next rate implied by a return: inverse of one log_returns step.
inline double invert_returns(double last_rate, double predicted_return, ReturnMode mode) {
  if (!(last_rate > 0.0) || !std::isfinite(last_rate)) throw DomainError("last rate must be positive");
  if (!std::isfinite(predicted_return)) throw DomainError("predicted return must be finite");
  if (mode == ReturnMode::LogDiff) return last_rate * std::exp(predicted_return);
  if (last_rate == 1.0) throw DomainError("log-ratio inversion undefined at rate 1");
  return std::exp(predicted_return * std::log(last_rate));
}

inline SupervisedSet make_windows(std::span<const double> values, std::size_t window) {
  if (window < 1) throw DomainError("window must be at least 1");
  if (values.size() <= window) {
    throw DomainError("need more than " + std::to_string(window) + " values to form a window");
  }
  const std::size_t rows = values.size() - window;
  SupervisedSet set{Matrix(rows, window), std::vector<double>(rows)};
  for (std::size_t i = 0; i < rows; ++i) {
    auto row = set.inputs.row(i);
    for (std::size_t j = 0; j < window; ++j) row[j] = values[i + j];
    set.targets[i] = values[i + window];
  }
  return set;
}

inline SupervisedSet make_windows(const NormalizedSeries& values, std::size_t window) {
  return make_windows(std::span<const double>(values.values), window);
}

/// Rows [first, first + count) of a set.
inline SupervisedSet slice_rows(const SupervisedSet& set, std::size_t first, std::size_t count) {
  SupervisedSet out{Matrix(count, set.window()), std::vector<double>(count)};
  for (std::size_t i = 0; i < count; ++i) {
    const auto src = set.inputs.row(first + i);
    std::copy(src.begin(), src.end(), out.inputs.row(i).begin());
    out.targets[i] = set.targets[first + i];
  }
  return out;
}

/// Number of leading rows that go to training under a chronological split.
inline std::size_t train_row_count(std::size_t rows, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("split ratio must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(rows)));
  if (n_train == 0 || n_train >= rows) {
    throw DomainError("split of " + std::to_string(rows) + " rows at ratio " + format_real(ratio) +
                      " leaves an empty side");
  }
  return n_train;
}

/// Chronological split: the first floor(ratio * N) rows train, the rest test.
inline std::pair<SupervisedSet, SupervisedSet> split_train_test(const SupervisedSet& set, double ratio) {
  const std::size_t n_train = train_row_count(set.size(), ratio);
  return {slice_rows(set, 0, n_train), slice_rows(set, n_train, set.size() - n_train)};
}

}  // namespace fxnet
