#pragma once

// Two-column CSV files for plotting: raw series, normalized series, training
// error curves and forecast-vs-actual traces.

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fxnet/data_io.hpp"
#include "fxnet/errors.hpp"
#include "fxnet/training_report.hpp"

namespace fxnet {

enum class PlotKind { RawSeries, NormalizedSeries, ErrorCurve, ForecastVsActual };

inline std::string_view to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::RawSeries: return "raw-series";
    case PlotKind::NormalizedSeries: return "normalized-series";
    case PlotKind::ErrorCurve: return "error-curve";
    case PlotKind::ForecastVsActual: return "forecast-vs-actual";
  }
  return "?";
}

/// Column headers per plot kind.
inline std::pair<std::string_view, std::string_view> plot_headers(PlotKind kind) {
  switch (kind) {
    case PlotKind::RawSeries: return {"date", "rate"};
    case PlotKind::NormalizedSeries: return {"date", "normalized"};
    case PlotKind::ErrorCurve: return {"epoch", "mse"};
    case PlotKind::ForecastVsActual: return {"predicted", "actual"};
  }
  return {"x", "y"};
}

/// First column as text (dates, epochs or numbers), second column numeric.
struct PlotColumns {
  std::vector<std::string> x;
  std::vector<double> y;
};

inline PlotColumns raw_series_plot(const RateSeries& series) {
  PlotColumns c;
  for (const auto& d : series.dates) c.x.push_back(format_date(d));
  c.y = series.rates;
  return c;
}

/// Normalized returns, dated by the later observation of each pair.
inline PlotColumns normalized_series_plot(const RateSeries& series, std::span<const double> normalized) {
  if (normalized.size() + 1 != series.size()) throw ShapeError("normalized series must be one shorter than rates");
  PlotColumns c;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    c.x.push_back(format_date(series.dates[i + 1]));
    c.y.push_back(normalized[i]);
  }
  return c;
}

inline PlotColumns error_curve_plot(const TrainingReport& report) {
  PlotColumns c;
  for (std::size_t e = 0; e < report.error_curve.size(); ++e) c.x.push_back(std::to_string(e + 1));
  c.y = report.error_curve;
  return c;
}

inline PlotColumns forecast_plot(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw ShapeError("forecast and actual columns differ in length");
  PlotColumns c;
  for (double p : predicted) c.x.push_back(format_real(p));
  c.y.assign(actual.begin(), actual.end());
  return c;
}

inline void write_plot_csv(PlotKind kind, const PlotColumns& data, std::ostream& sink) {
  if (data.x.size() != data.y.size()) throw ShapeError("plot columns differ in length");
  if (data.x.empty()) throw DomainError("nothing to plot");
  if (kind == PlotKind::NormalizedSeries) {
    for (double v : data.y)
      if (!(v > 0.0 && v < 1.0)) throw DomainError("normalized plot values must lie in (0, 1)");
  }
  const auto [hx, hy] = plot_headers(kind);
  sink << hx << ',' << hy << '\n';
  for (std::size_t i = 0; i < data.x.size(); ++i) sink << data.x[i] << ',' << format_real(data.y[i]) << '\n';
  sink.flush();
  if (!sink) throw IoError("write failure while emitting " + std::string(to_string(kind)) + " plot");
}

inline void emit_plot_csv(PlotKind kind, const PlotColumns& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_plot_csv(kind, data, out);
}

}  // namespace fxnet
