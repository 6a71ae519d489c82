#pragma once

// Daily rate series: CSV ingestion, CSV emission and synthetic generators.
//
// CSV layout is a `date,rate` header followed by one `YYYY-MM-DD,<decimal>`
// record per observation. Rows are taken as consecutive observations; no
// calendar gaps are filled.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fxnet/errors.hpp"
#include "fxnet/random.hpp"

namespace fxnet {

using Date = std::chrono::year_month_day;

inline std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

/// Strict ISO-8601 calendar date, `YYYY-MM-DD`.
inline Date parse_date(std::string_view text) {
  auto fail = [&] { return ParseError("invalid date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
  auto field = [&](std::size_t pos, std::size_t len) {
    int value = 0;
    const char* first = text.data() + pos;
    const auto [ptr, ec] = std::from_chars(first, first + len, value);
    if (ec != std::errc{} || ptr != first + len) throw fail();
    return value;
  };
  const Date d{std::chrono::year{field(0, 4)}, std::chrono::month{static_cast<unsigned>(field(5, 2))},
               std::chrono::day{static_cast<unsigned>(field(8, 2))}};
  if (!d.ok()) throw fail();
  return d;
}

/// 17 significant digits: parsing the text back yields the same double.
inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_real(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || first == last) {
    throw ParseError("invalid number '" + std::string(text) + "'");
  }
  return value;
}

struct RateSeries {
  std::vector<Date> dates;
  std::vector<double> rates;
  std::string label;

  std::size_t size() const noexcept { return rates.size(); }

  /// Throws OrderError or DomainError when an invariant is broken.
  void validate() const {
    if (dates.size() != rates.size()) throw DomainError("dates and rates differ in length");
    if (rates.size() < 2) throw DomainError("a rate series needs at least 2 observations");
    for (std::size_t i = 0; i < rates.size(); ++i) {
      if (!std::isfinite(rates[i]) || rates[i] <= 0.0) {
        throw DomainError("rate at " + format_date(dates[i]) + " must be positive and finite");
      }
      if (i > 0 && !(dates[i - 1] < dates[i])) {
        throw OrderError("dates not strictly increasing at " + format_date(dates[i]));
      }
    }
  }

  bool operator==(const RateSeries&) const = default;
};

inline RateSeries load_rate_series(std::istream& source, std::string label = {}) {
  RateSeries series;
  series.label = std::move(label);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "date,rate") throw ParseError("expected header 'date,rate', got '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected two fields");
    }
    const std::string_view view(line);
    try {
      series.dates.push_back(parse_date(view.substr(0, comma)));
      series.rates.push_back(parse_real(view.substr(comma + 1)));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (source.bad()) throw IoError("read failure while loading rate series");
  if (!header_seen) throw ParseError("empty input: missing 'date,rate' header");
  series.validate();
  return series;
}

inline void write_series_csv(const RateSeries& series, std::ostream& sink) {
  sink << "date,rate\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    sink << format_date(series.dates[i]) << ',' << format_real(series.rates[i]) << '\n';
  }
  sink.flush();
  if (!sink) throw IoError("write failure while emitting rate series");
}

enum class SyntheticKind { NoisySine, NonlinearAr, GbmWalk };

inline std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::NoisySine: return "noisy-sine";
    case SyntheticKind::NonlinearAr: return "nonlinear-ar";
    case SyntheticKind::GbmWalk: return "gbm-walk";
  }
  return "?";
}

inline SyntheticKind parse_synthetic_kind(std::string_view text) {
  if (text == "noisy-sine") return SyntheticKind::NoisySine;
  if (text == "nonlinear-ar") return SyntheticKind::NonlinearAr;
  if (text == "gbm-walk") return SyntheticKind::GbmWalk;
  throw DomainError("unknown synthetic kind '" + std::string(text) + "'");
}

/// Generator parameters. Each kind reads only its own group.
struct SyntheticParams {
  // Starting level (gbm-walk, nonlinear-ar) or mean level (noisy-sine).
  double level = 4.0;

  // gbm-walk: E[t+1] = E[t] * exp(drift + volatility * z)
  double drift = 0.0;
  double volatility = 0.005;

  // noisy-sine: E[t] = level + amplitude * sin(2 pi t / period) + noise * z
  double amplitude = 0.3;
  double period = 250.0;
  double sine_noise = 0.01;

  // nonlinear-ar: r[t] = a tanh(b r[t-1]) + c r[t-2] + ar_noise * z,
  // E[t] = E[t-1] * exp(return_scale * r[t])
  // Defaults give a noisy nonlinear oscillation with return std near 0.4%.
  double ar_a = 2.0;
  double ar_b = 1.0;
  double ar_c = -0.9;
  double ar_noise = 0.02;
  double return_scale = 0.01;
};

/// First date of synthetic series; later dates advance by business day.
inline constexpr Date kSyntheticStart{std::chrono::year{2005}, std::chrono::January, std::chrono::day{3}};

inline std::vector<Date> business_days(Date start, std::size_t n) {
  using namespace std::chrono;
  std::vector<Date> out;
  out.reserve(n);
  sys_days day{start};
  while (out.size() < n) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) out.emplace_back(day);
    day += days{1};
  }
  return out;
}

inline RateSeries generate_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed,
                                     const SyntheticParams& p = {}) {
  if (n < 2) throw DomainError("synthetic series needs n >= 2");
  if (!(p.level > 0.0) || !std::isfinite(p.level)) throw DomainError("level must be positive");

  RateSeries series;
  series.label = std::string(to_string(kind));
  series.dates = business_days(kSyntheticStart, n);
  series.rates.resize(n);
  Rng rng(seed);

  switch (kind) {
    case SyntheticKind::GbmWalk: {
      if (!(p.volatility >= 0.0) || !std::isfinite(p.drift)) {
        throw DomainError("gbm-walk needs volatility >= 0 and finite drift");
      }
      series.rates[0] = p.level;
      for (std::size_t t = 1; t < n; ++t) {
        series.rates[t] = series.rates[t - 1] * std::exp(p.drift + p.volatility * rng.normal());
      }
      break;
    }
    case SyntheticKind::NoisySine: {
      if (!(std::abs(p.amplitude) < p.level) || !(p.period > 0.0) || !(p.sine_noise >= 0.0)) {
        throw DomainError("noisy-sine needs |amplitude| < level, period > 0, noise >= 0");
      }
      for (std::size_t t = 0; t < n; ++t) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / p.period;
        series.rates[t] = p.level + p.amplitude * std::sin(phase) + p.sine_noise * rng.normal();
      }
      break;
    }
    case SyntheticKind::NonlinearAr: {
      if (!(p.ar_noise >= 0.0) || !(p.return_scale > 0.0) || !std::isfinite(p.ar_a) ||
          !std::isfinite(p.ar_b) || !std::isfinite(p.ar_c)) {
        throw DomainError("nonlinear-ar needs noise >= 0, return_scale > 0, finite coefficients");
      }
      double r1 = 0.0;
      double r2 = 0.0;
      series.rates[0] = p.level;
      for (std::size_t t = 1; t < n; ++t) {
        const double r = p.ar_a * std::tanh(p.ar_b * r1) + p.ar_c * r2 + p.ar_noise * rng.normal();
        series.rates[t] = series.rates[t - 1] * std::exp(p.return_scale * r);
        r2 = r1;
        r1 = r;
      }
      break;
    }
  }
  // Noise can, for extreme parameters, push a sine sample through zero.
  series.validate();
  return series;
}

}  // namespace fxnet
