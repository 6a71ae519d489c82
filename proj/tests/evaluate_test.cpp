#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fxnet/evaluate.hpp"

namespace fxnet {
namespace {

const NormalizationParams kUnit{0.0, 1.0, ReturnMode::LogDiff};

TrainingReport reached(std::size_t epochs) {
  TrainingReport r;
  r.epochs_run = epochs;
  r.error_curve.assign(epochs, 1e-4);
  r.stop_reason = StopReason::TargetReached;
  return r;
}

TEST(EvaluateForecasts, PerfectForecast) {
  const std::vector<double> y{0.2, 0.6, 0.45};
  const auto m = evaluate_forecasts(y, y, kUnit);
  EXPECT_EQ(m.mse, 0.0);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.directional_accuracy, 1.0);
}

TEST(EvaluateForecasts, DirectionIsJudgedAfterDenormalizing) {
  // Normalized values above 1/2 are negative returns.
  const std::vector<double> actual{0.3, 0.7, 0.4};
  const std::vector<double> opposite{0.6, 0.2, 0.9};
  EXPECT_EQ(evaluate_forecasts(opposite, actual, kUnit).directional_accuracy, 0.0);
  const std::vector<double> two_right{0.1, 0.8, 0.7};
  EXPECT_NEAR(evaluate_forecasts(two_right, actual, kUnit).directional_accuracy, 2.0 / 3.0, 1e-15);
}

TEST(EvaluateForecasts, ErrorMeasures) {
  const std::vector<double> actual{0.5, 0.5};
  const std::vector<double> pred{0.4, 0.8};
  const auto m = evaluate_forecasts(pred, actual, kUnit);
  EXPECT_NEAR(m.mse, (0.01 + 0.09) / 2, 1e-16);
  EXPECT_NEAR(m.mae, 0.2, 1e-16);
  EXPECT_NEAR(m.rmse * m.rmse, m.mse, 1e-12 * m.mse);
  EXPECT_THROW(evaluate_forecasts(std::vector<double>{}, std::vector<double>{}, kUnit), ShapeError);
  EXPECT_THROW(evaluate_forecasts(pred, std::vector<double>{0.5}, kUnit), ShapeError);
}

TEST(EvaluateForecasts, DirectionSurvivesMonotoneRescaling) {
  Rng rng(4);
  std::vector<double> a(50), b(50);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.uniform(0.05, 0.95);
    b[i] = rng.uniform(0.05, 0.95);
  }
  const NormalizationParams zero_mean{0.0, 0.01, ReturnMode::LogDiff};
  const double base = evaluate_forecasts(a, b, zero_mean).directional_accuracy;
  const NormalizationParams wider{0.0, 5.0, ReturnMode::LogDiff};
  EXPECT_EQ(evaluate_forecasts(a, b, wider).directional_accuracy, base);
}

TEST(ClampNormalized, CountsMovedValues) {
  std::size_t count = 0;
  EXPECT_EQ(clamp_normalized(0.3, &count), 0.3);
  EXPECT_EQ(count, 0u);
  EXPECT_EQ(clamp_normalized(1.2, &count), 1.0 - kClampEpsilon);
  EXPECT_EQ(clamp_normalized(-3.0, &count), kClampEpsilon);
  EXPECT_EQ(clamp_normalized(NAN, &count), 0.5);
  EXPECT_EQ(count, 3u);
}

TEST(Forecast, HalfOutputRepeatsLastRate) {
  const auto f = forecast_from_output(0.5, kUnit, 4.2);
  EXPECT_EQ(f.rate, 4.2);
  EXPECT_FALSE(f.clamped);
}

TEST(Forecast, OutOfRangeOutputIsClamped) {
  const NormalizationParams p{0.0, 0.005, ReturnMode::LogDiff};
  const auto f = forecast_from_output(1.2, p, 4.2);
  EXPECT_TRUE(f.clamped);
  EXPECT_TRUE(std::isfinite(f.rate));
  EXPECT_GT(f.rate, 0.0);
  EXPECT_LT(f.rate, 4.2);
}

TEST(Forecast, PerfectOracleReproducesRates) {
  const auto rates = generate_synthetic(SyntheticKind::NonlinearAr, 500, 8);
  for (auto mode : {ReturnMode::LogDiff, ReturnMode::LogRatio}) {
    const auto r = log_returns(rates, mode);
    const auto p = fit_normalizer(r);
    const auto y = normalize(r, p);
    for (std::size_t i = 0; i < y.values.size(); ++i) {
      const auto f = forecast_from_output(y.values[i], p, rates.rates[i]);
      ASSERT_NEAR(f.rate / rates.rates[i + 1], 1.0, 1e-9);
    }
  }
}

TEST(Forecast, WindowChecks) {
  MlpNetwork net(MlpShape{3, 2, 1});
  EXPECT_THROW(one_step_forecast(net, std::vector<double>{0.5, 0.5}, kUnit, 4.0), DomainError);
  EXPECT_THROW(one_step_forecast(net, std::vector<double>{0.5, 0.5, 1.0}, kUnit, 4.0), DomainError);
  EXPECT_THROW(one_step_forecast(net, std::vector<double>{0.5, 0.5, 0.5}, kUnit, -4.0), DomainError);
  net.output_bias[0] = 0.5;
  EXPECT_EQ(one_step_forecast(net, std::vector<double>{0.5, 0.5, 0.5}, kUnit, 4.0).rate, 4.0);
}

TEST(PredictRows, ElmanWarmupMatchesContinuousRun) {
  Rng rng(3);
  const auto net = init_elman({4, 3}, 1, 0.5);
  std::vector<double> values(60);
  for (double& v : values) v = rng.uniform(0.1, 0.9);
  const auto rows = make_windows(values, 4);
  const auto full = elman_run(net, rows.inputs, HiddenState::zeros(3));
  const auto pred = predict_rows(net, rows, 30, 10, 30);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(pred.raw[i], full.outputs[30 + i]);
  EXPECT_THROW(predict_rows(net, rows, 50, 10, 0), ShapeError);
}

TEST(CompareModels, EpochRatio) {
  const auto report = compare_models({{"rprop+", reached(100), {}}, {"irprop+", reached(75), {}}});
  ASSERT_EQ(report.ratios.size(), 1u);
  EXPECT_EQ(report.ratios[0].baseline, "rprop+");
  EXPECT_EQ(report.ratios[0].candidate, "irprop+");
  EXPECT_EQ(report.ratios[0].epoch_ratio, 0.75);
}

TEST(CompareModels, SelfComparisonIsUnity) {
  Metrics m{0.01, 0.1, 0.05, 0.6};
  const auto report = compare_models({{"a", reached(40), m}, {"b", reached(40), m}, {"c", reached(40), m}});
  ASSERT_EQ(report.ratios.size(), 3u);
  for (const auto& r : report.ratios) {
    EXPECT_EQ(r.epoch_ratio, 1.0);
    EXPECT_EQ(r.test_mse_ratio, 1.0);
  }
  EXPECT_TRUE(report.unreached().empty());
}

TEST(CompareModels, DivergedRunHasNoRatios) {
  TrainingReport diverged;
  diverged.stop_reason = StopReason::Diverged;
  diverged.epochs_run = 3;
  const auto report =
      compare_models({{"ok", reached(10), {0.01, 0.1, 0.1, 0.5}}, {"bad", diverged, {NAN, NAN, NAN, 0.0}}});
  EXPECT_FALSE(report.ratios[0].epoch_ratio.has_value());
  EXPECT_FALSE(report.ratios[0].test_mse_ratio.has_value());
  EXPECT_EQ(report.unreached(), std::vector<std::string>{"bad"});

  std::ostringstream csv, text;
  write_comparison_csv(report, csv);
  write_comparison_text(report, text);
  EXPECT_NE(csv.str().find("ok,bad,,\n"), std::string::npos) << csv.str();
  EXPECT_NE(text.str().find("never reached target: bad"), std::string::npos) << text.str();
  EXPECT_THROW(compare_models({{"alone", reached(1), {}}}), DomainError);
}

TEST(WriteMetricsCsv, Layout) {
  std::ostringstream out;
  write_metrics_csv({0.25, 0.5, 0.5, 1.0}, out);
  EXPECT_EQ(out.str(), "mse,rmse,mae,directional_accuracy\n0.25,0.5,0.5,1\n");
}

}  // namespace
}  // namespace fxnet
