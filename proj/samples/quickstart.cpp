// Trains both models on a synthetic series and prints held-out scores plus a
// next-day forecast from each.

#include <cstdio>
#include <vector>

#include "fxnet/fxnet.hpp"
#include "fxnet/pipeline.hpp"

int main() {
  using namespace fxnet;

  const RateSeries rates = generate_synthetic(SyntheticKind::NonlinearAr, 1200, 7);
  ExperimentConfig cfg;
  const PreparedData data = prepare_data(rates, cfg.preprocess);
  std::printf("%zu rates, %zu training rows, %zu test rows\n", rates.size(), data.n_train, data.n_test());

  ExperimentConfig elman_cfg = cfg;
  elman_cfg.model = ModelKind::Elman;
  elman_cfg.trainer = Trainer::Ekf;
  elman_cfg.elman.multistream.epochs = 3;

  for (const ExperimentConfig& c : {cfg, elman_cfg}) {
    const ExperimentResult r = run_experiment(data, c);
    std::printf("%-5s %-8s epochs %4zu  train mse %.3e  test mse %.3e  direction %.3f\n",
                std::string(r.checkpoint.kind()).c_str(), std::string(to_string(c.trainer)).c_str(),
                r.report.epochs_run, r.report.final_mse(), r.test_metrics.mse, r.test_metrics.directional_accuracy);

    const std::size_t w = c.preprocess.window;
    const std::vector<double> window(data.normalized.values.end() - static_cast<std::ptrdiff_t>(w),
                                     data.normalized.values.end());
    Forecast f;
    if (const auto* mlp = std::get_if<MlpNetwork>(&r.checkpoint.model)) {
      f = one_step_forecast(*mlp, window, data.params, rates.rates.back());
    } else {
      const auto& net = std::get<ElmanNetwork>(r.checkpoint.model);
      HiddenState h = HiddenState::zeros(net.shape().hidden);
      const std::size_t first = data.rows.size() - std::min(data.rows.size(), c.warmup_rows());
      for (std::size_t i = first; i < data.rows.size(); ++i) h = elman_step(net, h, data.rows.inputs.row(i)).state;
      f = one_step_forecast(net, h, window, data.params, rates.rates.back());
    }
    std::printf("      last rate %.6f  forecast %.6f\n", rates.rates.back(), f.rate);
  }
}
