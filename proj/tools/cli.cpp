#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fxnet/fxnet.hpp"
#include "fxnet/pipeline.hpp"

namespace fxnet::cli {
namespace {

namespace fs = std::filesystem;

/// Bad flag values or combinations discovered after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training stopped on a non-finite loss or weight.
class DivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SynthOptions {
  std::string kind = "gbm-walk";
  std::size_t n = 2100;
  std::uint64_t seed = 1;
  std::string out;
  SyntheticParams params;
};

struct DataOptions {
  std::string data;
  std::string mode = "log-diff";
  std::size_t window = 20;
  double split = 0.8;
  bool train_only_stats = false;
};

struct ModelOptions {
  std::string model = "ff";
  std::optional<std::string> trainer;
  std::uint64_t seed = 1;
  std::optional<std::size_t> hidden;
  std::optional<double> init_scale;
  std::optional<double> target_mse;
  std::optional<std::size_t> max_epochs;
  double rate = 0.01;
  RpropConfig rprop;
  std::size_t streams = 20;
  std::size_t stream_length = 200;
  std::size_t tbptt_window = 20;
  EkfConfig ekf;
  bool fixed_plan = false;
};

void add_data_options(CLI::App* sub, DataOptions& o) {
  sub->add_option("--data", o.data, "Rate CSV with a date,rate header")->required();
  sub->add_option("--mode", o.mode, "Return transform")
      ->check(CLI::IsMember({"log-diff", "log-ratio"}))
      ->capture_default_str();
  sub->add_option("--window", o.window, "Past values fed to the network")->capture_default_str();
  sub->add_option("--split", o.split, "Fraction of rows used for training")->capture_default_str();
  sub->add_flag("--train-only-stats", o.train_only_stats, "Fit normalization on training rows only");
}

void add_model_options(CLI::App* sub, ModelOptions& o, bool choose_model) {
  if (choose_model) {
    sub->add_option("--model", o.model, "ff or elman")->check(CLI::IsMember({"ff", "elman"}))->capture_default_str();
    sub->add_option("--trainer", o.trainer, "backprop, rprop+, irprop+ (ff) or ekf (elman)")
        ->check(CLI::IsMember({"backprop", "rprop+", "irprop+", "ekf"}));
  }
  sub->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  sub->add_option("--hidden", o.hidden, "Hidden units (default 40 ff, 10 elman)");
  sub->add_option("--init-scale", o.init_scale, "Initial weights uniform in [-s, s] (default 0.1)");
  sub->add_option("--target-mse", o.target_mse, "Stop at this training MSE (default 1e-3 ff, 1e-4 elman)");
  sub->add_option("--max-epochs", o.max_epochs, "Epoch budget (default 1000 ff, 10 elman)");
  sub->add_option("--rate", o.rate, "Backprop learning rate")->capture_default_str();
  sub->add_option("--delta0", o.rprop.initial_step, "RPROP initial step")->capture_default_str();
  sub->add_option("--eta-plus", o.rprop.increase, "RPROP step increase factor")->capture_default_str();
  sub->add_option("--eta-minus", o.rprop.decrease, "RPROP step decrease factor")->capture_default_str();
  sub->add_option("--delta-min", o.rprop.min_step, "RPROP minimum step")->capture_default_str();
  sub->add_option("--delta-max", o.rprop.max_step, "RPROP maximum step")->capture_default_str();
  sub->add_option("--streams", o.streams, "EKF streams")->capture_default_str();
  sub->add_option("--stream-length", o.stream_length, "Points per stream")->capture_default_str();
  sub->add_option("--tbptt-window", o.tbptt_window, "Truncated BPTT depth")->capture_default_str();
  sub->add_option("--p0", o.ekf.initial_covariance, "Initial covariance diagonal")->capture_default_str();
  sub->add_option("--ekf-rate", o.ekf.learning_rate, "EKF learning rate")->capture_default_str();
  sub->add_option("--q", o.ekf.process_noise, "EKF process noise")->capture_default_str();
  sub->add_flag("--fixed-plan", o.fixed_plan, "Keep the first stream plan for every epoch");
}

CLI::Option* add_out_dir(CLI::App* sub, std::string& out) {
  return sub->add_option("--out", out, "Output directory")->envname(kOutputDirEnv)->default_str("fxnet-out");
}

ExperimentConfig build_config(const DataOptions& d, const ModelOptions& m, ModelKind model, Trainer trainer) {
  ExperimentConfig c;
  c.preprocess.mode = parse_return_mode(d.mode);
  c.preprocess.window = d.window;
  c.preprocess.split_ratio = d.split;
  c.preprocess.fit_on_train_only = d.train_only_stats;
  c.model = model;
  c.trainer = trainer;
  c.seed = m.seed;
  if (model == ModelKind::Feedforward) {
    auto& f = c.feedforward;
    f.hidden = m.hidden.value_or(40);
    f.init_scale = m.init_scale.value_or(0.1);
    f.stop = {m.target_mse.value_or(1e-3), m.max_epochs.value_or(1000)};
    f.options.learning_rate = m.rate;
    f.options.rprop = m.rprop;
  } else {
    auto& e = c.elman;
    e.hidden = m.hidden.value_or(10);
    e.init_scale = m.init_scale.value_or(0.1);
    auto& ms = e.multistream;
    ms.n_streams = m.streams;
    ms.stream_length = m.stream_length;
    ms.tbptt_window = m.tbptt_window;
    ms.epochs = m.max_epochs.value_or(10);
    ms.target_mse = m.target_mse.value_or(1e-4);
    ms.resample_each_epoch = !m.fixed_plan;
    ms.ekf = m.ekf;
  }
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  return c;
}

RateSeries read_rates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return load_rate_series(in, fs::path(path).stem().string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  writer(out);
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

void print_metrics(std::ostream& out, const Metrics& m, std::size_t clamps) {
  out << "test mse " << fmt("%.6g", m.mse) << "  rmse " << fmt("%.6g", m.rmse) << "  mae " << fmt("%.6g", m.mae)
      << "  directional accuracy " << fmt("%.4f", m.directional_accuracy) << "  clamped outputs " << clamps << '\n';
}

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  RateSeries series;
  try {
    series = generate_synthetic(parse_synthetic_kind(o.kind), o.n, o.seed, o.params);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  const fs::path path(o.out);
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  write_file(path, [&](std::ostream& s) { write_series_csv(series, s); });
  out << "wrote " << series.size() << " " << o.kind << " rates to " << o.out << '\n';
  return kOk;
}

int cmd_preprocess(const DataOptions& d, const std::string& out_dir, std::ostream& out) {
  PreprocessConfig cfg;
  cfg.mode = parse_return_mode(d.mode);
  cfg.window = d.window;
  cfg.split_ratio = d.split;
  cfg.fit_on_train_only = d.train_only_stats;
  if (cfg.window < 1 || !(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0)) {
    throw UsageError("window must be >= 1 and split in (0, 1)");
  }
  const RateSeries rates = read_rates(d.data);
  const PreparedData data = prepare_data(rates, cfg);

  const fs::path dir(out_dir);
  ensure_dir(dir);
  emit_plot_csv(PlotKind::RawSeries, raw_series_plot(rates), dir / "raw-series.csv");
  emit_plot_csv(PlotKind::NormalizedSeries, normalized_series_plot(rates, data.normalized.values),
                dir / "normalized-series.csv");
  write_file(dir / "normalization.json", [&](std::ostream& s) {
    nlohmann::json j = {{"mean", data.params.mean},
                        {"std", data.params.std},
                        {"mode", to_string(data.params.mode)},
                        {"train_rows", data.n_train},
                        {"test_rows", data.n_test()}};
    s << j.dump(2) << '\n';
  });
  write_file(dir / "windows.csv", [&](std::ostream& s) {
    for (std::size_t j = 0; j < data.rows.window(); ++j) s << 'x' << j << ',';
    s << "target\n";
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      for (double v : data.rows.inputs.row(i)) s << format_real(v) << ',';
      s << format_real(data.rows.targets[i]) << '\n';
    }
  });
  out << "returns " << data.returns.values.size() << "  mean " << fmt("%.6g", data.params.mean) << "  std "
      << fmt("%.6g", data.params.std) << "  rows " << data.rows.size() << " (" << data.n_train << " train, "
      << data.n_test() << " test)\n";
  return kOk;
}

int cmd_train(const DataOptions& d, const ModelOptions& m, const std::string& out_dir, std::ostream& out) {
  const ModelKind model = m.model == "elman" ? ModelKind::Elman : ModelKind::Feedforward;
  const Trainer trainer = parse_trainer(m.trainer.value_or(model == ModelKind::Elman ? "ekf" : "irprop+"));
  const ExperimentConfig cfg = build_config(d, m, model, trainer);
  const RateSeries rates = read_rates(d.data);
  const PreparedData data = prepare_data(rates, cfg.preprocess);
  const ExperimentResult result = run_experiment(data, cfg);

  const fs::path dir(out_dir);
  ensure_dir(dir);
  emit_plot_csv(PlotKind::ErrorCurve, error_curve_plot(result.report), dir / "error-curve.csv");
  out << m.model << " + " << to_string(trainer) << ": " << to_string(result.report.stop_reason) << " after "
      << result.report.epochs_run << " epochs, train mse " << fmt("%.6g", result.report.final_mse()) << " ("
      << fmt("%.2f", result.report.wall_time) << " s)\n";
  if (result.report.stop_reason == StopReason::Diverged) {
    throw DivergedError("training diverged; no checkpoint written");
  }
  save_checkpoint(result.checkpoint, dir / "checkpoint.json");
  print_metrics(out, result.test_metrics, result.test_predictions.clamp_count);
  return kOk;
}

PreprocessConfig checkpoint_preprocess(const Checkpoint& ck) {
  PreprocessConfig cfg;
  cfg.mode = ck.normalization.mode;
  cfg.window = ck.meta.window;
  cfg.split_ratio = ck.meta.split_ratio;
  return cfg;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data_path, const std::string& out_dir,
                 std::ostream& out) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  const RateSeries rates = read_rates(data_path);
  const PreparedData data = prepare_data(rates, checkpoint_preprocess(ck), ck.normalization);
  const ModelPredictions pred = predict_test(ck, data);
  const Metrics metrics = evaluate_forecasts(pred.clamped, data.test_targets(), data.params);

  const fs::path dir(out_dir);
  ensure_dir(dir);
  write_file(dir / "metrics.csv", [&](std::ostream& s) { write_metrics_csv(metrics, s); });
  emit_plot_csv(PlotKind::ForecastVsActual, forecast_plot(pred.clamped, data.test_targets()),
                dir / "forecast-vs-actual.csv");
  out << ck.kind() << " checkpoint on " << data.n_test() << " test rows\n";
  print_metrics(out, metrics, pred.clamp_count);
  return kOk;
}

int cmd_forecast(const std::string& checkpoint, const std::string& data_path, std::ostream& out,
                 std::ostream& err) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  const RateSeries rates = read_rates(data_path);
  const ReturnSeries returns = log_returns(rates, ck.normalization.mode);
  const NormalizedSeries norm = normalize(returns, ck.normalization);
  const std::size_t w = ck.meta.window;
  if (norm.values.size() < w) throw DomainError("need at least " + std::to_string(w + 1) + " rates to forecast");
  std::vector<double> window(norm.values.end() - static_cast<std::ptrdiff_t>(w), norm.values.end());
  for (double& v : window) v = clamp_normalized(v);
  const double last_rate = rates.rates.back();

  Forecast f;
  if (const auto* mlp = std::get_if<MlpNetwork>(&ck.model)) {
    f = one_step_forecast(*mlp, window, ck.normalization, last_rate);
  } else {
    const auto& net = std::get<ElmanNetwork>(ck.model);
    HiddenState state = HiddenState::zeros(net.shape().hidden);
    if (norm.values.size() > w) {
      const SupervisedSet rows = make_windows(norm, w);
      const std::size_t first = rows.size() - std::min(rows.size(), ck.meta.warmup);
      for (std::size_t i = first; i < rows.size(); ++i) state = elman_step(net, state, rows.inputs.row(i)).state;
    }
    f = one_step_forecast(net, state, window, ck.normalization, last_rate);
  }
  if (f.clamped) err << "note: raw output " << format_real(f.raw_output) << " was clamped into (0, 1)\n";
  if (!std::isfinite(f.rate) || !(f.rate > 0.0)) throw NumericError("forecast is not a finite positive rate");
  out << format_real(f.rate) << '\n';
  return kOk;
}

int cmd_compare(const DataOptions& d, const ModelOptions& m, const std::string& out_dir, std::ostream& out) {
  struct Run {
    std::string name;
    std::string file_stem;
    ExperimentConfig cfg;
  };
  std::vector<Run> runs;
  runs.push_back({"ff+backprop", "ff-backprop", build_config(d, m, ModelKind::Feedforward, Trainer::Backprop)});
  runs.push_back({"ff+rprop+", "ff-rprop-plus", build_config(d, m, ModelKind::Feedforward, Trainer::RpropPlus)});
  runs.push_back({"ff+irprop+", "ff-irprop-plus", build_config(d, m, ModelKind::Feedforward, Trainer::IrpropPlus)});
  runs.push_back({"elman+ekf", "elman-ekf", build_config(d, m, ModelKind::Elman, Trainer::Ekf)});

  const RateSeries rates = read_rates(d.data);
  const PreparedData data = prepare_data(rates, runs.front().cfg.preprocess);
  std::vector<ComparisonEntry> entries;
  for (const auto& run : runs) {
    auto result = run_experiment(data, run.cfg);
    entries.push_back({run.name, std::move(result.report), result.test_metrics});
  }
  const ComparisonReport report = compare_models(std::move(entries));

  const fs::path dir(out_dir);
  ensure_dir(dir);
  write_file(dir / "comparison.csv", [&](std::ostream& s) { write_comparison_csv(report, s); });
  write_file(dir / "comparison.txt", [&](std::ostream& s) { write_comparison_text(report, s); });
  for (std::size_t i = 0; i < runs.size(); ++i) {
    emit_plot_csv(PlotKind::ErrorCurve, error_curve_plot(report.entries[i].report),
                  dir / ("error-curve-" + runs[i].file_stem + ".csv"));
  }
  write_comparison_text(report, out);
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"fxnet: neural one-step forecasting of daily exchange rates", "fxnet"};
  app.set_config("--config", "", "TOML/INI file with option defaults; flags override it");
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic rate series");
  synth_cmd->add_option("--kind", synth.kind, "noisy-sine, nonlinear-ar or gbm-walk")
      ->check(CLI::IsMember({"noisy-sine", "nonlinear-ar", "gbm-walk"}))
      ->capture_default_str();
  synth_cmd->add_option("--n", synth.n, "Number of observations")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output CSV path")->required();
  auto& sp = synth.params;
  synth_cmd->add_option("--level", sp.level, "Start level (mean level for noisy-sine)")->capture_default_str();
  synth_cmd->add_option("--drift", sp.drift, "gbm-walk drift per step")->capture_default_str();
  synth_cmd->add_option("--volatility", sp.volatility, "gbm-walk volatility per step")->capture_default_str();
  synth_cmd->add_option("--amplitude", sp.amplitude, "noisy-sine amplitude")->capture_default_str();
  synth_cmd->add_option("--period", sp.period, "noisy-sine period in steps")->capture_default_str();
  synth_cmd->add_option("--sine-noise", sp.sine_noise, "noisy-sine noise std")->capture_default_str();
  synth_cmd->add_option("--ar-a", sp.ar_a, "nonlinear-ar tanh gain")->capture_default_str();
  synth_cmd->add_option("--ar-b", sp.ar_b, "nonlinear-ar tanh slope")->capture_default_str();
  synth_cmd->add_option("--ar-c", sp.ar_c, "nonlinear-ar lag-2 coefficient")->capture_default_str();
  synth_cmd->add_option("--ar-noise", sp.ar_noise, "nonlinear-ar innovation std")->capture_default_str();
  synth_cmd->add_option("--return-scale", sp.return_scale, "nonlinear-ar return scale")->capture_default_str();

  DataOptions pre_data;
  std::string pre_out;
  auto* pre_cmd = app.add_subcommand("preprocess", "Emit returns, normalized series and windows");
  add_data_options(pre_cmd, pre_data);
  add_out_dir(pre_cmd, pre_out);

  DataOptions train_data;
  ModelOptions train_model;
  std::string train_out;
  auto* train_cmd = app.add_subcommand("train", "Train one model and write a checkpoint");
  add_data_options(train_cmd, train_data);
  add_model_options(train_cmd, train_model, true);
  add_out_dir(train_cmd, train_out);

  std::string eval_ck, eval_data, eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on the held-out rows");
  eval_cmd->add_option("--checkpoint", eval_ck, "checkpoint.json")->required();
  eval_cmd->add_option("--data", eval_data, "Rate CSV")->required();
  add_out_dir(eval_cmd, eval_out);

  std::string fc_ck, fc_data;
  auto* fc_cmd = app.add_subcommand("forecast", "Print the next-day rate after the last observation");
  fc_cmd->add_option("--checkpoint", fc_ck, "checkpoint.json")->required();
  fc_cmd->add_option("--data", fc_data, "Rate CSV")->required();

  DataOptions cmp_data;
  ModelOptions cmp_model;
  std::string cmp_out;
  auto* cmp_cmd = app.add_subcommand("compare", "ff with backprop, rprop+, irprop+ against elman with ekf");
  add_data_options(cmp_cmd, cmp_data);
  add_model_options(cmp_cmd, cmp_model, false);
  add_out_dir(cmp_cmd, cmp_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  auto out_or_default = [](const std::string& v) { return v.empty() ? std::string("fxnet-out") : v; };
  try {
    if (*synth_cmd) return cmd_synth(synth, out);
    if (*pre_cmd) return cmd_preprocess(pre_data, out_or_default(pre_out), out);
    if (*train_cmd) return cmd_train(train_data, train_model, out_or_default(train_out), out);
    if (*eval_cmd) return cmd_evaluate(eval_ck, eval_data, out_or_default(eval_out), out);
    if (*fc_cmd) return cmd_forecast(fc_ck, fc_data, out, err);
    if (*cmp_cmd) return cmd_compare(cmp_data, cmp_model, out_or_default(cmp_out), out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const DivergedError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace fxnet::cli
