// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.hpp"
#include "fxnet/fxnet.hpp"
#include "fxnet/pipeline.hpp"
#include "oracles.hpp"

namespace {

using namespace fxnet;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo, double hi) {
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = rng.uniform(lo, hi);
  return m;
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag)
      : path_(fs::temp_directory_path() / ("fxnet-acceptance-" + tag + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

int cli(std::vector<std::string> args, std::string* captured = nullptr) {
  args.insert(args.begin(), "fxnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (captured) *captured = out.str();
  if (code != 0) std::fprintf(stderr, "fxnet %s exited %d: %s\n", args[1].c_str(), code, err.str().c_str());
  return code;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome feedforward_gradients() {
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const MlpShape shape{1 + rng.uniform_index(4), 1 + rng.uniform_index(6), 1 + rng.uniform_index(1)};
    const std::size_t batch = 1 + rng.uniform_index(15);
    const auto net = init_mlp(shape, 1000 + trial, 1.0);
    const Matrix x = random_matrix(batch, shape.inputs, rng, -1.0, 1.0);
    std::vector<double> t(batch * shape.outputs);
    for (double& v : t) v = rng.uniform(-1.0, 1.0);
    const auto analytic = mlp_gradient(net, BatchView(x, t)).gradient.flatten();
    const auto fd = oracle::central_difference(
        [&](const oracle::LongVec& w) { return oracle::mlp_loss(w, shape, x, t); }, oracle::widen(net.flatten()),
        1e-6L);
    worst = std::max(worst, oracle::relative_error(analytic, fd));
  }
  return {worst < 1e-6, "worst relative error " + fmt("%.2e", worst) + " over 100 instances (limit 1e-6)"};
}

Outcome recurrent_jacobians() {
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const ElmanShape shape{1 + rng.uniform_index(2), 1 + rng.uniform_index(3)};
    const std::size_t length = 1 + rng.uniform_index(14);
    const auto net = init_elman(shape, 2000 + trial, 0.8);
    const Matrix xs = random_matrix(length, shape.inputs, rng, 0.0, 1.0);
    StreamBuffer buffer(length);
    HiddenState h = HiddenState::zeros(shape.hidden);
    for (std::size_t t = 0; t < length; ++t) h = elman_advance(net, h, xs.row(t), buffer).state;
    const Vector jac = tbptt_jacobian(net, buffer, length);
    const auto fd = oracle::central_difference(
        [&](const oracle::LongVec& w) { return oracle::elman_last_output(w, shape, xs); },
        oracle::widen(net.flatten()), 1e-6L);
    worst = std::max(worst, oracle::relative_error(jac, fd));
  }
  return {worst < 1e-5, "worst relative error " + fmt("%.2e", worst) + " over 50 instances (limit 1e-5)"};
}

Outcome update_rules() {
  const RpropConfig c;
  std::vector<std::string> broken;
  auto expect = [&](bool ok, const char* name) {
    if (!ok) broken.emplace_back(name);
  };

  {
    RpropState s(1, c);
    std::vector<double> w{1.0};
    s.prev_grad[0] = 0.3;
    rprop_plus_update(w, std::vector<double>{0.7}, s);
    const double step = c.initial_step * c.increase;
    expect(s.step_sizes[0] == step && w[0] == 1.0 - step && s.prev_delta_w[0] == -step && s.prev_grad[0] == 0.7,
           "sign-continue");
  }
  {
    RpropState s(1, c);
    std::vector<double> w{0.88};
    s.step_sizes[0] = 0.12;
    s.prev_grad[0] = 0.7;
    s.prev_delta_w[0] = -0.12;
    rprop_plus_update(w, std::vector<double>{-0.2}, s);
    expect(w[0] == 0.88 + 0.12 && s.step_sizes[0] == 0.12 * c.decrease && s.prev_grad[0] == 0.0, "sign-flip");
  }
  {
    RpropState s(1, c);
    std::vector<double> w{0.5};
    s.prev_grad[0] = 0.4;
    rprop_plus_update(w, std::vector<double>{0.0}, s);
    expect(w[0] == 0.5 && s.step_sizes[0] == c.initial_step && s.prev_delta_w[0] == 0.0 && s.prev_grad[0] == 0.0,
           "zero-gradient");
  }
  for (bool worse : {true, false}) {
    RpropState s(1, c);
    std::vector<double> w{0.88};
    s.step_sizes[0] = 0.12;
    s.prev_grad[0] = 0.7;
    s.prev_delta_w[0] = -0.12;
    s.prev_error = 1.0;
    irprop_plus_update(w, std::vector<double>{-0.2}, s, worse ? 2.0 : 0.5);
    const double expected_w = worse ? 0.88 + 0.12 : 0.88;
    expect(w[0] == expected_w && s.step_sizes[0] == 0.12 * c.decrease && s.prev_grad[0] == 0.0 &&
               s.prev_error == (worse ? 2.0 : 0.5),
           worse ? "error-gated revert" : "error-gated keep");
  }

  // Runs of persistent or alternating signs push steps to both bounds.
  Rng rng(303);
  RpropState plus(8, c), improved(8, c);
  std::vector<double> wp(8, 0.0), wi(8, 0.0);
  std::size_t violations = 0;
  bool hit_max = false, hit_min = false;
  double flip_probability = 0.5;
  for (int step = 0; step < 10000; ++step) {
    if (step % 250 == 0) flip_probability = rng.uniform01() < 0.5 ? rng.uniform(0.0, 0.05) : rng.uniform(0.9, 1.0);
    std::vector<double> g(8);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double base = plus.prev_grad[i] != 0.0 ? plus.prev_grad[i] : rng.uniform(-1.0, 1.0);
      const double magnitude = std::pow(10.0, rng.uniform(-8.0, 3.0));
      double sign_value = base >= 0.0 ? 1.0 : -1.0;
      if (rng.uniform01() < flip_probability) sign_value = -sign_value;
      g[i] = rng.uniform01() < 0.02 ? 0.0 : sign_value * magnitude;
    }
    rprop_plus_update(wp, g, plus);
    irprop_plus_update(wi, g, improved, rng.uniform(0.0, 1.0));
    for (const auto* s : {&plus, &improved}) {
      for (double d : s->step_sizes) {
        if (!(d >= c.min_step && d <= c.max_step)) ++violations;
        hit_max = hit_max || d == c.max_step;
        hit_min = hit_min || d == c.min_step;
      }
    }
  }

  std::string detail = "rule table " + std::string(broken.empty() ? "exact" : "mismatch:");
  for (const auto& b : broken) detail += " " + b;
  detail += "; " + std::to_string(violations) + " step-bound violations in 10000 fuzzed steps";
  detail += hit_max && hit_min ? " (both bounds reached)" : " (bounds not both reached)";
  return {broken.empty() && violations == 0 && hit_max && hit_min, detail};
}

Outcome ekf_algebra() {
  auto scalar = EkfState::init(1, EkfConfig{1.0, 1.0, 0.0, 1e-12});
  std::vector<double> w{0.0};
  ekf_update(w, scalar, Matrix(1, 1, 1.0), std::vector<double>{0.5});
  const double dw = std::abs(w[0] - 0.25);
  const double dp = std::abs(scalar.covariance(0, 0) - 0.5);
  const bool scalar_ok = dw <= 1e-12 && dp <= 1e-12;

  Rng rng(404);
  double worst_asym = 0.0;
  double lowest_eig = INFINITY;
  int updates = 0;
  while (updates < 1000) {
    const std::size_t n = 1 + rng.uniform_index(29);
    auto st = EkfState::init(n, EkfConfig{});
    std::vector<double> weights(n);
    for (double& v : weights) v = rng.uniform(-1.0, 1.0);
    for (int k = 0; k < 100 && updates < 1000; ++k, ++updates) {
      const std::size_t m = 1 + rng.uniform_index(4);
      const double scale = std::pow(10.0, rng.uniform(-2.0, 1.0));
      const Matrix h = random_matrix(n, m, rng, -scale, scale);
      std::vector<double> r(m);
      for (double& v : r) v = rng.normal();
      ekf_update(weights, st, h, r);
      const auto audit = audit_covariance(st);
      worst_asym = std::max(worst_asym, audit.max_asymmetry);
      lowest_eig = std::min(lowest_eig, audit.min_eigenvalue);
    }
  }
  const bool fuzz_ok = worst_asym <= 1e-10 && lowest_eig >= -1e-8;
  return {scalar_ok && fuzz_ok, "scalar example off by " + fmt("%.1e", std::max(dw, dp)) +
                                    "; over 1000 updates max asymmetry " + fmt("%.2e", worst_asym) +
                                    ", min eigenvalue " + fmt("%.3e", lowest_eig)};
}

/// Plain one-stream EKF loop written without the multistream trainer.
std::pair<ElmanNetwork, std::vector<double>> single_stream_loop(ElmanNetwork net, std::span<const double> train,
                                                                const MultistreamConfig& cfg) {
  const auto shape = net.shape();
  const std::size_t n_in = shape.inputs;
  EkfState ekf = EkfState::init(net.parameter_count(), cfg.ekf);
  Vector weights = net.flatten();
  Matrix h(net.parameter_count(), 1);
  std::vector<double> curve;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, epoch));
    const std::size_t start = rng.uniform_index(train.size() - cfg.stream_length);
    HiddenState state = HiddenState::zeros(shape.hidden);
    StreamBuffer buffer(cfg.tbptt_window);
    double sse = 0.0;
    for (std::size_t t = 0; t + n_in < cfg.stream_length; ++t) {
      auto step = elman_advance(net, state, train.subspan(start + t, n_in), buffer);
      const double residual = train[start + t + n_in] - step.output;
      sse += residual * residual;
      state = std::move(step.state);
      const Vector jac = tbptt_jacobian(net, buffer, cfg.tbptt_window);
      for (std::size_t i = 0; i < jac.size(); ++i) h(i, 0) = jac[i];
      ekf_update(weights, ekf, h, std::vector<double>{residual});
      net.assign(weights);
    }
    curve.push_back(sse / static_cast<double>(cfg.stream_length - n_in));
    if (curve.back() <= cfg.target_mse) break;
  }
  return {std::move(net), std::move(curve)};
}

Outcome multistream_degeneracy() {
  const auto rates = generate_synthetic(SyntheticKind::NonlinearAr, 700, 5);
  const auto r = log_returns(rates);
  const auto train = normalize(r, fit_normalizer(r)).values;
  MultistreamConfig cfg;
  cfg.n_streams = 1;
  cfg.epochs = 4;
  cfg.target_mse = 1e-12;
  cfg.seed = 17;
  const auto start = init_elman({20, 10}, 9, 0.1);
  const auto [trained, report] = train_elman_multistream(start, train, cfg);
  const auto [looped, curve] = single_stream_loop(start, train, cfg);
  const bool weights_same = trained == looped;
  const bool curve_same = report.error_curve == curve;
  return {weights_same && curve_same, std::string("weights ") + (weights_same ? "bit-identical" : "differ") +
                                          ", error curve " + (curve_same ? "bit-identical" : "differs") + " over " +
                                          std::to_string(curve.size()) + " epochs"};
}

Outcome preprocessing_inverses() {
  const auto rates = generate_synthetic(SyntheticKind::GbmWalk, 2000, 6);
  const auto params = fit_normalizer(log_returns(rates));
  double worst = 0.0;
  double worst_z = 0.0;
  double holds_from = -30.0;
  for (int k = -3000; k <= 3000; ++k) {
    const double z = k / 100.0;
    const double ret = params.mean + z * params.std;
    const double err = std::abs(denormalize_value(normalize_value(ret, params), params) - ret);
    if (err > worst) {
      worst = err;
      worst_z = z;
    }
    if (err > 1e-12) holds_from = z + 0.01;
  }
  const bool identity_ok = worst <= 1e-12;

  double worst_rel = 0.0;
  for (auto kind : {SyntheticKind::GbmWalk, SyntheticKind::NonlinearAr, SyntheticKind::NoisySine}) {
    const auto series = generate_synthetic(kind, 2000, 7);
    for (auto mode : {ReturnMode::LogDiff, ReturnMode::LogRatio}) {
      const auto ret = log_returns(series, mode);
      double rebuilt = series.rates[0];
      for (std::size_t i = 0; i < ret.values.size(); ++i) {
        rebuilt = invert_returns(rebuilt, ret.values[i], mode);
        worst_rel = std::max(worst_rel, std::abs(rebuilt / series.rates[i + 1] - 1.0));
      }
    }
  }
  const bool chain_ok = worst_rel <= 1e-10;
  std::string detail = "normalize inverse worst |dR| " + fmt("%.2e", worst) + " at z=" + fmt("%.2f", worst_z) +
                       " (limit 1e-12 over |z|<=30";
  detail += identity_ok ? ")" : ", holds only for z>=" + fmt("%.2f", holds_from) + ")";
  detail += "; rate reconstruction worst relative " + fmt("%.2e", worst_rel) + " (limit 1e-10)";
  return {identity_ok && chain_ok, detail};
}

Outcome trainer_capability(double* speed_ratio) {
  Matrix xor_x(4, 2);
  xor_x(1, 1) = 1;
  xor_x(2, 0) = 1;
  xor_x(3, 0) = 1;
  xor_x(3, 1) = 1;
  const std::vector<double> xor_t{0, 1, 1, 0};
  int solved = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto [net, report] = train_feedforward(init_mlp({2, 4, 1}, seed, 0.5), BatchView(xor_x, xor_t),
                                           FeedforwardAlgorithm::IrpropPlus, {1e-3, 1000});
    if (report.stop_reason == StopReason::TargetReached && mlp_loss(net, BatchView(xor_x, xor_t)) < 1e-3) ++solved;
  }

  // Noisy sine regression: 64 points on [-1, 1], 1-10-1 net.
  const std::size_t n = 64;
  Rng rng(2024);
  Matrix x(n, 1);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    x(i, 0) = u;
    y[i] = 0.5 * std::sin(std::numbers::pi * u) + 0.02 * rng.normal();
  }
  const StopCriteria stop{2e-3, 20000};
  std::vector<double> medians;
  for (auto algo : {FeedforwardAlgorithm::IrpropPlus, FeedforwardAlgorithm::RpropPlus, FeedforwardAlgorithm::Backprop}) {
    std::vector<double> epochs;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto report = train_feedforward(init_mlp({1, 10, 1}, seed, 0.5), BatchView(x, y), algo, stop).second;
      const auto reached = report.epochs_to_target();
      epochs.push_back(reached ? static_cast<double>(*reached) : INFINITY);
    }
    medians.push_back(median(epochs));
  }
  *speed_ratio = medians[0] / medians[1];
  const bool ordered = medians[0] <= medians[1] && medians[1] <= medians[2];
  return {solved >= 8 && ordered, "XOR solved on " + std::to_string(solved) +
                                      "/10 seeds; noisy-sine median epochs irprop+ " + fmt("%g", medians[0]) +
                                      ", rprop+ " + fmt("%g", medians[1]) + ", backprop " + fmt("%g", medians[2]) +
                                      "; irprop+/rprop+ = " + fmt("%.3f", *speed_ratio)};
}

Outcome model_comparison() {
  int wins = 0;
  std::string ratios;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto rates = generate_synthetic(SyntheticKind::NonlinearAr, 2000, seed);
    const auto data = prepare_data(rates, {});
    ExperimentConfig ff;
    ff.seed = seed;
    ExperimentConfig el;
    el.seed = seed;
    el.model = ModelKind::Elman;
    el.trainer = Trainer::Ekf;
    const double ff_mse = run_experiment(data, ff).test_metrics.mse;
    const double el_mse = run_experiment(data, el).test_metrics.mse;
    const double ratio = el_mse / ff_mse;
    if (ratio <= 0.5) ++wins;
    ratios += (ratios.empty() ? "" : " ") + fmt("%.2f", ratio);
  }
  return {wins >= 7, "elman/ff test MSE ratio <= 0.5 on " + std::to_string(wins) + "/10 seeds [" + ratios + "]"};
}

Outcome determinism() {
  ScratchDir dir("determinism");
  if (cli({"synth", "--kind", "nonlinear-ar", "--n", "2100", "--seed", "3", "--out", dir / "rates.csv"}) != 0) {
    return {false, "synth failed"};
  }
  std::string detail;
  bool all_same = true;
  for (const char* model : {"ff", "elman"}) {
    const std::string trainer = std::string(model) == "ff" ? "irprop+" : "ekf";
    for (const char* run : {"a", "b"}) {
      if (cli({"train", "--model", model, "--trainer", trainer, "--seed", "11", "--data", dir / "rates.csv",
               "--out", dir / (std::string(model) + run)}) != 0) {
        return {false, std::string("train ") + model + " failed"};
      }
    }
    for (const char* file : {"checkpoint.json", "error-curve.csv"}) {
      const auto a = slurp(dir / (std::string(model) + "a/" + file));
      const auto b = slurp(dir / (std::string(model) + "b/" + file));
      const bool same = !a.empty() && a == b;
      all_same = all_same && same;
      detail += (detail.empty() ? "" : ", ") + std::string(model) + " " + file + (same ? " identical" : " DIFFERS");
    }
  }
  return {all_same, detail};
}

Outcome end_to_end() {
  ScratchDir dir("pipeline");
  const auto t0 = std::chrono::steady_clock::now();
  std::string forecast;
  const bool ran = cli({"synth", "--n", "2100", "--out", dir / "rates.csv"}) == 0 &&
                   cli({"train", "--data", dir / "rates.csv", "--out", dir / "run"}) == 0 &&
                   cli({"evaluate", "--checkpoint", dir / "run/checkpoint.json", "--data", dir / "rates.csv",
                        "--out", dir / "eval"}) == 0 &&
                   cli({"forecast", "--checkpoint", dir / "run/checkpoint.json", "--data", dir / "rates.csv"},
                       &forecast) == 0;
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!ran) return {false, "a pipeline stage exited nonzero"};
  double rate = NAN;
  try {
    rate = std::stod(forecast);
  } catch (const std::exception&) {
  }
  const bool ok = std::isfinite(rate) && rate > 0.0 && elapsed < 120.0;
  return {ok, "all stages exit 0 in " + fmt("%.1f", elapsed) + " s; forecast rate " + fmt("%.6g", rate)};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  double speed_ratio = NAN;
  const double kNoLimit = INFINITY;
  const std::vector<Criterion> criteria{
      {1, "gradient oracle (feedforward)", 10.0, feedforward_gradients},
      {2, "gradient oracle (recurrent)", 30.0, recurrent_jacobians},
      {3, "update-rule suite", kNoLimit, update_rules},
      {4, "EKF algebra", kNoLimit, ekf_algebra},
      {5, "multistream degeneracy", kNoLimit, multistream_degeneracy},
      {6, "preprocessing inverses", kNoLimit, preprocessing_inverses},
      {7, "trainer capability", 120.0, [&] { return trainer_capability(&speed_ratio); }},
      {8, "elman+ekf vs ff+irprop+", 300.0, model_comparison},
      {9, "determinism", kNoLimit, determinism},
      {10, "end-to-end pipeline", 120.0, end_to_end},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = elapsed < c.time_limit;
    const bool pass = outcome.pass && in_time;
    if (!pass) ++failures;
    std::string timing = fmt("%.2f s", elapsed);
    if (std::isfinite(c.time_limit)) timing += fmt(in_time ? ", limit %g s" : ", OVER limit %g s", c.time_limit);
    std::printf("%s criterion %2d %s: %s (%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, outcome.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
