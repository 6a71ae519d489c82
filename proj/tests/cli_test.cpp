#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "fxnet/checkpoint.hpp"

namespace fxnet::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fxnet-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "fxnet");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static std::size_t line_count(const fs::path& p) {
    const auto text = slurp(p);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, SynthWritesRequestedRows) {
  ASSERT_EQ(run({"synth", "--kind", "gbm-walk", "--n", "2100", "--seed", "7", "--out", path("rates.csv")}), kOk)
      << err_.str();
  std::ifstream in(path("rates.csv"));
  const auto series = load_rate_series(in);
  EXPECT_EQ(series.size(), 2100u);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({"train", "--bogus"}), kUsage);
  EXPECT_FALSE(err_.str().empty());
  EXPECT_EQ(run({}), kUsage);
  EXPECT_EQ(run({"frobnicate"}), kUsage);
  EXPECT_EQ(run({"synth", "--kind", "lorenz", "--out", path("x.csv")}), kUsage);
  EXPECT_EQ(run({"synth", "--n", "1", "--out", path("x.csv")}), kUsage);
  EXPECT_FALSE(fs::exists(path("x.csv")));
  EXPECT_EQ(run({"--help"}), kOk);
  EXPECT_NE(out_.str().find("synth"), std::string::npos);
}

TEST_F(CliTest, InvalidCombinationWritesNothing) {
  ASSERT_EQ(run({"synth", "--n", "400", "--out", path("rates.csv")}), kOk);
  EXPECT_EQ(run({"train", "--data", path("rates.csv"), "--model", "ff", "--trainer", "ekf", "--out", path("r")}),
            kUsage);
  EXPECT_EQ(run({"train", "--data", path("rates.csv"), "--model", "elman", "--trainer", "rprop+", "--out",
                 path("r")}),
            kUsage);
  EXPECT_EQ(run({"train", "--data", path("rates.csv"), "--split", "1.5", "--out", path("r")}), kUsage);
  EXPECT_FALSE(fs::exists(path("r")));
}

TEST_F(CliTest, DataErrors) {
  EXPECT_EQ(run({"train", "--data", path("missing.csv"), "--out", path("r")}), kDataError);
  std::ofstream(path("bad.csv")) << "date,rate\n2005-01-04,1\n2005-01-03,2\n";
  EXPECT_EQ(run({"preprocess", "--data", path("bad.csv"), "--out", path("p")}), kDataError);
  std::ofstream(path("junk.json")) << "{\"format\": \"fxnet-checkpoint\"";
  ASSERT_EQ(run({"synth", "--n", "100", "--out", path("rates.csv")}), kOk);
  EXPECT_EQ(run({"evaluate", "--checkpoint", path("junk.json"), "--data", path("rates.csv"), "--out", path("e")}),
            kDataError);
}

TEST_F(CliTest, TrainWritesCheckpointAndCurve) {
  ASSERT_EQ(run({"synth", "--kind", "nonlinear-ar", "--n", "800", "--out", path("rates.csv")}), kOk);
  ASSERT_EQ(run({"train", "--model", "ff", "--trainer", "irprop+", "--data", path("rates.csv"), "--out",
                 path("run1")}),
            kOk)
      << err_.str();
  const auto ck = load_checkpoint(path("run1/checkpoint.json"));
  EXPECT_FALSE(ck.is_elman());
  EXPECT_EQ(ck.meta.trainer, "irprop+");
  const auto curve = slurp(path("run1/error-curve.csv"));
  EXPECT_EQ(curve.substr(0, 10), "epoch,mse\n");
  EXPECT_GT(line_count(path("run1/error-curve.csv")), 1u);
}

TEST_F(CliTest, DivergenceExitsWithNumericFailure) {
  ASSERT_EQ(run({"synth", "--n", "400", "--out", path("rates.csv")}), kOk);
  EXPECT_EQ(run({"train", "--trainer", "backprop", "--rate", "1e6", "--data", path("rates.csv"), "--out",
                 path("div")}),
            kNumericFailure);
  EXPECT_FALSE(fs::exists(path("div/checkpoint.json")));
}

TEST_F(CliTest, PreprocessEmitsPlotFiles) {
  ASSERT_EQ(run({"synth", "--n", "300", "--out", path("rates.csv")}), kOk);
  ASSERT_EQ(run({"preprocess", "--data", path("rates.csv"), "--out", path("pre")}), kOk) << err_.str();
  EXPECT_EQ(line_count(path("pre/raw-series.csv")), 301u);
  EXPECT_EQ(line_count(path("pre/normalized-series.csv")), 300u);
  EXPECT_EQ(line_count(path("pre/windows.csv")), 1u + 299u - 20u);
  EXPECT_TRUE(fs::exists(path("pre/normalization.json")));
}

TEST_F(CliTest, EvaluateAndForecastElman) {
  ASSERT_EQ(run({"synth", "--kind", "nonlinear-ar", "--n", "700", "--out", path("rates.csv")}), kOk);
  ASSERT_EQ(run({"train", "--model", "elman", "--max-epochs", "1", "--streams", "4", "--data", path("rates.csv"),
                 "--out", path("el")}),
            kOk)
      << err_.str();
  ASSERT_EQ(run({"evaluate", "--checkpoint", path("el/checkpoint.json"), "--data", path("rates.csv"), "--out",
                 path("ev")}),
            kOk)
      << err_.str();
  EXPECT_EQ(line_count(path("ev/metrics.csv")), 2u);
  const auto test_rows = line_count(path("ev/forecast-vs-actual.csv")) - 1;
  EXPECT_EQ(test_rows, 679u - static_cast<std::size_t>(0.8 * 679));
  ASSERT_EQ(run({"forecast", "--checkpoint", path("el/checkpoint.json"), "--data", path("rates.csv")}), kOk);
  const double rate = std::stod(out_.str());
  EXPECT_TRUE(std::isfinite(rate));
  EXPECT_GT(rate, 0.0);
}

TEST_F(CliTest, ConfigFileAndFlagsOverride) {
  ASSERT_EQ(run({"synth", "--n", "400", "--out", path("rates.csv")}), kOk);
  std::ofstream(path("run.toml")) << "[train]\nmax-epochs = 3\ntarget-mse = 1e-12\n";
  ASSERT_EQ(run({"--config", path("run.toml"), "train", "--data", path("rates.csv"), "--out", path("a")}), kOk)
      << err_.str();
  EXPECT_EQ(line_count(path("a/error-curve.csv")), 4u);
  ASSERT_EQ(run({"--config", path("run.toml"), "train", "--data", path("rates.csv"), "--max-epochs", "5", "--out",
                 path("b")}),
            kOk);
  EXPECT_EQ(line_count(path("b/error-curve.csv")), 6u);
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  ASSERT_EQ(run({"synth", "--n", "400", "--out", path("rates.csv")}), kOk);
  ::setenv(kOutputDirEnv, path("from-env").c_str(), 1);
  const int code = run({"train", "--data", path("rates.csv"), "--max-epochs", "2"});
  ::unsetenv(kOutputDirEnv);
  ASSERT_EQ(code, kOk) << err_.str();
  EXPECT_TRUE(fs::exists(path("from-env/checkpoint.json")));
}

TEST_F(CliTest, CompareWritesReport) {
  ASSERT_EQ(run({"synth", "--kind", "nonlinear-ar", "--n", "600", "--out", path("rates.csv")}), kOk);
  ASSERT_EQ(run({"compare", "--data", path("rates.csv"), "--max-epochs", "2", "--streams", "3", "--out",
                 path("cmp")}),
            kOk)
      << err_.str();
  const auto csv = slurp(path("cmp/comparison.csv"));
  for (const char* name : {"ff+backprop", "ff+rprop+", "ff+irprop+", "elman+ekf"})
    EXPECT_NE(csv.find(name), std::string::npos) << name;
  EXPECT_TRUE(fs::exists(path("cmp/comparison.txt")));
  EXPECT_TRUE(fs::exists(path("cmp/error-curve-elman-ekf.csv")));
}

}  // namespace
}  // namespace fxnet::cli
