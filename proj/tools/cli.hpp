#pragma once

#include <ostream>

namespace fxnet::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kDataError = 3,
  kNumericFailure = 4,
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "FXNET_OUTPUT_DIR";

/// Runs one `fxnet` invocation: synth, preprocess, train, evaluate, forecast
/// or compare. Normal output goes to `out`, diagnostics and usage to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fxnet::cli
