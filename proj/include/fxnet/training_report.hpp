#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fxnet/data_io.hpp"
#include "fxnet/errors.hpp"

namespace fxnet {

enum class StopReason { TargetReached, MaxEpochs, Diverged };

inline std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::TargetReached: return "target-reached";
    case StopReason::MaxEpochs: return "max-epochs";
    case StopReason::Diverged: return "diverged";
  }
  return "?";
}

struct StopCriteria {
  double target_mse = 1e-3;
  std::size_t max_epochs = 1000;

  void validate() const {
    if (!(target_mse > 0.0)) throw DomainError("target MSE must be positive");
    if (max_epochs < 1) throw DomainError("epoch budget must be at least 1");
  }
};

/// Outcome of a training run. error_curve[e] is the training MSE after epoch
/// e + 1; initial_mse is the MSE before any update.
struct TrainingReport {
  std::size_t epochs_run = 0;
  std::vector<double> error_curve;
  StopReason stop_reason = StopReason::MaxEpochs;
  double wall_time = 0.0;
  double initial_mse = 0.0;

  double final_mse() const { return error_curve.empty() ? initial_mse : error_curve.back(); }

  /// Epochs needed to reach the target, if it was reached.
  std::optional<std::size_t> epochs_to_target() const {
    if (stop_reason != StopReason::TargetReached) return std::nullopt;
    return epochs_run;
  }
};

/// `epoch,mse` CSV, one row per epoch run.
inline void write_error_curve(const TrainingReport& report, std::ostream& sink) {
  sink << "epoch,mse\n";
  for (std::size_t e = 0; e < report.error_curve.size(); ++e) {
    sink << (e + 1) << ',' << format_real(report.error_curve[e]) << '\n';
  }
  sink.flush();
  if (!sink) throw IoError("write failure while emitting error curve");
}

}  // namespace fxnet
