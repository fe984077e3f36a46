#pragma once

#include <string>
#include <vector>

#include "fbmhedge/experiment.hpp"

namespace fbmhedge {

/// Column layout version of every CSV written below; bump on any change.
inline constexpr int kCsvSchemaVersion = 1;

/// Shortest round-trip decimal form of x.
std::string format_number(double x);

/// Report writers. `out` is a directory; CSV reports write one file per table,
/// JSON reports a single file with top-level {config_echo, results, diagnostics}.
/// Each returns the files written.
std::vector<std::string> write_ensemble_report(const ExperimentConfig& config,
                                               const EnsembleReport& report);
std::vector<std::string> write_tracking_report(const ExperimentConfig& config,
                                               const TrackingReport& report);
std::vector<std::string> write_kernel_report(const ExperimentConfig& config,
                                             const KernelReport& report);
std::vector<std::string> write_initial_position_report(const ExperimentConfig& config,
                                                       const InitialPosition* position,
                                                       const std::string& error);

/// The config as echoed into reports, serialized as JSON text.
std::string config_echo_json(const ExperimentConfig& config);

}  // namespace fbmhedge
