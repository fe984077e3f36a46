#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fbmhedge/fbm_core.hpp"
#include "fbmhedge/hedging_engine.hpp"
#include "fbmhedge/quadrature.hpp"

namespace fbmhedge {

enum class ReportFormat { kCsv, kJson };

std::string to_string(ReportFormat format);
ReportFormat report_format_from_string(const std::string& s);
std::string to_string(FbmBackend backend);
FbmBackend backend_from_string(const std::string& s);

/// One experiment, fully described by a single config file plus flag overrides.
struct ExperimentConfig {
  ModelParams params;
  std::vector<double> trading_times{0.0, 0.25, 0.5, 0.75, 1.0};
  int refinement = 32;
  std::string payoff_kind = "call";  // call | put | identity
  double strike = 100.0;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  QuadratureConfig quadrature;
  HedgeConfig hedge;
  FbmBackend backend = FbmBackend::kCholesky;
  std::string output = "report";
  ReportFormat format = ReportFormat::kCsv;
  std::size_t workers = 0;  // 0: FBMHEDGE_WORKERS or hardware concurrency
  std::size_t n_conditional = 100000;
  std::vector<int> oracle_refinements{64, 128, 256, 512};

  void validate() const;
  Payoff payoff() const;
  GridPtr grid() const;
};

ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::string& path);

/// Worker count: explicit value if nonzero, else FBMHEDGE_WORKERS, else hardware threads.
std::size_t resolve_workers(std::size_t configured);

struct PathOutcome {
  std::size_t index = 0;
  bool ok = true;
  std::string error;
  double initial_wealth = 0.0;
  double terminal_value = 0.0;
  double terminal_payoff = 0.0;
  double terminal_error = 0.0;
  double cum_cost = 0.0;
  double ledger_residual = 0.0;  // max |V_{i+1} - V_i - pi_i dS + cost_i| / max(term size, 1)
  std::size_t violations = 0;
  std::vector<double> tracking_gap;
  std::vector<double> positions;
  std::vector<double> costs;
};

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

MeanEstimate mean_estimate(const std::vector<double>& samples);

struct StepSummary {
  std::size_t step = 0;
  double time = 0.0;
  MeanEstimate tracking_gap;
  MeanEstimate position;
  MeanEstimate cost;
};

struct KernelDiagnostics {
  double max_psi_error = 0.0;
  std::vector<double> variances;
  std::vector<double> variance_errors;
  std::vector<double> variance_clamps;
};

struct EnsembleReport {
  std::vector<PathOutcome> paths;
  std::vector<StepSummary> steps;
  MeanEstimate terminal_error;
  MeanEstimate cum_cost;
  std::size_t failures = 0;
  std::size_t violations = 0;
  double max_ledger_residual = 0.0;
  KernelDiagnostics kernels;
};

/// Runs the hedge on n_paths seeded paths. Rows are ordered by path index and
/// every number is independent of the worker count.
EnsembleReport run_experiment(const ExperimentConfig& config);

struct TrackingCheck {
  std::size_t step = 0;
  double time = 0.0;
  double position = 0.0;
  double value_now = 0.0;
  MeanEstimate lhs;          // E[V^{pi^N,k}_{t_{i+1}} | F_{t_i}] by resimulation
  MeanEstimate rhs;          // E[f(S_{t_{i+1}}) | F_{t_i}] by resimulation
  MeanEstimate discrepancy;  // paired lhs - rhs
  double analytic_lhs = 0.0;
  double analytic_rhs = 0.0;  // through quadrature of the option gain
  bool within_tolerance = false;
};

struct TrackingReport {
  std::size_t path_index = 0;
  std::size_t n_conditional = 0;
  double gate_standard_errors = 3.0;
  std::vector<TrackingCheck> checks;
  bool all_within() const;
};

/// Conditional-resimulation check of the conditional-mean condition at one step:
/// the path prefix up to t_i is fixed and B_{t_{i+1}} is redrawn from its
/// conditional law.
TrackingCheck verify_tracking_step(const ExperimentConfig& config, std::size_t step,
                                   std::size_t n_conditional, std::size_t path_index = 0);
TrackingReport verify_tracking(const ExperimentConfig& config, std::size_t step,
                               std::size_t n_conditional, std::size_t path_index = 0);
TrackingReport verify_tracking_all(const ExperimentConfig& config, std::size_t n_conditional,
                                   std::size_t path_index = 0);

struct IdentityResidual {
  double t = 0.0;
  double hurst = 0.0;
  double integral = 0.0;  // \int_0^t k(t,v)^2 dv
  double target = 0.0;    // t^{2H}
  double relative_residual = 0.0;
  double quadrature_error = 0.0;
};

struct OracleComparison {
  int refinement = 0;
  double mean_relative_error = 0.0;       // RMS(kernel mean - oracle mean) / RMS(oracle mean)
  double increment_relative_error = 0.0;  // same, normalized by RMS of the predicted increment
  double oracle_variance = 0.0;
  double kernel_variance = 0.0;
  double variance_relative_error = 0.0;
  double max_psi_error = 0.0;
};

struct ReductionCheck {
  std::string name;
  double residual = 0.0;
};

struct KernelReport {
  std::vector<IdentityResidual> identity;
  double oracle_u = 0.0;
  double oracle_t = 0.0;
  double oracle_hurst = 0.0;
  int conditioning_points = 0;
  std::vector<OracleComparison> oracle;
  std::vector<ReductionCheck> brownian;
};

/// Kernel identity sweep over t in {0.5, 1, 2} and H in {0.6, 0.75, 0.9}.
std::vector<IdentityResidual> kernel_identity_sweep(const QuadratureConfig& q);

/// Kernel mean and variance against exact Gaussian conditioning on a grid of
/// `conditioning_points` equally spaced observations of [0, u], each interval
/// refined as listed; target t.
std::vector<OracleComparison> oracle_sweep(double u, double t, int conditioning_points,
                                           const std::vector<int>& refinements, HurstIndex h,
                                           const QuadratureConfig& q);

/// H = 1/2 reduction suite: kernel, mean, variance and hedge against the Brownian formulas.
std::vector<ReductionCheck> brownian_reduction_suite(const ExperimentConfig& config);

KernelReport verify_kernels(const ExperimentConfig& config);

}  // namespace fbmhedge
