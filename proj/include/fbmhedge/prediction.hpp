#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fbmhedge/fbm_core.hpp"
#include "fbmhedge/quadrature.hpp"

namespace fbmhedge {

// Prediction law of fBm given its own past up to time u: Gaussian with mean
//   B^_t(u) = B_u - \int_0^u Psi(t,s|u) dB_s
// and covariance
//   r^(t,s|u) = r(t,s) - \int_0^u k(t,v) k(s,v) dv.

struct PredictionQuery {
  double u;  // conditioning horizon
  double t;  // target time, t > u
  HurstIndex hurst;

  void validate() const;
};

struct ConditionalLaw {
  double mean;
  double variance;
};

/// Kernel value together with the achieved quadrature error estimate.
struct KernelEstimate {
  double value = 0.0;
  double error = 0.0;
};

/// Psi(t,s|u) for 0 < s < u <= t. Identically zero for H = 1/2 and for t = u.
/// Nonpositive for H > 1/2: the predictor adds a positive multiple of past increments.
KernelEstimate psi_weight_estimate(double t, double s, double u, HurstIndex h,
                                   const QuadratureConfig& q);
double psi_weight(double t, double s, double u, HurstIndex h, const QuadratureConfig& q);

/// Normalizing constant of the transfer kernel,
/// (H-1/2) sqrt(2H Gamma(3/2-H) / (Gamma(H+1/2) Gamma(2-2H))).
double transfer_constant(HurstIndex h);

/// k(t,s) = c_H s^{1/2-H} \int_s^t z^{H-1/2} (z-s)^{H-3/2} dz for 0 < s <= t.
/// For H = 1/2 this is the indicator of s < t.
KernelEstimate transfer_kernel_estimate(double t, double s, HurstIndex h, const QuadratureConfig& q);
double transfer_kernel(double t, double s, HurstIndex h, const QuadratureConfig& q);

/// r^(t,s|u) for u <= min(t,s).
KernelEstimate conditional_covariance_estimate(double t, double s, double u, HurstIndex h,
                                               const QuadratureConfig& q);
double conditional_covariance(double t, double s, double u, HurstIndex h,
                              const QuadratureConfig& q);

struct VarianceEstimate {
  double value = 0.0;
  double error = 0.0;
  double clamped = 0.0;  // magnitude of a round-off negative clamped to zero
};

/// r^(t|u) = r^(t,t|u). Negatives above -1e-10 t^{2H} are treated as round-off and
/// clamped to zero (reported in `clamped`); anything more negative throws QuadratureError.
VarianceEstimate conditional_variance_estimate(double t, double u, HurstIndex h,
                                               const QuadratureConfig& q);
double conditional_variance(double t, double u, HurstIndex h, const QuadratureConfig& q);

/// Psi(t, m_j | u) at the midpoints m_j of the subgrid cells [points[j], points[j+1]]
/// for j < u_index, where u = points[u_index].
std::vector<double> psi_midpoint_weights(std::span<const double> points, std::size_t u_index,
                                         double t, HurstIndex h, const QuadratureConfig& q,
                                         double* max_error = nullptr);

/// B^_t(u) on a sampled path: B_u - sum_j Psi(t, m_j|u) (B_{s_{j+1}} - B_{s_j}).
double conditional_mean(const FbmPath& path, const PredictionQuery& query,
                        const QuadratureConfig& q);

/// Path-independent prediction kernels for every trading step of one grid.
///
/// Built once (single-threaded) and read-only afterwards, so a shared instance
/// may be used from any number of worker threads.
class PredictionKernels {
 public:
  PredictionKernels(GridPtr grid, HurstIndex h, const QuadratureConfig& q);

  /// Psi(t_{i+1}, m_j | t_i) over the cells of [0, t_i].
  std::span<const double> psi_weights(std::size_t step) const { return weights_.at(step); }
  /// r^(t_{i+1} | t_i).
  double variance(std::size_t step) const { return variances_.at(step).value; }
  const VarianceEstimate& variance_estimate(std::size_t step) const { return variances_.at(step); }

  /// B^_{t_{i+1}}(t_i) - B_{t_i} for the given path.
  double predicted_increment(const FbmPath& path, std::size_t step) const;

  const GridPtr& grid() const noexcept { return grid_; }
  HurstIndex hurst() const noexcept { return hurst_; }
  double max_psi_error() const noexcept { return max_psi_error_; }

 private:
  GridPtr grid_;
  HurstIndex hurst_;
  std::vector<std::vector<double>> weights_;
  std::vector<VarianceEstimate> variances_;
  double max_psi_error_ = 0.0;
};

}  // namespace fbmhedge
