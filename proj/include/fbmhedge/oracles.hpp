#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fbmhedge/fbm_core.hpp"

namespace fbmhedge {

/// Solves T x = b for the symmetric positive definite Toeplitz matrix with first
/// column `column` (Levinson recursion, O(n^2)).
std::vector<double> solve_toeplitz(std::span<const double> column, std::span<const double> rhs);

/// y = T x for the symmetric Toeplitz matrix with first column `column`.
std::vector<double> toeplitz_multiply(std::span<const double> column, std::span<const double> x);

/// Exact Gaussian conditioning of B_t on B observed at h, 2h, ..., n h = u.
///
/// The observations are expressed through their stationary increments, so the
/// best linear predictor is E[B_t | data] = sum_j weights[j] (B_{(j+1)h} - B_{jh}).
struct ProjectionOracle {
  double step = 0.0;
  double target = 0.0;
  std::vector<double> increment_covariance;  // autocovariance of the increments by lag
  std::vector<double> weights;
  double variance = 0.0;  // Var(B_t | data)

  /// Root-mean-square (over the law of the path) of sum_j (w_j - weights_j) X_j.
  double rms_difference(std::span<const double> other_weights) const;
  /// Root-mean-square of the oracle mean itself.
  double rms_mean() const;
};

ProjectionOracle projection_oracle(double step, std::size_t n_obs, double target, HurstIndex h);

}  // namespace fbmhedge
