#pragma once

#include "fbmhedge/fbm_core.hpp"
#include "fbmhedge/payoff.hpp"
#include "fbmhedge/quadrature.hpp"

namespace fbmhedge {

/// Inputs of one trading interval [t_now, t_next]: the current price and the
/// conditional law of B_{t_next} given the path up to t_now, in the form
/// delta_bhat = B^_{t_next}(t_now) - B_{t_now} and rhat = r^(t_next | t_now).
struct StepState {
  double s_now = 0.0;
  double t_now = 0.0;
  double t_next = 0.0;
  double delta_bhat = 0.0;
  double rhat = 0.0;
  ModelParams params;

  void validate() const;
  double dt() const noexcept { return t_next - t_now; }
  /// Conditional log-return location mu dt + sigma delta_bhat.
  double log_drift() const noexcept { return params.mu * dt() + params.sigma * delta_bhat; }
  /// Conditional log-return standard deviation sigma sqrt(rhat).
  double log_vol() const;
};

/// E[S_{t_next} | F_{t_now}] - S_{t_now}, via the lognormal mean.
double expected_asset_gain(const StepState& state);

/// Same quantity by Gauss-Hermite quadrature of the defining z-integral.
QuadResult expected_asset_gain_quadrature(const StepState& state, const QuadratureConfig& q);

/// E[f(S_{t_next}) | F_{t_now}] - f(S_{t_now}) by Gaussian quadrature; the payoff's
/// kinks are used as breakpoints. Throws QuadratureError when not converged.
QuadResult expected_option_gain_estimate(const StepState& state, const Payoff& payoff,
                                         const QuadratureConfig& q);
double expected_option_gain(const StepState& state, const Payoff& payoff, const QuadratureConfig& q);

/// Closed-form conditional call gain
///   S e^{X} Phi(d+) - K Phi(d-) - (S - K)^+,
/// X = m + v^2/2, d- = (ln(S/K) + m)/v, d+ = d- + v, with m = mu dt + sigma delta_bhat
/// and v = sigma sqrt(rhat). Both Phi arguments carry +m: P(S_next > K) = Phi(d-) and the
/// share-measure probability shifts d- up by v. rhat = 0 collapses to the point mass.
double call_gain_closed_form(const StepState& state, double strike);

/// Put counterpart through conditional put-call parity.
double put_gain_closed_form(const StepState& state, double strike);

/// E[f(S_{t_next}) | F_{t_now}] = expected_option_gain + f(s_now).
double conditional_payoff_expectation(const StepState& state, const Payoff& payoff,
                                      const QuadratureConfig& q);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace fbmhedge
