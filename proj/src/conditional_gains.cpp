#include "fbmhedge/conditional_gains.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fbmhedge {

void StepState::validate() const {
  if (!(s_now > 0.0)) throw std::invalid_argument("step state needs a positive price");
  if (!(t_next > t_now)) throw std::invalid_argument("step state needs t_next > t_now");
  if (!(rhat >= 0.0)) throw std::invalid_argument("step state needs rhat >= 0");
}

double StepState::log_vol() const { return params.sigma * std::sqrt(rhat); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double expected_asset_gain(const StepState& state) {
  state.validate();
  const double v = state.log_vol();
  return state.s_now * std::expm1(state.log_drift() + 0.5 * v * v);
}

QuadResult expected_asset_gain_quadrature(const StepState& state, const QuadratureConfig& q) {
  state.validate();
  const double m = state.log_drift();
  const double v = state.log_vol();
  auto g = [&](double z) { return std::exp(m + v * z); };
  QuadResult r = gaussian_expectation(g, {}, v, q.tolerance);
  r.value = state.s_now * (r.value - 1.0);
  r.error *= state.s_now;
  return r;
}

QuadResult expected_option_gain_estimate(const StepState& state, const Payoff& payoff,
                                         const QuadratureConfig& q) {
  state.validate();
  const double s = state.s_now;
  const double m = state.log_drift();
  const double v = state.log_vol();
  const double now = payoff(s);
  if (v == 0.0) return {payoff(s * std::exp(m)) - now, 0.0, 1, true};

  std::vector<double> cuts;
  for (double kink : payoff.kinks()) {
    if (kink > 0.0) cuts.push_back((std::log(kink / s) - m) / v);
  }
  auto g = [&](double z) { return payoff(s * std::exp(m + v * z)); };
  QuadResult r = gaussian_expectation(g, cuts, v, q.tolerance);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "expected_option_gain: quadrature did not converge (error " << r.error << ")";
    throw QuadratureError(msg.str(), r);
  }
  r.value -= now;
  return r;
}

double expected_option_gain(const StepState& state, const Payoff& payoff, const QuadratureConfig& q) {
  return expected_option_gain_estimate(state, payoff, q).value;
}

double call_gain_closed_form(const StepState& state, double strike) {
  state.validate();
  if (!(strike > 0.0)) throw std::invalid_argument("strike must be positive");
  const double s = state.s_now;
  const double m = state.log_drift();
  const double v = state.log_vol();
  const double intrinsic = std::max(s - strike, 0.0);
  if (v == 0.0) return std::max(s * std::exp(m) - strike, 0.0) - intrinsic;

  const double d_minus = (std::log(s / strike) + m) / v;
  const double d_plus = d_minus + v;
  return s * std::exp(m + 0.5 * v * v) * normal_cdf(d_plus) - strike * normal_cdf(d_minus) -
         intrinsic;
}

double put_gain_closed_form(const StepState& state, double strike) {
  // E[(K - S)^+] = E[(S - K)^+] - E[S] + K.
  const double s = state.s_now;
  const double call_expectation = call_gain_closed_form(state, strike) + std::max(s - strike, 0.0);
  const double mean = s + expected_asset_gain(state);
  return call_expectation - mean + strike - std::max(strike - s, 0.0);
}

double conditional_payoff_expectation(const StepState& state, const Payoff& payoff,
                                      const QuadratureConfig& q) {
  return expected_option_gain(state, payoff, q) + payoff(state.s_now);
}

}  // namespace fbmhedge
