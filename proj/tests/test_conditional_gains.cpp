#include <doctest.h>

#include <cmath>
#include <random>

#include "fbmhedge/conditional_gains.hpp"
#include "support.hpp"

using namespace fbmhedge;

namespace {

const QuadratureConfig kQuad{};

StepState make_state(double s, double dt, double dbhat, double rhat, double mu, double sigma,
                     double hurst = 0.75) {
  StepState st;
  st.s_now = s;
  st.t_now = 1.0;
  st.t_next = 1.0 + dt;
  st.delta_bhat = dbhat;
  st.rhat = rhat;
  st.params.mu = mu;
  st.params.sigma = sigma;
  st.params.spot = s;
  st.params.hurst = HurstIndex::from_config(hurst);
  return st;
}

StepState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return make_state(50.0 + 100.0 * u(rng), 0.01 + 0.5 * u(rng), -0.3 + 0.6 * u(rng), 0.001 + 0.3 * u(rng),
                    -0.1 + 0.3 * u(rng), 0.05 + 0.5 * u(rng));
}

// The call gain with both Phi arguments built from ln(S/K) - m and d+ = d- - v.
double mis_signed_call_gain(const StepState& st, double k) {
  const double m = st.log_drift(), v = st.log_vol();
  const double dm = (std::log(st.s_now / k) - m) / v;
  const double dp = dm - v;
  return st.s_now * std::exp(m + 0.5 * v * v) * normal_cdf(dp) - k * normal_cdf(dm) - std::max(st.s_now - k, 0.0);
}

}  // namespace

TEST_CASE("asset gain examples") {
  CHECK(expected_asset_gain(make_state(100, 0.5, 0.0, 0.0, 0.1, 0.2)) ==
        doctest::Approx(100 * std::expm1(0.05)).epsilon(1e-14));
  // Brownian case: no drift in the prediction and rhat = dt.
  CHECK(expected_asset_gain(make_state(100, 0.25, 0.0, 0.25, 0.0, 0.2, 0.5)) ==
        doctest::Approx(100 * (std::exp(0.5 * 0.04 * 0.25) - 1)).epsilon(1e-14));
  const StepState zero_sigma = make_state(80, 0.3, 0.1, 0.2, 0.07, 0.0);
  CHECK(expected_asset_gain(zero_sigma) == doctest::Approx(80 * std::expm1(0.07 * 0.3)).epsilon(1e-15));
}

TEST_CASE("asset gain closed form agrees with its quadrature") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    const StepState st = random_state(rng);
    const QuadResult q = expected_asset_gain_quadrature(st, kQuad);
    CHECK(q.value == doctest::Approx(expected_asset_gain(st)).epsilon(1e-10).scale(st.s_now));
  }
}

TEST_CASE("call gain closed form matches quadrature of its integrand") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const StepState st = random_state(rng);
    const double strike = st.s_now * (0.6 + 0.8 * u(rng));
    const double closed = call_gain_closed_form(st, strike);
    const double quad = expected_option_gain(st, Payoff::call(strike), kQuad);
    worst = std::max(worst, std::abs(closed - quad));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("the mis-signed call formula disagrees with quadrature") {
  const StepState st = make_state(100, 0.25, 0.05, 0.1, 0.05, 0.3);
  const double quad = expected_option_gain(st, Payoff::call(105.0), kQuad);
  CHECK(call_gain_closed_form(st, 105.0) == doctest::Approx(quad).epsilon(1e-10));
  CHECK(std::abs(mis_signed_call_gain(st, 105.0) - quad) > 1.0);
}

TEST_CASE("call gain limits") {
  const StepState st = make_state(100, 0.25, 0.02, 0.05, 0.03, 0.25);
  CHECK(call_gain_closed_form(st, 1e-8) == doctest::Approx(expected_asset_gain(st)).epsilon(1e-9));
  CHECK(std::abs(call_gain_closed_form(st, 1e4)) < 1e-12);
  // Point mass: rhat = 0 leaves the deterministic move.
  const StepState flat = make_state(100, 0.25, 0.02, 0.0, 0.03, 0.25);
  CHECK(call_gain_closed_form(flat, 95.0) == doctest::Approx(100 * std::exp(0.03 * 0.25 + 0.25 * 0.02) - 100).epsilon(1e-14));
  CHECK_THROWS_AS(call_gain_closed_form(st, 0.0), std::invalid_argument);
}

TEST_CASE("call gain is non-increasing in the strike") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 20; ++k) {
    const StepState st = random_state(rng);
    double prev = 1e300;
    for (double frac = 0.5; frac <= 1.5; frac += 0.05) {
      const double g = call_gain_closed_form(st, frac * st.s_now) + std::max(st.s_now - frac * st.s_now, 0.0);
      CHECK(g <= prev + 1e-12 * st.s_now);
      prev = g;
    }
  }
}

TEST_CASE("put-call parity holds for the conditional expectations") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    const StepState st = random_state(rng);
    const double strike = st.s_now * 1.1;
    const double call = conditional_payoff_expectation(st, Payoff::call(strike), kQuad);
    const double put = conditional_payoff_expectation(st, Payoff::put(strike), kQuad);
    CHECK(call - put == doctest::Approx(st.s_now + expected_asset_gain(st) - strike).epsilon(1e-9).scale(st.s_now));
    CHECK(put_gain_closed_form(st, strike) ==
          doctest::Approx(expected_option_gain(st, Payoff::put(strike), kQuad)).epsilon(1e-9).scale(st.s_now));
  }
}

TEST_CASE("convex payoffs gain at least the payoff of the predicted price") {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 50; ++k) {
    const StepState st = random_state(rng);
    const double predicted = st.s_now + expected_asset_gain(st);
    for (double strike : {0.8 * st.s_now, st.s_now, 1.2 * st.s_now}) {
      const double lower = std::max(predicted - strike, 0.0) - std::max(st.s_now - strike, 0.0);
      CHECK(call_gain_closed_form(st, strike) >= lower - 1e-12 * st.s_now);
    }
  }
}

TEST_CASE("identity and constant payoffs") {
  const StepState st = make_state(90, 0.2, -0.05, 0.08, 0.04, 0.3);
  CHECK(expected_option_gain(st, Payoff::identity(), kQuad) ==
        doctest::Approx(expected_asset_gain(st)).epsilon(1e-11));
  CHECK(std::abs(expected_option_gain(st, Payoff::constant(7.0), kQuad)) < 1e-13);
  CHECK(conditional_payoff_expectation(st, Payoff::constant(7.0), kQuad) == doctest::Approx(7.0));
}

TEST_CASE("conditional expectation at time zero matches Monte Carlo") {
  // At u = 0 the prediction is 0 and rhat = t^{2H}.
  const double t = 0.5, hv = 0.75;
  StepState st = make_state(100, t, 0.0, std::pow(t, 2 * hv), 0.05, 0.2);
  st.t_now = 0.0;
  st.t_next = t;
  const double exact = conditional_payoff_expectation(st, Payoff::call(100.0), kQuad);
  std::mt19937_64 rng(77);
  std::normal_distribution<double> z;
  const std::size_t n = 1000000;
  std::vector<double> x(n);
  const double sd = std::pow(t, hv);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = 100.0 * std::exp(0.05 * t + 0.2 * sd * z(rng));
    x[i] = std::max(s - 100.0, 0.0);
  }
  CHECK(std::abs(testsupport::mean(x) - exact) < 4.0 * testsupport::std_error(x));
  // Identity payoff, zero drift: S_0 exp(sigma^2 t^{2H} / 2).
  StepState id = st;
  id.params.mu = 0.0;
  CHECK(conditional_payoff_expectation(id, Payoff::identity(), kQuad) ==
        doctest::Approx(100 * std::exp(0.5 * 0.04 * std::pow(t, 2 * hv))).epsilon(1e-12));
}

TEST_CASE("custom smooth payoff goes through quadrature") {
  const StepState st = make_state(100, 0.25, 0.01, 0.06, 0.0, 0.2);
  const Payoff square = Payoff::custom("square", [](double s) { return s * s; }, [](double s) { return 2 * s; });
  // E[S^2] = S^2 exp(2m + 2v^2).
  const double m = st.log_drift(), v = st.log_vol();
  CHECK(conditional_payoff_expectation(st, square, kQuad) ==
        doctest::Approx(1e4 * std::exp(2 * m + 2 * v * v)).epsilon(1e-10));
}
