#include <doctest.h>

#include <cmath>
#include <random>

#include "fbmhedge/conditional_gains.hpp"
#include "fbmhedge/hedging_engine.hpp"
#include "support.hpp"

using namespace fbmhedge;

namespace {

struct Setup {
  GridPtr grid;
  std::shared_ptr<const PredictionKernels> kernels;
};

Setup setup(HurstIndex h, std::size_t steps = 4, int refinement = 8) {
  Setup s;
  s.grid = std::make_shared<const TimeGrid>(TimeGrid::uniform(1.0, steps, refinement));
  s.kernels = std::make_shared<const PredictionKernels>(s.grid, h, QuadratureConfig{});
  return s;
}

ModelParams params(double hurst, double cost, double mu = 0.05) {
  ModelParams p;
  p.mu = mu;
  p.sigma = 0.2;
  p.spot = 100.0;
  p.hurst = HurstIndex::from_config(hurst);
  p.cost = cost;
  return p;
}

double piecewise(double pi, double a, double d, double c, double p) { return pi * d - c * std::abs(pi - p) - a; }

}  // namespace

TEST_CASE("solve_position examples") {
  // pi = 2 + 0.1 |pi - 0| with pi >= 0: pi = 2 / 0.9.
  const PositionSolution s = solve_position(2.0, 1.0, 0.1, 0.0, 1e-12);
  CHECK(s.position == doctest::Approx(2.0 / 0.9).epsilon(1e-15));
  CHECK(s.diagnostics.branch == SolveBranch::kBuy);
  const PositionSolution sell = solve_position(-1.0, 1.0, 0.1, 0.0, 1e-12);
  CHECK(sell.position == doctest::Approx(-1.0 / 1.1).epsilon(1e-15));
  CHECK(sell.diagnostics.branch == SolveBranch::kSell);
  CHECK(solve_position(3.0, 1.5, 0.0, 7.0, 1e-12).position == 2.0);
  // Target equal to the current holding's gain: no trade.
  CHECK(solve_position(0.5 * 4.0, 0.5, 0.2, 4.0, 1e-12).position == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("solve_position failure modes") {
  CHECK_THROWS_AS(solve_position(1.0, 1e-15, 0.0, 0.0, 1e-12), DegenerateGainError);
  CHECK_THROWS_AS(solve_position(1.0, 0.1, 0.2, 0.0, 1e-12), NoSolutionError);
  CHECK_THROWS_AS(solve_position(1.0, 0.1, -0.2, 0.0, 1e-12), std::invalid_argument);
}

TEST_CASE("solve_position with two roots prefers the smaller trade") {
  // |D| < c and A < pD: both branches are valid.
  const double a = 0.5, d = 0.1, c = 0.3, p = 10.0;
  const PositionSolution s = solve_position(a, d, c, p, 1e-12);
  CHECK(s.diagnostics.buy_valid);
  CHECK(s.diagnostics.sell_valid);
  const double buy = (a - c * p) / (d - c), sell = (a + c * p) / (d + c);
  CHECK(s.position == doctest::Approx(std::abs(buy - p) <= std::abs(sell - p) ? buy : sell));
  CHECK(std::abs(piecewise(s.position, a, d, c, p)) < 1e-12);
}

TEST_CASE("solve_position satisfies its equation on random instances") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t infeasible = 0;
  for (int k = 0; k < 5000; ++k) {
    const double a = 10 * u(rng), d = u(rng), c = 0.5 * std::abs(u(rng)), p = 5 * u(rng);
    try {
      const double pi = solve_position(a, d, c, p, 1e-12).position;
      CHECK(std::abs(piecewise(pi, a, d, c, p)) <= 1e-10 * (1 + std::abs(a)));
    } catch (const NoSolutionError&) {
      ++infeasible;
      CHECK(std::abs(d) <= c);
      CHECK(a > p * d);
    }
  }
  CHECK(infeasible > 0);
}

TEST_CASE("identity payoff without costs holds one share and tracks exactly") {
  const Setup s = setup(HurstIndex(0.75));
  const HedgeEngine engine(params(0.75, 0.0), Payoff::identity(), s.kernels);
  for (std::uint64_t path = 0; path < 20; ++path) {
    const FbmPath b = FbmSampler(s.grid, HurstIndex(0.75)).sample(3, path);
    const HedgeRun run = engine.run(b, asset_path(b, engine.params()));
    for (double pi : run.ledger.positions) CHECK(pi == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(run.terminal_error) < 1e-11);
    CHECK(run.ledger.cum_cost == 0.0);
  }
}

TEST_CASE("constant payoff holds nothing") {
  const Setup s = setup(HurstIndex(0.7));
  const HedgeEngine engine(params(0.7, 0.01), Payoff::constant(12.0), s.kernels);
  const FbmPath b = FbmSampler(s.grid, HurstIndex(0.7)).sample(3, 0);
  const HedgeRun run = engine.run(b, asset_path(b, engine.params()));
  for (double pi : run.ledger.positions) CHECK(std::abs(pi) < 1e-12);
  CHECK(std::abs(run.terminal_error) < 1e-10);
}

TEST_CASE("ledger obeys the self-financing identity with costs") {
  const Setup s = setup(HurstIndex(0.75), 8, 4);
  HedgeConfig cfg;
  cfg.no_solution = NoSolutionPolicy::kHold;
  const HedgeEngine engine(params(0.75, 0.01), Payoff::call(100.0), s.kernels, cfg);
  for (std::uint64_t path = 0; path < 50; ++path) {
    const FbmPath b = FbmSampler(s.grid, HurstIndex(0.75)).sample(8, path);
    const HedgeRun run = engine.run(b, asset_path(b, engine.params()));
    const HedgeLedger& l = run.ledger;
    double cum = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < l.positions.size(); ++i) {
      const double scale = 1 + std::abs(l.value[i]) + std::abs(l.positions[i] * run.prices[i]);
      CHECK(std::abs(l.value[i + 1] - l.value[i] - l.positions[i] * (run.prices[i + 1] - run.prices[i]) + l.costs[i]) <=
            1e-12 * scale);
      CHECK(l.costs[i] == doctest::Approx(0.01 * run.prices[i] * std::abs(l.positions[i] - prev)));
      CHECK(l.riskless[i] + l.positions[i] * run.prices[i] + l.costs[i] == doctest::Approx(l.value[i]));
      cum += l.costs[i];
      prev = l.positions[i];
    }
    CHECK(l.cum_cost == doctest::Approx(cum));
    CHECK(run.terminal_error == doctest::Approx(l.value.back() - std::max(run.prices.back() - 100.0, 0.0)));
  }
}

TEST_CASE("frictionless inception pays for the opening trade") {
  const Setup s = setup(HurstIndex(0.75));
  HedgeConfig cfg;
  cfg.no_solution = NoSolutionPolicy::kHold;
  const HedgeEngine engine(params(0.75, 0.02), Payoff::call(100.0), s.kernels, cfg);
  const FbmPath b = FbmSampler(s.grid, HurstIndex(0.75)).sample(1, 0);
  const AssetPath a = asset_path(b, engine.params());
  const HedgeRun run = engine.run(b, a);
  const StepState st = engine.step_state(b, a, 0);
  const double pi0 = engine.option_gain(st) / engine.asset_gain(st);
  CHECK(run.ledger.positions[0] == doctest::Approx(pi0).epsilon(1e-14));
  CHECK(run.ledger.value[0] == doctest::Approx(0.0 + 0.02 * 100.0 * std::abs(pi0)).epsilon(1e-14));
  CHECK(run.ledger.value[0] - run.ledger.costs[0] == doctest::Approx(Payoff::call(100.0)(100.0)).scale(1.0));
}

TEST_CASE("minimal-cost inception starts flat with the expected payoff in cash") {
  const Setup s = setup(HurstIndex(0.75));
  HedgeConfig cfg;
  cfg.inception = InceptionRule::kMinimalCost;
  cfg.no_solution = NoSolutionPolicy::kHold;
  ModelParams p = params(0.75, 0.05, 0.0);
  const HedgeEngine engine(p, Payoff::call(100.0), s.kernels, cfg);
  const FbmPath b = FbmSampler(s.grid, HurstIndex(0.75)).sample(1, 0);
  const HedgeRun run = engine.run(b, asset_path(b, p));
  CHECK(run.ledger.positions[0] == 0.0);
  const InitialPosition ip = minimal_initial_position(p, *s.grid, Payoff::call(100.0), QuadratureConfig{});
  CHECK(run.ledger.value[0] == doctest::Approx(ip.riskless).epsilon(1e-13));
  p.mu = 0.5;
  const HedgeEngine steep(p, Payoff::call(100.0), s.kernels, cfg);
  CHECK_THROWS_AS(steep.run(b, asset_path(b, p)), UnboundedError);
}

TEST_CASE("initial-position boundary partitions configurations") {
  const TimeGrid g = TimeGrid::uniform(1.0, 4, 1);
  const Payoff call = Payoff::call(100.0);
  for (double mu : {-0.1, 0.0, 0.05}) {
    for (double k : {0.0, 0.001, 0.01, 0.05}) {
      ModelParams p = params(0.75, k, mu);
      StepState st;
      st.s_now = 100.0;
      st.t_next = 0.25;
      st.rhat = std::pow(0.25, 1.5);
      st.params = p;
      const bool bounded = k >= std::abs(expected_asset_gain(st)) / 100.0;
      if (bounded) {
        const InitialPosition ip = minimal_initial_position(p, g, call, QuadratureConfig{});
        CHECK(ip.position == 0.0);
        CHECK(ip.riskless == doctest::Approx(conditional_payoff_expectation(st, call, QuadratureConfig{})));
      } else {
        CHECK_THROWS_AS(minimal_initial_position(p, g, call, QuadratureConfig{}), UnboundedError);
      }
    }
  }
  // Vanishing expected return is bounded for every positive k.
  ModelParams tiny = params(0.75, 1e-9, 0.0);
  tiny.sigma = 1e-6;
  CHECK(minimal_initial_position(tiny, g, call, QuadratureConfig{}).position == 0.0);
}

TEST_CASE("no-solution policies") {
  const Setup s = setup(HurstIndex(0.75), 8, 4);
  const ModelParams p = params(0.75, 0.05);
  HedgeConfig fail, hold;
  hold.no_solution = NoSolutionPolicy::kHold;
  const HedgeEngine strict(p, Payoff::call(100.0), s.kernels, fail);
  const HedgeEngine lenient(p, Payoff::call(100.0), s.kernels, hold);
  std::size_t thrown = 0;
  for (std::uint64_t path = 0; path < 30; ++path) {
    const FbmPath b = FbmSampler(s.grid, HurstIndex(0.75)).sample(2, path);
    const AssetPath a = asset_path(b, p);
    const HedgeRun run = lenient.run(b, a);
    std::size_t held = 0;
    for (const auto& st : run.steps) held += st.held ? 1 : 0;
    CHECK(held == run.violations);
    try {
      strict.run(b, a);
      CHECK(run.violations == 0);
    } catch (const NoSolutionError&) {
      ++thrown;
      CHECK(run.violations > 0);
    }
  }
  CHECK(thrown > 0);
}

TEST_CASE("Brownian hedge sees a martingale prediction") {
  const Setup s = setup(HurstIndex::brownian());
  const HedgeEngine engine(params(0.5, 0.0), Payoff::call(100.0), s.kernels);
  const FbmPath b = FbmSampler(s.grid, HurstIndex::brownian()).sample(4, 0);
  const HedgeRun run = engine.run(b, asset_path(b, engine.params()));
  for (const auto& st : run.steps) {
    CHECK(st.state.delta_bhat == 0.0);
    CHECK(st.state.rhat == doctest::Approx(0.25).epsilon(1e-15));
  }
}

TEST_CASE("doubling spot and strike doubles values and keeps positions") {
  const Setup s = setup(HurstIndex(0.8));
  HedgeConfig cfg;
  cfg.no_solution = NoSolutionPolicy::kHold;
  ModelParams p = params(0.8, 0.01);
  const HedgeEngine one(p, Payoff::call(100.0), s.kernels, cfg);
  p.spot = 200.0;
  const HedgeEngine two(p, Payoff::call(200.0), s.kernels, cfg);
  for (std::uint64_t path = 0; path < 10; ++path) {
    const FbmPath b = FbmSampler(s.grid, HurstIndex(0.8)).sample(6, path);
    const HedgeRun r1 = one.run(b, asset_path(b, one.params()));
    const HedgeRun r2 = two.run(b, asset_path(b, two.params()));
    for (std::size_t i = 0; i < r1.ledger.positions.size(); ++i) {
      CHECK(r2.ledger.positions[i] == doctest::Approx(r1.ledger.positions[i]).epsilon(1e-12));
    }
    for (std::size_t i = 0; i < r1.ledger.value.size(); ++i) {
      CHECK(r2.ledger.value[i] == doctest::Approx(2 * r1.ledger.value[i]).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("zero cost charges nothing") {
  const Setup s = setup(HurstIndex(0.75), 8, 4);
  const HedgeEngine engine(params(0.75, 0.0), Payoff::put(95.0), s.kernels);
  for (std::uint64_t path = 0; path < 20; ++path) {
    const FbmPath b = FbmSampler(s.grid, HurstIndex(0.75)).sample(5, path);
    const HedgeRun run = engine.run(b, asset_path(b, engine.params()));
    CHECK(run.ledger.cum_cost == 0.0);
    CHECK(run.violations == 0);
  }
}

TEST_CASE("quadrature and closed-form gains give the same hedge") {
  const Setup s = setup(HurstIndex(0.75));
  HedgeConfig quad;
  quad.gain_method = GainMethod::kQuadrature;
  const ModelParams p = params(0.75, 0.0);
  const HedgeEngine a(p, Payoff::call(100.0), s.kernels);
  const HedgeEngine b(p, Payoff::call(100.0), s.kernels, quad);
  const FbmPath path = FbmSampler(s.grid, HurstIndex(0.75)).sample(9, 0);
  const HedgeRun ra = a.run(path, asset_path(path, p)), rb = b.run(path, asset_path(path, p));
  for (std::size_t i = 0; i < ra.ledger.positions.size(); ++i) {
    CHECK(rb.ledger.positions[i] == doctest::Approx(ra.ledger.positions[i]).epsilon(1e-7));
  }
}

TEST_CASE("steps must be applied in order") {
  const Setup s = setup(HurstIndex(0.75));
  const HedgeEngine engine(params(0.75, 0.0), Payoff::call(100.0), s.kernels);
  const FbmPath b = FbmSampler(s.grid, HurstIndex(0.75)).sample(1, 0);
  const AssetPath a = asset_path(b, engine.params());
  HedgeRun run = engine.prepare(a);
  CHECK_THROWS(engine.hedge_step(run, 1, engine.step_state(b, a, 1), a.values[16]));
  CHECK_THROWS_AS(HedgeEngine(params(0.6, 0.0), Payoff::call(100.0), s.kernels), std::invalid_argument);
}
