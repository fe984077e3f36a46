#include "fbmhedge/hedging_engine.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace fbmhedge {

PositionSolution solve_position(double target_gain, double asset_gain, double unit_cost,
                                double prev_position, double gain_threshold) {
  const double a = target_gain;
  const double d = asset_gain;
  const double c = unit_cost;
  const double p = prev_position;
  if (!(c >= 0.0)) throw std::invalid_argument("unit cost must be nonnegative");
  if (!(std::abs(d) >= gain_threshold)) {
    std::ostringstream msg;
    msg << "expected asset gain " << d << " is below the threshold " << gain_threshold;
    throw DegenerateGainError(msg.str());
  }

  PositionSolution out;
  if (c == 0.0) {
    out.position = a / d;
    out.diagnostics.branch = out.position >= p ? SolveBranch::kBuy : SolveBranch::kSell;
    out.diagnostics.buy_valid = out.position >= p;
    out.diagnostics.sell_valid = !out.diagnostics.buy_valid;
    return out;
  }

  // Slack for the side test so that a root sitting on the kink is not lost to rounding.
  const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(p));
  double buy = 0.0;
  double sell = 0.0;
  bool buy_valid = false;
  bool sell_valid = false;
  if (d != c) {
    buy = (a - c * p) / (d - c);
    buy_valid = buy - p >= -slack;
  }
  if (d != -c) {
    sell = (a + c * p) / (d + c);
    sell_valid = sell - p < slack;
  }
  out.diagnostics.buy_valid = buy_valid;
  out.diagnostics.sell_valid = sell_valid;
  if (!buy_valid && !sell_valid) {
    std::ostringstream msg;
    msg << "no position satisfies pi*" << d << " = " << a << " + " << c << "*|pi - " << p
        << "|; transaction costs dominate the expected gain";
    throw NoSolutionError(msg.str());
  }
  if (buy_valid && (!sell_valid || std::abs(buy - p) <= std::abs(sell - p))) {
    out.position = buy;
    out.diagnostics.branch = SolveBranch::kBuy;
  } else {
    out.position = sell;
    out.diagnostics.branch = SolveBranch::kSell;
  }
  return out;
}

std::string to_string(InceptionRule rule) {
  return rule == InceptionRule::kFrictionless ? "frictionless" : "minimal-cost";
}

std::string to_string(NoSolutionPolicy policy) {
  return policy == NoSolutionPolicy::kFailFast ? "fail" : "hold";
}

std::string to_string(GainMethod method) {
  return method == GainMethod::kClosedForm ? "closed-form" : "quadrature";
}

InceptionRule inception_rule_from_string(const std::string& s) {
  if (s == "frictionless") return InceptionRule::kFrictionless;
  if (s == "minimal-cost" || s == "minimal_cost") return InceptionRule::kMinimalCost;
  throw std::invalid_argument("unknown inception rule: " + s);
}

NoSolutionPolicy no_solution_policy_from_string(const std::string& s) {
  if (s == "fail" || s == "fail-fast") return NoSolutionPolicy::kFailFast;
  if (s == "hold") return NoSolutionPolicy::kHold;
  throw std::invalid_argument("unknown no-solution policy: " + s);
}

GainMethod gain_method_from_string(const std::string& s) {
  if (s == "closed-form" || s == "closed_form") return GainMethod::kClosedForm;
  if (s == "quadrature") return GainMethod::kQuadrature;
  throw std::invalid_argument("unknown gain method: " + s);
}

InitialPosition minimal_initial_position(const ModelParams& params, const TimeGrid& grid,
                                         const Payoff& payoff, const QuadratureConfig& q) {
  params.validate();
  const double t1 = grid.trading_times()[1];
  StepState state;
  state.s_now = params.spot;
  state.t_now = 0.0;
  state.t_next = t1;
  state.delta_bhat = 0.0;
  state.rhat = covariance(t1, t1, params.hurst);  // r^(t_1 | 0) = t_1^{2H}
  state.params = params;

  InitialPosition out;
  out.expected_gain_ratio = expected_asset_gain(state) / params.spot;
  if (params.cost < std::abs(out.expected_gain_ratio)) {
    std::ostringstream msg;
    msg << "minimal-cost inception is unbounded: k = " << params.cost
        << " < |expected return on [0, t_1]| = " << std::abs(out.expected_gain_ratio);
    throw UnboundedError(msg.str());
  }
  out.position = 0.0;
  out.riskless = conditional_payoff_expectation(state, payoff, q);
  return out;
}

HedgeEngine::HedgeEngine(ModelParams params, Payoff payoff,
                         std::shared_ptr<const PredictionKernels> kernels, HedgeConfig config)
    : params_(params), payoff_(std::move(payoff)), kernels_(std::move(kernels)), config_(config) {
  params_.validate();
  if (!kernels_) throw std::invalid_argument("hedge engine needs prediction kernels");
  if (kernels_->hurst().value() != params_.hurst.value()) {
    throw std::invalid_argument("prediction kernels were built for a different Hurst index");
  }
}

HedgeRun HedgeEngine::prepare(const AssetPath& s) const {
  const TimeGrid& grid = *kernels_->grid();
  const std::size_t n = grid.steps();
  if (s.values.size() != grid.points().size()) {
    throw std::invalid_argument("asset path does not match the kernel grid");
  }
  HedgeRun run;
  run.ledger.positions.assign(n, 0.0);
  run.ledger.trades.assign(n, 0.0);
  run.ledger.costs.assign(n, 0.0);
  run.ledger.riskless.assign(n + 1, 0.0);
  run.ledger.value.assign(n + 1, 0.0);
  run.prices.resize(n + 1);
  run.frictionless.resize(n + 1);
  run.tracking_gap.assign(n + 1, 0.0);
  run.steps.resize(n);
  for (std::size_t i = 0; i <= n; ++i) {
    run.prices[i] = s.values[grid.trading_index(i)];
    run.frictionless[i] = payoff_(run.prices[i]);
  }
  return run;
}

StepState HedgeEngine::step_state(const FbmPath& b, const AssetPath& s, std::size_t i) const {
  const TimeGrid& grid = *kernels_->grid();
  StepState state;
  state.s_now = s.values[grid.trading_index(i)];
  state.t_now = grid.trading_times()[i];
  state.t_next = grid.trading_times()[i + 1];
  state.delta_bhat = params_.hurst.is_brownian() ? 0.0 : kernels_->predicted_increment(b, i);
  state.rhat = kernels_->variance(i);
  state.params = params_;
  return state;
}

double HedgeEngine::asset_gain(const StepState& state) const { return expected_asset_gain(state); }

double HedgeEngine::option_gain(const StepState& state) const {
  if (config_.gain_method == GainMethod::kClosedForm) {
    switch (payoff_.kind()) {
      case Payoff::Kind::kIdentity:
        return expected_asset_gain(state);
      case Payoff::Kind::kCall:
        return call_gain_closed_form(state, payoff_.strike());
      case Payoff::Kind::kPut:
        return put_gain_closed_form(state, payoff_.strike());
      case Payoff::Kind::kCustom:
        break;
    }
  }
  return expected_option_gain(state, payoff_, config_.quadrature);
}

StepDecision HedgeEngine::decide(const HedgeRun& run, std::size_t i, const StepState& state) const {
  StepDecision out;
  StepRecord& rec = out.record;
  rec.state = state;
  rec.asset_gain = asset_gain(state);
  rec.option_gain = option_gain(state);
  const double s = state.s_now;
  const double unit_cost = params_.cost * s;
  const double threshold = config_.gain_threshold * s;

  if (i == 0) {
    if (config_.inception == InceptionRule::kMinimalCost) {
      if (params_.cost < std::abs(rec.asset_gain / s)) {
        throw UnboundedError("minimal-cost inception is unbounded for these parameters");
      }
      out.position = 0.0;
      out.initial_wealth = run.frictionless[0] + rec.option_gain;
    } else {
      if (!(std::abs(rec.asset_gain) >= threshold)) {
        throw DegenerateGainError("expected asset gain vanishes on the first interval");
      }
      out.position = rec.option_gain / rec.asset_gain;
      out.initial_wealth = run.frictionless[0] + unit_cost * std::abs(out.position);
    }
    rec.target_gain = rec.option_gain + (run.frictionless[0] - out.initial_wealth);
    rec.diagnostics.branch = out.position >= 0.0 ? SolveBranch::kBuy : SolveBranch::kSell;
    out.trade = out.position;
    out.cost = unit_cost * std::abs(out.trade);
    return out;
  }

  const double prev = run.ledger.positions[i - 1];
  rec.target_gain = rec.option_gain + (run.frictionless[i] - run.ledger.value[i]);
  try {
    const PositionSolution sol = solve_position(rec.target_gain, rec.asset_gain, unit_cost, prev, threshold);
    out.position = sol.position;
    rec.diagnostics = sol.diagnostics;
  } catch (const NoSolutionError&) {
    if (config_.no_solution == NoSolutionPolicy::kFailFast) throw;
    out.position = prev;
    rec.held = true;
  }
  out.trade = out.position - prev;
  out.cost = unit_cost * std::abs(out.trade);
  return out;
}

void HedgeEngine::apply(HedgeRun& run, std::size_t i, const StepDecision& decision, double s_next) const {
  HedgeLedger& led = run.ledger;
  if (i == 0) {
    led.value[0] = decision.initial_wealth;
    run.tracking_gap[0] = run.frictionless[0] - led.value[0];
  }
  const double s = run.prices[i];
  run.prices[i + 1] = s_next;
  run.frictionless[i + 1] = payoff_(s_next);

  led.positions[i] = decision.position;
  led.trades[i] = decision.trade;
  led.costs[i] = decision.cost;
  led.cum_cost += decision.cost;
  led.riskless[i] = led.value[i] - decision.cost - decision.position * s;
  led.value[i + 1] = led.value[i] + decision.position * (s_next - s) - decision.cost;
  run.tracking_gap[i + 1] = run.frictionless[i + 1] - led.value[i + 1];
  run.steps[i] = decision.record;
  if (decision.record.held) ++run.violations;
  run.completed = i + 1;

  const std::size_t n = led.positions.size();
  if (i + 1 == n) {
    led.riskless[n] = led.value[n] - decision.position * s_next;
    run.terminal_error = led.value[n] - run.frictionless[n];
  }
}

void HedgeEngine::hedge_step(HedgeRun& run, std::size_t i, const StepState& state, double s_next) const {
  if (run.completed != i) throw std::logic_error("hedge steps must be applied in order");
  apply(run, i, decide(run, i, state), s_next);
}

HedgeRun HedgeEngine::run(const FbmPath& b, const AssetPath& s) const {
  HedgeRun out = prepare(s);
  const TimeGrid& grid = *kernels_->grid();
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    hedge_step(out, i, step_state(b, s, i), s.values[grid.trading_index(i + 1)]);
  }
  return out;
}

}  // namespace fbmhedge
