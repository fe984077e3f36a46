#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmhedge/conditional_gains.hpp"
#include "fbmhedge/fbm_core.hpp"
#include "fbmhedge/payoff.hpp"
#include "fbmhedge/prediction.hpp"

namespace fbmhedge {

class NoSolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateGainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnboundedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolveBranch { kBuy, kSell };

struct SolveDiagnostics {
  SolveBranch branch = SolveBranch::kBuy;
  bool buy_valid = false;
  bool sell_valid = false;
};

struct PositionSolution {
  double position = 0.0;
  SolveDiagnostics diagnostics;
};

/// Solves pi D = A + c |pi - p| for pi, where D is the expected asset gain, A the
/// target gain, c = k S the unit transaction cost and p the previous position.
///
/// The equation is piecewise linear with a kink at p, so each side is solved in
/// closed form and kept if it lands on its own side. With both sides valid the
/// smaller trade wins. Throws DegenerateGainError when |D| < gain_threshold and
/// NoSolutionError when neither side is consistent (only possible for |D| <= c).
PositionSolution solve_position(double target_gain, double asset_gain, double unit_cost,
                                double prev_position, double gain_threshold);

enum class InceptionRule {
  kFrictionless,  // wealth f(S_0) plus the cost of opening pi_0 = dV^/dS^
  kMinimalCost,   // pi_0 = 0, all wealth riskless (needs k >= |dS^_{t_1}(0)| / S_0)
};

enum class NoSolutionPolicy {
  kFailFast,
  kHold,  // keep the previous position and count the violation
};

enum class GainMethod {
  kClosedForm,  // lognormal mean / call and put formulas where available, quadrature otherwise
  kQuadrature,
};

std::string to_string(InceptionRule rule);
std::string to_string(NoSolutionPolicy policy);
std::string to_string(GainMethod method);
InceptionRule inception_rule_from_string(const std::string& s);
NoSolutionPolicy no_solution_policy_from_string(const std::string& s);
GainMethod gain_method_from_string(const std::string& s);

struct HedgeConfig {
  InceptionRule inception = InceptionRule::kFrictionless;
  NoSolutionPolicy no_solution = NoSolutionPolicy::kFailFast;
  GainMethod gain_method = GainMethod::kClosedForm;
  double gain_threshold = 1e-12;  // relative to S_{t_i}
  QuadratureConfig quadrature;
};

/// Portfolio accounting with proportional costs charged at the left end of each
/// trading interval:
///   value[i+1] = value[i] + positions[i] (S_{i+1} - S_i) - k S_i |trades[i]|.
struct HedgeLedger {
  std::vector<double> positions;  // pi^N_{t_i}, i < N
  std::vector<double> trades;     // pi^N_{t_i} - pi^N_{t_{i-1}}, with pi^N_{t_{-1}} = 0
  std::vector<double> costs;      // k S_{t_i} |trades[i]|
  std::vector<double> riskless;   // cash after trading at t_i (index N: at maturity)
  std::vector<double> value;      // V^{pi^N,k}_{t_i}, i <= N
  double cum_cost = 0.0;
};

struct StepRecord {
  StepState state;
  double asset_gain = 0.0;
  double option_gain = 0.0;
  double target_gain = 0.0;
  SolveDiagnostics diagnostics;
  bool held = false;  // NoSolution under the hold policy
};

struct HedgeRun {
  HedgeLedger ledger;
  std::vector<double> prices;        // S_{t_i}
  std::vector<double> frictionless;  // f(S_{t_i})
  std::vector<double> tracking_gap;  // frictionless - value
  std::vector<StepRecord> steps;
  double terminal_error = 0.0;       // value[N] - f(S_T)
  std::size_t violations = 0;
  std::size_t completed = 0;         // steps applied so far
};

/// One decided trade at t_i before the market moves.
struct StepDecision {
  StepRecord record;
  double position = 0.0;
  double trade = 0.0;
  double cost = 0.0;
  double initial_wealth = 0.0;  // only meaningful at i = 0
};

struct InitialPosition {
  double riskless = 0.0;
  double position = 0.0;
  double expected_gain_ratio = 0.0;  // dS^_{t_1}(0) / S_0
};

/// Minimal-cost inception: bounded iff k >= |dS^_{t_1}(0)| / S_0, in which case the
/// minimizer holds no stock and E[f(S_{t_1})] in cash. Throws UnboundedError otherwise.
InitialPosition minimal_initial_position(const ModelParams& params, const TimeGrid& grid,
                                         const Payoff& payoff, const QuadratureConfig& q);

class HedgeEngine {
 public:
  HedgeEngine(ModelParams params, Payoff payoff, std::shared_ptr<const PredictionKernels> kernels,
              HedgeConfig config = {});

  /// Empty run sized for the kernels' grid, with prices filled from the path.
  HedgeRun prepare(const AssetPath& s) const;

  /// Conditional law inputs for step i from the observed path prefix.
  StepState step_state(const FbmPath& b, const AssetPath& s, std::size_t i) const;

  /// Conditional gains for a step.
  double asset_gain(const StepState& state) const;
  double option_gain(const StepState& state) const;

  /// Chooses pi^N_{t_i} from the ledger through t_i. Step 0 applies the inception rule.
  StepDecision decide(const HedgeRun& run, std::size_t i, const StepState& state) const;
  /// Executes the decision at t_i and marks to market at t_{i+1}.
  void apply(HedgeRun& run, std::size_t i, const StepDecision& decision, double s_next) const;
  void hedge_step(HedgeRun& run, std::size_t i, const StepState& state, double s_next) const;

  HedgeRun run(const FbmPath& b, const AssetPath& s) const;

  const ModelParams& params() const noexcept { return params_; }
  const Payoff& payoff() const noexcept { return payoff_; }
  const HedgeConfig& config() const noexcept { return config_; }
  const PredictionKernels& kernels() const noexcept { return *kernels_; }

 private:
  ModelParams params_;
  Payoff payoff_;
  std::shared_ptr<const PredictionKernels> kernels_;
  HedgeConfig config_;
};

}  // namespace fbmhedge
