#include "fbmhedge/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "fbmhedge/oracles.hpp"
#include "fbmhedge/prediction.hpp"
#include "fbmhedge/random.hpp"

namespace fbmhedge {

namespace {

void reject_unknown_keys(const YAML::Node& node, const std::string& section,
                         const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw std::invalid_argument("config section '" + section + "' must be a map");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      throw std::invalid_argument("unknown config key '" + section + "." + key + "'");
    }
  }
}

template <typename T>
void read_if(const YAML::Node& node, const char* key, T& out) {
  if (node[key]) out = node[key].as<T>();
}

// Seeds of the conditional-resimulation draws live in their own stream family.
constexpr std::uint64_t kResimulationSalt = 0x5bd1e9955bd1e995ULL;

}  // namespace

std::string to_string(ReportFormat format) { return format == ReportFormat::kCsv ? "csv" : "json"; }

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "json") return ReportFormat::kJson;
  throw std::invalid_argument("unknown output format: " + s);
}

std::string to_string(FbmBackend backend) {
  return backend == FbmBackend::kCholesky ? "cholesky" : "circulant";
}

FbmBackend backend_from_string(const std::string& s) {
  if (s == "cholesky") return FbmBackend::kCholesky;
  if (s == "circulant") return FbmBackend::kCirculant;
  throw std::invalid_argument("unknown fBm backend: " + s);
}

void ExperimentConfig::validate() const {
  params.validate();
  quadrature.validate();
  if (n_paths < 1) throw std::invalid_argument("paths must be >= 1");
  if (n_conditional < 2) throw std::invalid_argument("n_conditional must be >= 2");
  (void)payoff();
  (void)grid();
}

Payoff ExperimentConfig::payoff() const {
  if (payoff_kind == "call") return Payoff::call(strike);
  if (payoff_kind == "put") return Payoff::put(strike);
  if (payoff_kind == "identity") return Payoff::identity();
  throw std::invalid_argument("unknown payoff kind: " + payoff_kind);
}

GridPtr ExperimentConfig::grid() const {
  return std::make_shared<const TimeGrid>(trading_times, refinement);
}

ExperimentConfig parse_config(const std::string& yaml_text) {
  const YAML::Node root = YAML::Load(yaml_text);
  ExperimentConfig cfg;
  if (!root || root.IsNull()) return cfg;
  reject_unknown_keys(root, "<root>",
                      {"model", "grid", "payoff", "simulation", "quadrature", "hedge",
                       "verification", "output"});

  if (const auto m = root["model"]) {
    reject_unknown_keys(m, "model", {"mu", "sigma", "spot", "hurst", "cost"});
    read_if(m, "mu", cfg.params.mu);
    read_if(m, "sigma", cfg.params.sigma);
    read_if(m, "spot", cfg.params.spot);
    read_if(m, "cost", cfg.params.cost);
    if (m["hurst"]) cfg.params.hurst = HurstIndex::from_config(m["hurst"].as<double>());
  }
  if (const auto g = root["grid"]) {
    reject_unknown_keys(g, "grid", {"trading_times", "maturity", "steps", "refinement"});
    read_if(g, "refinement", cfg.refinement);
    if (g["trading_times"]) {
      if (g["maturity"] || g["steps"]) {
        throw std::invalid_argument("grid: give either trading_times or maturity/steps");
      }
      cfg.trading_times = g["trading_times"].as<std::vector<double>>();
    } else if (g["maturity"] || g["steps"]) {
      const double maturity = g["maturity"] ? g["maturity"].as<double>() : 1.0;
      const auto steps = g["steps"] ? g["steps"].as<std::size_t>() : 4;
      const TimeGrid uniform = TimeGrid::uniform(maturity, steps, cfg.refinement);
      const auto times = uniform.trading_times();
      cfg.trading_times.assign(times.begin(), times.end());
    }
  }
  if (const auto p = root["payoff"]) {
    reject_unknown_keys(p, "payoff", {"kind", "strike"});
    read_if(p, "kind", cfg.payoff_kind);
    read_if(p, "strike", cfg.strike);
  }
  if (const auto s = root["simulation"]) {
    reject_unknown_keys(s, "simulation", {"paths", "seed", "backend", "workers"});
    read_if(s, "paths", cfg.n_paths);
    read_if(s, "seed", cfg.seed);
    read_if(s, "workers", cfg.workers);
    if (s["backend"]) cfg.backend = backend_from_string(s["backend"].as<std::string>());
  }
  if (const auto q = root["quadrature"]) {
    reject_unknown_keys(q, "quadrature", {"nodes_per_unit", "singular_rule", "tolerance", "max_evaluations"});
    read_if(q, "nodes_per_unit", cfg.quadrature.nodes_per_unit);
    read_if(q, "tolerance", cfg.quadrature.tolerance);
    read_if(q, "max_evaluations", cfg.quadrature.max_evaluations);
    if (q["singular_rule"]) {
      cfg.quadrature.singular_rule = singular_rule_from_string(q["singular_rule"].as<std::string>());
    }
  }
  if (const auto h = root["hedge"]) {
    reject_unknown_keys(h, "hedge", {"inception", "no_solution", "gain_method", "gain_threshold"});
    if (h["inception"]) cfg.hedge.inception = inception_rule_from_string(h["inception"].as<std::string>());
    if (h["no_solution"]) {
      cfg.hedge.no_solution = no_solution_policy_from_string(h["no_solution"].as<std::string>());
    }
    if (h["gain_method"]) cfg.hedge.gain_method = gain_method_from_string(h["gain_method"].as<std::string>());
    read_if(h, "gain_threshold", cfg.hedge.gain_threshold);
  }
  if (const auto v = root["verification"]) {
    reject_unknown_keys(v, "verification", {"n_conditional", "oracle_refinements"});
    read_if(v, "n_conditional", cfg.n_conditional);
    read_if(v, "oracle_refinements", cfg.oracle_refinements);
  }
  if (const auto o = root["output"]) {
    reject_unknown_keys(o, "output", {"path", "format"});
    read_if(o, "path", cfg.output);
    if (o["format"]) cfg.format = report_format_from_string(o["format"].as<std::string>());
  }
  cfg.hedge.quadrature = cfg.quadrature;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::size_t resolve_workers(std::size_t configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("FBMHEDGE_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

MeanEstimate mean_estimate(const std::vector<double>& samples) {
  MeanEstimate out;
  out.count = samples.size();
  if (samples.empty()) return out;
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(samples.size());
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  out.mean = mean;
  if (samples.size() > 1) {
    const double var = ss / static_cast<double>(samples.size() - 1);
    out.std_error = std::sqrt(var / static_cast<double>(samples.size()));
  }
  return out;
}

EnsembleReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const GridPtr grid = config.grid();
  HedgeConfig hedge = config.hedge;
  hedge.quadrature = config.quadrature;
  auto kernels = std::make_shared<const PredictionKernels>(grid, config.params.hurst, config.quadrature);
  const HedgeEngine engine(config.params, config.payoff(), kernels, hedge);
  const FbmSampler sampler(grid, config.params.hurst, config.backend);

  EnsembleReport report;
  report.paths.resize(config.n_paths);
  const std::size_t n_steps = grid->steps();

  auto simulate = [&](std::size_t j) {
    PathOutcome& out = report.paths[j];
    out.index = j;
    try {
      const FbmPath b = sampler.sample(config.seed, j);
      const AssetPath s = asset_path(b, config.params);
      const HedgeRun run = engine.run(b, s);
      const HedgeLedger& led = run.ledger;
      out.initial_wealth = led.value.front();
      out.terminal_value = led.value.back();
      out.terminal_payoff = run.frictionless.back();
      out.terminal_error = run.terminal_error;
      out.cum_cost = led.cum_cost;
      out.violations = run.violations;
      out.tracking_gap = run.tracking_gap;
      out.positions = led.positions;
      out.costs = led.costs;
      for (std::size_t i = 0; i < n_steps; ++i) {
        const double residual = led.value[i + 1] - led.value[i] -
                                led.positions[i] * (run.prices[i + 1] - run.prices[i]) + led.costs[i];
        const double scale = std::abs(led.value[i]) + std::abs(led.positions[i]) * (run.prices[i + 1] + run.prices[i]) +
                             led.costs[i];
        out.ledger_residual = std::max(out.ledger_residual, std::abs(residual) / std::max(scale, 1.0));
      }
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
  };

  const std::size_t workers = std::min(resolve_workers(config.workers), config.n_paths);
  if (workers <= 1) {
    for (std::size_t j = 0; j < config.n_paths; ++j) simulate(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < config.n_paths; j = next++) simulate(j);
      });
    }
    for (auto& t : pool) t.join();
  }

  // Single-writer aggregation in path order.
  std::vector<double> terminal, costs;
  std::vector<std::vector<double>> gaps(n_steps + 1), positions(n_steps), step_costs(n_steps);
  for (const PathOutcome& p : report.paths) {
    if (!p.ok) {
      ++report.failures;
      continue;
    }
    report.violations += p.violations;
    report.max_ledger_residual = std::max(report.max_ledger_residual, p.ledger_residual);
    terminal.push_back(p.terminal_error);
    costs.push_back(p.cum_cost);
    for (std::size_t i = 0; i <= n_steps; ++i) gaps[i].push_back(p.tracking_gap[i]);
    for (std::size_t i = 0; i < n_steps; ++i) {
      positions[i].push_back(p.positions[i]);
      step_costs[i].push_back(p.costs[i]);
    }
  }
  report.terminal_error = mean_estimate(terminal);
  report.cum_cost = mean_estimate(costs);
  const auto times = grid->trading_times();
  for (std::size_t i = 0; i <= n_steps; ++i) {
    StepSummary s;
    s.step = i;
    s.time = times[i];
    s.tracking_gap = mean_estimate(gaps[i]);
    if (i < n_steps) {
      s.position = mean_estimate(positions[i]);
      s.cost = mean_estimate(step_costs[i]);
    }
    report.steps.push_back(s);
  }
  report.kernels.max_psi_error = kernels->max_psi_error();
  for (std::size_t i = 0; i < n_steps; ++i) {
    const auto& v = kernels->variance_estimate(i);
    report.kernels.variances.push_back(v.value);
    report.kernels.variance_errors.push_back(v.error);
    report.kernels.variance_clamps.push_back(v.clamped);
  }
  return report;
}

bool TrackingReport::all_within() const {
  return std::all_of(checks.begin(), checks.end(), [](const TrackingCheck& c) { return c.within_tolerance; });
}

TrackingCheck verify_tracking_step(const ExperimentConfig& config, std::size_t step,
                                   std::size_t n_conditional, std::size_t path_index) {
  config.validate();
  const GridPtr grid = config.grid();
  if (step >= grid->steps()) throw std::invalid_argument("tracking step must be < number of steps");
  HedgeConfig hedge = config.hedge;
  hedge.quadrature = config.quadrature;
  auto kernels = std::make_shared<const PredictionKernels>(grid, config.params.hurst, config.quadrature);
  const Payoff payoff = config.payoff();
  const HedgeEngine engine(config.params, payoff, kernels, hedge);
  const FbmSampler sampler(grid, config.params.hurst, config.backend);

  // Realized path prefix up to t_i; only values on [0, t_i] are used below.
  const FbmPath b = sampler.sample(config.seed, path_index);
  const AssetPath s = asset_path(b, config.params);
  HedgeRun run = engine.prepare(s);
  for (std::size_t i = 0; i < step; ++i) {
    engine.hedge_step(run, i, engine.step_state(b, s, i), s.values[grid->trading_index(i + 1)]);
  }
  const StepState state = engine.step_state(b, s, step);
  const StepDecision decision = engine.decide(run, step, state);
  const double value_now = step == 0 ? decision.initial_wealth : run.ledger.value[step];

  TrackingCheck check;
  check.step = step;
  check.time = state.t_now;
  check.position = decision.position;
  check.value_now = value_now;
  check.analytic_lhs = value_now + decision.position * expected_asset_gain(state) - decision.cost;
  check.analytic_rhs = payoff(state.s_now) + expected_option_gain(state, payoff, config.quadrature);

  auto rng = make_stream(config.seed ^ kResimulationSalt, path_index * 1024 + step);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double m = state.log_drift();
  const double v = state.log_vol();
  std::vector<double> lhs(n_conditional), rhs(n_conditional), diff(n_conditional);
  for (std::size_t j = 0; j < n_conditional; ++j) {
    const double s_next = state.s_now * std::exp(m + v * normal(rng));
    lhs[j] = value_now + decision.position * (s_next - state.s_now) - decision.cost;
    rhs[j] = payoff(s_next);
    diff[j] = lhs[j] - rhs[j];
  }
  check.lhs = mean_estimate(lhs);
  check.rhs = mean_estimate(rhs);
  check.discrepancy = mean_estimate(diff);
  const double scale = 1e-9 * (1.0 + std::abs(check.rhs.mean));
  check.within_tolerance = std::abs(check.discrepancy.mean) <= 3.0 * check.discrepancy.std_error + scale;
  return check;
}

TrackingReport verify_tracking(const ExperimentConfig& config, std::size_t step,
                               std::size_t n_conditional, std::size_t path_index) {
  TrackingReport report;
  report.path_index = path_index;
  report.n_conditional = n_conditional;
  report.checks.push_back(verify_tracking_step(config, step, n_conditional, path_index));
  return report;
}

TrackingReport verify_tracking_all(const ExperimentConfig& config, std::size_t n_conditional,
                                   std::size_t path_index) {
  TrackingReport report;
  report.path_index = path_index;
  report.n_conditional = n_conditional;
  const std::size_t n = config.trading_times.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    report.checks.push_back(verify_tracking_step(config, i, n_conditional, path_index));
  }
  return report;
}

std::vector<IdentityResidual> kernel_identity_sweep(const QuadratureConfig& q) {
  std::vector<IdentityResidual> out;
  for (double hv : {0.6, 0.75, 0.9}) {
    const HurstIndex h(hv);
    for (double t : {0.5, 1.0, 2.0}) {
      // r^(t,t|t) = t^{2H} - \int_0^t k(t,v)^2 dv must vanish.
      const KernelEstimate rhat = conditional_covariance_estimate(t, t, t, h, q);
      IdentityResidual r;
      r.t = t;
      r.hurst = hv;
      r.target = std::pow(t, 2.0 * hv);
      r.integral = r.target - rhat.value;
      r.relative_residual = std::abs(rhat.value) / r.target;
      r.quadrature_error = rhat.error;
      out.push_back(r);
    }
  }
  return out;
}

std::vector<OracleComparison> oracle_sweep(double u, double t, int conditioning_points,
                                           const std::vector<int>& refinements, HurstIndex h,
                                           const QuadratureConfig& q) {
  std::vector<OracleComparison> out;
  const double kernel_variance = conditional_variance(t, u, h, q);
  for (int r : refinements) {
    const std::size_t n = static_cast<std::size_t>(conditioning_points) * static_cast<std::size_t>(r);
    const double step = u / static_cast<double>(n);
    std::vector<double> points(n + 1);
    for (std::size_t j = 0; j <= n; ++j) points[j] = static_cast<double>(j) * step;
    points[n] = u;

    OracleComparison c;
    c.refinement = r;
    const ProjectionOracle oracle = projection_oracle(step, n, t, h);
    const auto psi = psi_midpoint_weights(points, n, t, h, q, &c.max_psi_error);
    std::vector<double> kernel_weights(n);
    for (std::size_t j = 0; j < n; ++j) kernel_weights[j] = 1.0 - psi[j];
    const double diff = oracle.rms_difference(kernel_weights);
    c.mean_relative_error = diff / oracle.rms_mean();
    std::vector<double> oracle_increment(n);
    for (std::size_t j = 0; j < n; ++j) oracle_increment[j] = oracle.weights[j] - 1.0;
    ProjectionOracle inc = oracle;
    inc.weights = oracle_increment;
    c.increment_relative_error = diff / inc.rms_mean();
    c.oracle_variance = oracle.variance;
    c.kernel_variance = kernel_variance;
    c.variance_relative_error = std::abs(kernel_variance - oracle.variance) / oracle.variance;
    out.push_back(c);
  }
  return out;
}

std::vector<ReductionCheck> brownian_reduction_suite(const ExperimentConfig& config) {
  std::vector<ReductionCheck> out;
  const HurstIndex bm = HurstIndex::brownian();
  const QuadratureConfig& q = config.quadrature;

  double psi_max = 0.0;
  for (double u : {0.25, 0.5, 1.0}) {
    for (double frac : {0.1, 0.5, 0.9}) {
      psi_max = std::max(psi_max, std::abs(psi_weight(u + 0.5, frac * u, u, bm, q)));
    }
  }
  out.push_back({"psi_identically_zero", psi_max});

  double var_max = 0.0;
  for (double u : {0.0, 0.25, 0.5}) {
    for (double t : {0.75, 1.0, 2.0}) var_max = std::max(var_max, std::abs(conditional_variance(t, u, bm, q) - (t - u)));
  }
  out.push_back({"variance_equals_t_minus_u", var_max});

  ExperimentConfig bcfg = config;
  bcfg.params.hurst = bm;
  bcfg.hedge.inception = InceptionRule::kFrictionless;
  const GridPtr grid = bcfg.grid();
  const FbmSampler sampler(grid, bm, FbmBackend::kCholesky);
  const FbmPath b = sampler.sample(config.seed, 0);
  double mean_max = 0.0;
  for (std::size_t i = 1; i < grid->steps(); ++i) {
    const PredictionQuery query{grid->trading_times()[i], grid->trading_times()[i + 1], bm};
    mean_max = std::max(mean_max, std::abs(conditional_mean(b, query, q) - b.values[grid->trading_index(i)]));
  }
  out.push_back({"mean_equals_current_value", mean_max});

  // The hedge must see delta_bhat = 0, rhat = dt and reproduce the positions of the
  // explicit Brownian recursion.
  HedgeConfig hedge = bcfg.hedge;
  hedge.quadrature = q;
  auto kernels = std::make_shared<const PredictionKernels>(grid, bm, q);
  const Payoff payoff = bcfg.payoff();
  const HedgeEngine engine(bcfg.params, payoff, kernels, hedge);
  const AssetPath s = asset_path(b, bcfg.params);
  const HedgeRun run = engine.run(b, s);
  double law_max = 0.0;
  double position_max = 0.0;
  const auto times = grid->trading_times();
  double value = run.ledger.value[0];
  double prev = 0.0;
  for (std::size_t i = 0; i < grid->steps(); ++i) {
    const StepState& st = run.steps[i].state;
    law_max = std::max({law_max, std::abs(st.delta_bhat), std::abs(st.rhat - (times[i + 1] - times[i]))});
    StepState direct;
    direct.s_now = run.prices[i];
    direct.t_now = times[i];
    direct.t_next = times[i + 1];
    direct.delta_bhat = 0.0;
    direct.rhat = times[i + 1] - times[i];
    direct.params = bcfg.params;
    const double d = expected_asset_gain(direct);
    const double gain = engine.option_gain(direct);
    double pi = 0.0;
    if (i == 0) {
      pi = hedge.inception == InceptionRule::kFrictionless ? gain / d : 0.0;
    } else {
      const double a = gain + payoff(run.prices[i]) - value;
      pi = solve_position(a, d, bcfg.params.cost * run.prices[i], prev, hedge.gain_threshold * run.prices[i]).position;
    }
    position_max = std::max(position_max, std::abs(pi - run.ledger.positions[i]));
    value = run.ledger.value[i + 1];
    prev = run.ledger.positions[i];
  }
  out.push_back({"hedge_law_is_brownian", law_max});
  out.push_back({"hedge_positions_match_brownian_recursion", position_max});
  return out;
}

KernelReport verify_kernels(const ExperimentConfig& config) {
  KernelReport report;
  report.identity = kernel_identity_sweep(config.quadrature);
  report.oracle_u = 1.0;
  report.oracle_t = 1.0 + 1.0 / 16.0;
  report.conditioning_points = 16;
  const HurstIndex h = config.params.hurst.is_brownian() ? HurstIndex(0.75) : config.params.hurst;
  report.oracle_hurst = h.value();
  report.oracle = oracle_sweep(report.oracle_u, report.oracle_t, report.conditioning_points,
                               config.oracle_refinements, h, config.quadrature);
  report.brownian = brownian_reduction_suite(config);
  return report;
}

}  // namespace fbmhedge
