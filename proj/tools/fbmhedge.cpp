// fbmhedge: conditional-mean hedging experiments in the fractional Black-Scholes model.
//
//   fbmhedge hedge            --config run.yaml [--seed N] [--paths N] [--out DIR] [--format csv|json]
//   fbmhedge verify-tracking  --config run.yaml [--step I] [--conditional N] [--path P]
//   fbmhedge verify-kernels   --config run.yaml
//   fbmhedge initial-position --config run.yaml
//
// Worker count comes from FBMHEDGE_WORKERS unless the config pins it.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>

#include "fbmhedge/experiment.hpp"
#include "fbmhedge/report.hpp"

using namespace fbmhedge;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<double> hurst;
  std::optional<double> cost;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Experiment config (YAML)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override the RNG seed");
  cmd->add_option("--paths", o.paths, "Override the number of Monte Carlo paths");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--hurst", o.hurst, "Override the Hurst index");
  cmd->add_option("--cost", o.cost, "Override the proportional transaction cost");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.paths) cfg.n_paths = *o.paths;
  if (o.out) cfg.output = *o.out;
  if (o.format) cfg.format = report_format_from_string(*o.format);
  if (o.hurst) cfg.params.hurst = HurstIndex::from_config(*o.hurst);
  if (o.cost) cfg.params.cost = *o.cost;
  cfg.hedge.quadrature = cfg.quadrature;
  cfg.validate();
  return cfg;
}

void list_files(const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << "wrote " << f << '\n';
}

int run_hedge(const Overrides& o) {
  const ExperimentConfig cfg = resolve(o);
  const EnsembleReport r = run_experiment(cfg);
  list_files(write_ensemble_report(cfg, r));
  std::printf("paths=%zu failures=%zu violations=%zu seed=%llu\n", cfg.n_paths, r.failures,
              r.violations, static_cast<unsigned long long>(cfg.seed));
  std::printf("terminal error  %.6g +- %.3g\n", r.terminal_error.mean, r.terminal_error.std_error);
  std::printf("cumulative cost %.6g +- %.3g\n", r.cum_cost.mean, r.cum_cost.std_error);
  std::size_t shown = 0;
  for (const auto& p : r.paths) {
    if (p.ok) continue;
    if (shown++ == 5) {
      std::fprintf(stderr, "... %zu failed paths in total, see the paths table\n", r.failures);
      break;
    }
    std::fprintf(stderr, "path %zu failed: %s\n", p.index, p.error.c_str());
  }
  return r.failures == 0 ? 0 : 2;
}

int run_tracking(const Overrides& o, std::optional<std::size_t> step, std::optional<std::size_t> n_cond,
                 std::size_t path) {
  const ExperimentConfig cfg = resolve(o);
  const std::size_t n = n_cond.value_or(cfg.n_conditional);
  const TrackingReport r = step ? verify_tracking(cfg, *step, n, path) : verify_tracking_all(cfg, n, path);
  list_files(write_tracking_report(cfg, r));
  for (const auto& c : r.checks) {
    std::printf("step %zu  lhs %.8g  rhs %.8g  diff %.3g  se %.3g  %s\n", c.step, c.lhs.mean, c.rhs.mean,
                c.discrepancy.mean, c.discrepancy.std_error, c.within_tolerance ? "ok" : "FAIL");
  }
  return r.all_within() ? 0 : 1;
}

int run_kernels(const Overrides& o) {
  const ExperimentConfig cfg = resolve(o);
  const KernelReport r = verify_kernels(cfg);
  list_files(write_kernel_report(cfg, r));
  for (const auto& x : r.identity) {
    std::printf("identity t=%g H=%g  relative residual %.3e\n", x.t, x.hurst, x.relative_residual);
  }
  for (const auto& x : r.oracle) {
    std::printf("oracle refinement %4d  mean rel err %.3e  variance rel err %.3e\n", x.refinement,
                x.mean_relative_error, x.variance_relative_error);
  }
  for (const auto& x : r.brownian) std::printf("brownian %-42s %.3e\n", x.name.c_str(), x.residual);
  return 0;
}

int run_initial(const Overrides& o) {
  const ExperimentConfig cfg = resolve(o);
  try {
    const InitialPosition ip =
        minimal_initial_position(cfg.params, *cfg.grid(), cfg.payoff(), cfg.quadrature);
    list_files(write_initial_position_report(cfg, &ip, ""));
    std::printf("bounded: position %g, riskless %.10g (expected return %.6g <= k = %g)\n", ip.position,
                ip.riskless, ip.expected_gain_ratio, cfg.params.cost);
    return 0;
  } catch (const UnboundedError& e) {
    list_files(write_initial_position_report(cfg, nullptr, e.what()));
    std::printf("unbounded: %s\n", e.what());
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional-mean hedging under fractional Black-Scholes with transaction costs"};
  app.require_subcommand(1);

  Overrides hedge_o, track_o, kern_o, init_o;
  auto* hedge = app.add_subcommand("hedge", "Run a seeded hedging ensemble");
  add_common(hedge, hedge_o);

  auto* track = app.add_subcommand("verify-tracking", "Check the conditional-mean condition by resimulation");
  add_common(track, track_o);
  std::optional<std::size_t> step, n_cond;
  std::size_t path = 0;
  track->add_option("--step", step, "Trading step to verify (default: all)");
  track->add_option("--conditional", n_cond, "Number of conditional draws");
  track->add_option("--path", path, "Path index whose prefix is fixed");

  auto* kern = app.add_subcommand("verify-kernels", "Kernel identity, projection oracle and H=1/2 suite");
  add_common(kern, kern_o);

  auto* init = app.add_subcommand("initial-position", "Minimal-cost initial position");
  add_common(init, init_o);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*hedge) return run_hedge(hedge_o);
    if (*track) return run_tracking(track_o, step, n_cond, path);
    if (*kern) return run_kernels(kern_o);
    if (*init) return run_initial(init_o);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
