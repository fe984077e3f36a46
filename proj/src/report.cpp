#include "fbmhedge/report.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace fbmhedge {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

ordered_json echo(const ExperimentConfig& c) {
  ordered_json j;
  j["model"] = {{"mu", c.params.mu},
                {"sigma", c.params.sigma},
                {"spot", c.params.spot},
                {"hurst", c.params.hurst.value()},
                {"cost", c.params.cost}};
  j["grid"] = {{"trading_times", c.trading_times}, {"refinement", c.refinement}};
  j["payoff"] = {{"kind", c.payoff_kind}, {"strike", c.strike}};
  j["simulation"] = {{"paths", c.n_paths}, {"seed", c.seed}, {"backend", to_string(c.backend)}};
  j["quadrature"] = {{"nodes_per_unit", c.quadrature.nodes_per_unit},
                     {"singular_rule", to_string(c.quadrature.singular_rule)},
                     {"tolerance", c.quadrature.tolerance},
                     {"max_evaluations", c.quadrature.max_evaluations}};
  j["hedge"] = {{"inception", to_string(c.hedge.inception)},
                {"no_solution", to_string(c.hedge.no_solution)},
                {"gain_method", to_string(c.hedge.gain_method)},
                {"gain_threshold", c.hedge.gain_threshold}};
  j["verification"] = {{"n_conditional", c.n_conditional}, {"oracle_refinements", c.oracle_refinements}};
  j["output"] = {{"path", c.output}, {"format", to_string(c.format)}};
  return j;
}

ordered_json estimate(const MeanEstimate& m) {
  return {{"mean", m.mean}, {"std_error", m.std_error}, {"count", m.count}};
}

ordered_json base_diagnostics(const ExperimentConfig& c, const char* report) {
  return {{"report", report},
          {"schema_version", kCsvSchemaVersion},
          {"seed", c.seed},
          {"tool", "fbmhedge"}};
}

fs::path prepare_dir(const ExperimentConfig& c) {
  fs::path dir(c.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  template <typename... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((write_cell(cells, first)), ...);
    out_ << '\n';
  }
  std::string finish() {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed: " + path_.string());
    return path_.string();
  }

 private:
  void sep(bool& first) {
    if (!first) out_ << ',';
    first = false;
  }
  void write_cell(double x, bool& first) {
    sep(first);
    out_ << format_number(x);
  }
  void write_cell(const std::string& s, bool& first) {
    sep(first);
    if (s.find_first_of(",\"\n") == std::string::npos) {
      out_ << s;
      return;
    }
    out_ << '"';
    for (char ch : s) {
      if (ch == '"') out_ << '"';
      out_ << ch;
    }
    out_ << '"';
  }
  void write_cell(const char* s, bool& first) { write_cell(std::string(s), first); }
  template <typename I>
    requires std::is_integral_v<I>
  void write_cell(I v, bool& first) {
    sep(first);
    out_ << v;
  }

  fs::path path_;
  std::ofstream out_;
};

std::string write_json(const fs::path& path, const ordered_json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return path.string();
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::string config_echo_json(const ExperimentConfig& config) { return echo(config).dump(); }

std::vector<std::string> write_ensemble_report(const ExperimentConfig& c, const EnsembleReport& r) {
  const fs::path dir = prepare_dir(c);
  std::vector<std::string> files;
  if (c.format == ReportFormat::kJson) {
    ordered_json doc;
    doc["config_echo"] = echo(c);
    ordered_json paths = ordered_json::array();
    for (const auto& p : r.paths) {
      paths.push_back({{"path", p.index},
                       {"status", p.ok ? "ok" : "error"},
                       {"error", p.error},
                       {"initial_wealth", p.initial_wealth},
                       {"terminal_value", p.terminal_value},
                       {"terminal_payoff", p.terminal_payoff},
                       {"terminal_error", p.terminal_error},
                       {"cum_cost", p.cum_cost},
                       {"ledger_residual", p.ledger_residual},
                       {"violations", p.violations}});
    }
    ordered_json steps = ordered_json::array();
    for (const auto& s : r.steps) {
      steps.push_back({{"step", s.step},
                       {"time", s.time},
                       {"tracking_gap", estimate(s.tracking_gap)},
                       {"position", estimate(s.position)},
                       {"cost", estimate(s.cost)}});
    }
    doc["results"] = {{"kind", "ensemble"},
                      {"summary",
                       {{"terminal_error", estimate(r.terminal_error)},
                        {"cum_cost", estimate(r.cum_cost)},
                        {"failures", r.failures},
                        {"violations", r.violations},
                        {"max_ledger_residual", r.max_ledger_residual}}},
                      {"steps", steps},
                      {"paths", paths}};
    ordered_json diag = base_diagnostics(c, "ensemble");
    diag["quadrature"] = {{"max_psi_error", r.kernels.max_psi_error},
                          {"conditional_variance", r.kernels.variances},
                          {"conditional_variance_error", r.kernels.variance_errors},
                          {"conditional_variance_clamp", r.kernels.variance_clamps}};
    files.push_back(write_json(dir / "ensemble.json", {{"config_echo", doc["config_echo"]},
                                                       {"results", doc["results"]},
                                                       {"diagnostics", diag}}));
    return files;
  }

  {
    CsvWriter w(dir / "paths.csv");
    w.row("path", "status", "initial_wealth", "terminal_value", "terminal_payoff", "terminal_error",
          "cum_cost", "ledger_residual", "violations", "error");
    for (const auto& p : r.paths) {
      w.row(p.index, p.ok ? "ok" : "error", p.initial_wealth, p.terminal_value, p.terminal_payoff,
            p.terminal_error, p.cum_cost, p.ledger_residual, p.violations, p.error);
    }
    files.push_back(w.finish());
  }
  {
    CsvWriter w(dir / "steps.csv");
    w.row("step", "time", "mean_tracking_gap", "se_tracking_gap", "mean_position", "se_position",
          "mean_cost", "se_cost", "count");
    for (const auto& s : r.steps) {
      w.row(s.step, s.time, s.tracking_gap.mean, s.tracking_gap.std_error, s.position.mean,
            s.position.std_error, s.cost.mean, s.cost.std_error, s.tracking_gap.count);
    }
    files.push_back(w.finish());
  }
  {
    CsvWriter w(dir / "summary.csv");
    w.row("key", "value");
    w.row("schema_version", kCsvSchemaVersion);
    w.row("seed", c.seed);
    w.row("paths", c.n_paths);
    w.row("failures", r.failures);
    w.row("violations", r.violations);
    w.row("mean_terminal_error", r.terminal_error.mean);
    w.row("se_terminal_error", r.terminal_error.std_error);
    w.row("mean_cum_cost", r.cum_cost.mean);
    w.row("se_cum_cost", r.cum_cost.std_error);
    w.row("max_ledger_residual", r.max_ledger_residual);
    w.row("max_psi_quadrature_error", r.kernels.max_psi_error);
    for (std::size_t i = 0; i < r.kernels.variances.size(); ++i) {
      w.row("rhat_step_" + std::to_string(i), r.kernels.variances[i]);
      w.row("rhat_error_step_" + std::to_string(i), r.kernels.variance_errors[i]);
      w.row("rhat_clamp_step_" + std::to_string(i), r.kernels.variance_clamps[i]);
    }
    files.push_back(w.finish());
  }
  return files;
}

std::vector<std::string> write_tracking_report(const ExperimentConfig& c, const TrackingReport& r) {
  const fs::path dir = prepare_dir(c);
  if (c.format == ReportFormat::kJson) {
    ordered_json checks = ordered_json::array();
    for (const auto& k : r.checks) {
      checks.push_back({{"step", k.step},
                        {"time", k.time},
                        {"position", k.position},
                        {"value_now", k.value_now},
                        {"lhs", estimate(k.lhs)},
                        {"rhs", estimate(k.rhs)},
                        {"discrepancy", estimate(k.discrepancy)},
                        {"analytic_lhs", k.analytic_lhs},
                        {"analytic_rhs", k.analytic_rhs},
                        {"within_tolerance", k.within_tolerance}});
    }
    ordered_json doc;
    doc["config_echo"] = echo(c);
    doc["results"] = {{"kind", "tracking"},
                      {"path", r.path_index},
                      {"n_conditional", r.n_conditional},
                      {"gate_standard_errors", r.gate_standard_errors},
                      {"checks", checks}};
    doc["diagnostics"] = base_diagnostics(c, "tracking");
    return {write_json(dir / "tracking.json", doc)};
  }
  CsvWriter w(dir / "tracking.csv");
  w.row("step", "time", "position", "value_now", "lhs_mean", "lhs_se", "rhs_mean", "rhs_se",
        "discrepancy", "discrepancy_se", "analytic_lhs", "analytic_rhs", "within_tolerance",
        "n_conditional", "path", "seed", "schema_version");
  for (const auto& k : r.checks) {
    w.row(k.step, k.time, k.position, k.value_now, k.lhs.mean, k.lhs.std_error, k.rhs.mean,
          k.rhs.std_error, k.discrepancy.mean, k.discrepancy.std_error, k.analytic_lhs,
          k.analytic_rhs, k.within_tolerance ? "true" : "false", r.n_conditional, r.path_index,
          c.seed, kCsvSchemaVersion);
  }
  return {w.finish()};
}

std::vector<std::string> write_kernel_report(const ExperimentConfig& c, const KernelReport& r) {
  const fs::path dir = prepare_dir(c);
  if (c.format == ReportFormat::kJson) {
    ordered_json identity = ordered_json::array();
    for (const auto& x : r.identity) {
      identity.push_back({{"t", x.t},
                          {"hurst", x.hurst},
                          {"integral", x.integral},
                          {"target", x.target},
                          {"relative_residual", x.relative_residual},
                          {"quadrature_error", x.quadrature_error}});
    }
    ordered_json oracle = ordered_json::array();
    for (const auto& x : r.oracle) {
      oracle.push_back({{"refinement", x.refinement},
                        {"mean_relative_error", x.mean_relative_error},
                        {"increment_relative_error", x.increment_relative_error},
                        {"oracle_variance", x.oracle_variance},
                        {"kernel_variance", x.kernel_variance},
                        {"variance_relative_error", x.variance_relative_error},
                        {"max_psi_error", x.max_psi_error}});
    }
    ordered_json brownian = ordered_json::array();
    for (const auto& x : r.brownian) brownian.push_back({{"check", x.name}, {"residual", x.residual}});
    ordered_json doc;
    doc["config_echo"] = echo(c);
    doc["results"] = {{"kind", "kernels"},
                      {"identity", identity},
                      {"oracle",
                       {{"u", r.oracle_u},
                        {"t", r.oracle_t},
                        {"hurst", r.oracle_hurst},
                        {"conditioning_points", r.conditioning_points},
                        {"rows", oracle}}},
                      {"brownian", brownian}};
    doc["diagnostics"] = base_diagnostics(c, "kernels");
    return {write_json(dir / "kernels.json", doc)};
  }
  std::vector<std::string> files;
  {
    CsvWriter w(dir / "kernel_identity.csv");
    w.row("t", "hurst", "integral", "target", "relative_residual", "quadrature_error");
    for (const auto& x : r.identity) {
      w.row(x.t, x.hurst, x.integral, x.target, x.relative_residual, x.quadrature_error);
    }
    files.push_back(w.finish());
  }
  {
    CsvWriter w(dir / "kernel_oracle.csv");
    w.row("refinement", "u", "t", "hurst", "conditioning_points", "mean_relative_error",
          "increment_relative_error", "oracle_variance", "kernel_variance",
          "variance_relative_error", "max_psi_error");
    for (const auto& x : r.oracle) {
      w.row(x.refinement, r.oracle_u, r.oracle_t, r.oracle_hurst, r.conditioning_points,
            x.mean_relative_error, x.increment_relative_error, x.oracle_variance,
            x.kernel_variance, x.variance_relative_error, x.max_psi_error);
    }
    files.push_back(w.finish());
  }
  {
    CsvWriter w(dir / "kernel_brownian.csv");
    w.row("check", "residual");
    for (const auto& x : r.brownian) w.row(x.name, x.residual);
    files.push_back(w.finish());
  }
  return files;
}

std::vector<std::string> write_initial_position_report(const ExperimentConfig& c,
                                                       const InitialPosition* position,
                                                       const std::string& error) {
  const fs::path dir = prepare_dir(c);
  const bool bounded = position != nullptr;
  if (c.format == ReportFormat::kJson) {
    ordered_json results = {{"kind", "initial_position"}, {"bounded", bounded}};
    if (bounded) {
      results["riskless"] = position->riskless;
      results["position"] = position->position;
      results["expected_gain_ratio"] = position->expected_gain_ratio;
    } else {
      results["error"] = error;
    }
    ordered_json doc;
    doc["config_echo"] = echo(c);
    doc["results"] = results;
    doc["diagnostics"] = base_diagnostics(c, "initial_position");
    return {write_json(dir / "initial_position.json", doc)};
  }
  CsvWriter w(dir / "initial_position.csv");
  w.row("bounded", "riskless", "position", "expected_gain_ratio", "cost", "error", "schema_version");
  if (bounded) {
    w.row("true", position->riskless, position->position, position->expected_gain_ratio,
          c.params.cost, "", kCsvSchemaVersion);
  } else {
    w.row("false", "", "", "", c.params.cost, error, kCsvSchemaVersion);
  }
  return {w.finish()};
}

}  // namespace fbmhedge
