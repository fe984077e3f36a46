#include "fbmhedge/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <queue>

namespace fbmhedge {

namespace {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel kronrod15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double fsum = f(center - dx) + f(center + dx);
    resk += kWgk[j] * fsum;
    if (j % 2 == 1) resg += kWg[j / 2] * fsum;
  }
  return {a, b, resk * half, std::abs((resk - resg) * half)};
}

}  // namespace

void QuadratureConfig::validate() const {
  if (nodes_per_unit < 8) throw std::invalid_argument("quadrature nodes_per_unit must be >= 8");
  if (!(tolerance > 0.0)) throw std::invalid_argument("quadrature tolerance must be positive");
  if (max_evaluations < 15) throw std::invalid_argument("quadrature evaluation budget too small");
}

std::string to_string(SingularRule rule) {
  return rule == SingularRule::kJacobiWeighted ? "jacobi" : "midpoint";
}

SingularRule singular_rule_from_string(const std::string& name) {
  if (name == "jacobi" || name == "jacobi-weighted") return SingularRule::kJacobiWeighted;
  if (name == "midpoint" || name == "midpoint-avoiding") return SingularRule::kMidpointAvoiding;
  throw std::invalid_argument("unknown singular rule: " + name);
}

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol, double abs_tol, std::size_t max_evaluations,
                              int initial_panels) {
  QuadResult out;
  if (a == b) return out;
  if (initial_panels < 1) initial_panels = 1;

  std::priority_queue<Panel> heap;
  double total = 0.0;
  double total_err = 0.0;
  const double width = (b - a) / initial_panels;
  for (int i = 0; i < initial_panels; ++i) {
    const double lo = a + i * width;
    const double hi = (i + 1 == initial_panels) ? b : a + (i + 1) * width;
    Panel p = kronrod15(f, lo, hi);
    out.evaluations += 15;
    total += p.value;
    total_err += p.error;
    heap.push(p);
  }

  bool exhausted = false;
  while (total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (out.evaluations + 30 > max_evaluations) {
      exhausted = true;
      break;
    }
    const Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      exhausted = true;  // interval cannot be split further in double precision
      break;
    }
    heap.pop();
    const Panel left = kronrod15(f, worst.a, mid);
    const Panel right = kronrod15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }

  // Resum from the panels to shed the drift of incremental updates.
  total = 0.0;
  total_err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = total_err;
  out.converged = !exhausted || total_err <= std::max(abs_tol, rel_tol * std::abs(total));
  return out;
}

QuadResult integrate_endpoint_weighted(const WeightedIntegrand& g, double a, double b,
                                       double alpha, double beta, const QuadratureConfig& cfg) {
  if (!(b > a)) return {};
  if (!(alpha > -1.0) || !(beta > -1.0)) {
    throw std::invalid_argument("endpoint weight exponents must exceed -1");
  }
  const double length = b - a;
  const int panels =
      std::max(1, static_cast<int>(std::ceil(cfg.nodes_per_unit * length / 15.0)));

  if (cfg.singular_rule == SingularRule::kMidpointAvoiding) {
    auto raw = [&](double d) {
      const double from_right = length - d;
      double w = 1.0;
      if (alpha != 0.0) w *= std::pow(d, alpha);
      if (beta != 0.0) w *= std::pow(from_right, beta);
      return w * g(a + d, d, from_right);
    };
    return integrate_adaptive(raw, 0.0, length, cfg.tolerance, 0.0, cfg.max_evaluations, panels);
  }

  // Split at the midpoint; on each half substitute x - a = L y^p with p = 1/(1+alpha)
  // (resp. b - x for the right half), which turns the weight into a constant Jacobian.
  const double half = 0.5 * length;
  const double p_left = 1.0 / (1.0 + alpha);
  const double p_right = 1.0 / (1.0 + beta);
  const double scale_left = std::pow(half, 1.0 + alpha) / (1.0 + alpha);
  const double scale_right = std::pow(half, 1.0 + beta) / (1.0 + beta);

  auto mapped = [&](double y) {
    if (y <= 1.0) {
      const double from_left = half * std::pow(y, p_left);
      const double from_right = length - from_left;
      const double w = beta != 0.0 ? std::pow(from_right, beta) : 1.0;
      return scale_left * w * g(a + from_left, from_left, from_right);
    }
    const double from_right = half * std::pow(2.0 - y, p_right);
    const double from_left = length - from_right;
    const double w = alpha != 0.0 ? std::pow(from_left, alpha) : 1.0;
    return scale_right * w * g(b - from_right, from_left, from_right);
  };
  return integrate_adaptive(mapped, 0.0, 2.0, cfg.tolerance, 0.0, cfg.max_evaluations,
                            2 * panels);
}

const GaussRule& gauss_hermite_rule(int order) {
  static std::mutex mutex;
  static std::map<int, GaussRule> rules;
  std::lock_guard lock(mutex);
  auto it = rules.find(order);
  if (it != rules.end()) return it->second;
  if (order < 1) throw std::invalid_argument("Gauss-Hermite order must be positive");

  // Golub-Welsch on the Jacobi matrix of the monic probabilists' Hermite recurrence.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd sub(std::max(order - 1, 0));
  for (int k = 1; k < order; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);

  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = solver.eigenvalues()[i];
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
  }
  return rules.emplace(order, std::move(rule)).first->second;
}

QuadResult gaussian_expectation(const std::function<double(double)>& g,
                                std::span<const double> breakpoints, double tilt,
                                double tolerance) {
  constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
  constexpr double kWindow = 12.0;

  if (breakpoints.empty()) {
    auto apply = [&](int order) {
      const GaussRule& rule = gauss_hermite_rule(order);
      double sum = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * g(rule.nodes[i]);
      return sum;
    };
    QuadResult out;
    double previous = apply(32);
    out.evaluations = 32;
    for (int order = 64; order <= 256; order *= 2) {
      const double current = apply(order);
      out.evaluations += static_cast<std::size_t>(order);
      const double diff = std::abs(current - previous);
      if (diff <= tolerance * std::max(1.0, std::abs(current))) {
        out.value = current;
        out.error = diff;
        return out;
      }
      previous = current;
    }
    // Hermite rules did not settle; fall through to the windowed adaptive path.
  }

  const double lo = std::min(0.0, tilt) - kWindow;
  const double hi = std::max(0.0, tilt) + kWindow;
  std::vector<double> cuts{lo};
  for (double bp : breakpoints) {
    if (bp > lo && bp < hi) cuts.push_back(bp);
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());

  auto weighted = [&](double z) { return g(z) * kInvSqrt2Pi * std::exp(-0.5 * z * z); };
  QuadResult out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    const int panels = std::max(1, static_cast<int>(std::ceil(cuts[i + 1] - cuts[i])));
    QuadResult piece = integrate_adaptive(weighted, cuts[i], cuts[i + 1], tolerance,
                                          tolerance * 1e-3, 400000, panels);
    out.value += piece.value;
    out.error += piece.error;
    out.evaluations += piece.evaluations;
    out.converged = out.converged && piece.converged;
  }
  return out;
}

}  // namespace fbmhedge
