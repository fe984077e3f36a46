#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbmhedge {

/// Outcome of a numerical integration: value plus the achieved error estimate.
struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};

/// Thrown when an integral does not reach the requested tolerance within budget.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, QuadResult achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  const QuadResult& achieved() const noexcept { return achieved_; }

 private:
  QuadResult achieved_;
};

enum class SingularRule {
  kMidpointAvoiding,  // plain adaptive Gauss-Kronrod, nodes never touch the endpoints
  kJacobiWeighted,    // endpoint weight absorbed by a power change of variables
};

struct QuadratureConfig {
  int nodes_per_unit = 16;
  SingularRule singular_rule = SingularRule::kJacobiWeighted;
  double tolerance = 1e-10;
  std::size_t max_evaluations = 200000;

  void validate() const;
};

std::string to_string(SingularRule rule);
SingularRule singular_rule_from_string(const std::string& name);

/// Global adaptive 7/15-point Gauss-Kronrod on [a, b]. Stops when the summed
/// error estimate drops below max(abs_tol, rel_tol * |value|) or the budget runs out.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol, double abs_tol, std::size_t max_evaluations,
                              int initial_panels = 1);

/// Integrand for endpoint-weighted integrals. Receives the abscissa together with
/// its exact distances to both endpoints, so callers never form x - a by cancellation.
using WeightedIntegrand = std::function<double(double x, double from_left, double from_right)>;

/// Computes \int_a^b (x-a)^alpha (b-x)^beta g(x) dx for alpha, beta > -1 and g smooth
/// on the open interval.
QuadResult integrate_endpoint_weighted(const WeightedIntegrand& g, double a, double b,
                                       double alpha, double beta, const QuadratureConfig& cfg);

/// Nodes and weights of a Gauss rule for the standard normal density.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Probabilists' Gauss-Hermite rule of the given order (weights sum to 1).
/// Rules are computed once per order and shared.
const GaussRule& gauss_hermite_rule(int order);

/// E[g(Z)] for Z ~ N(0,1).
///
/// Without breakpoints the integral is taken with Gauss-Hermite rules of doubling
/// order until two successive orders agree. With breakpoints (kinks of g) the real
/// line is split there and each piece is integrated adaptively over a window of
/// +-12 standard deviations around both 0 and `tilt`, where `tilt` is the location
/// of the mass of g(z) phi(z) for exponentially growing g.
QuadResult gaussian_expectation(const std::function<double(double)>& g,
                                std::span<const double> breakpoints, double tilt,
                                double tolerance);

}  // namespace fbmhedge
