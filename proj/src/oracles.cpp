#include "fbmhedge/oracles.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fbmhedge {

std::vector<double> solve_toeplitz(std::span<const double> column, std::span<const double> rhs) {
  const std::size_t n = column.size();
  if (n == 0 || rhs.size() != n) throw std::invalid_argument("toeplitz size mismatch");
  const double r0 = column[0];
  if (!(r0 > 0.0)) throw std::invalid_argument("toeplitz diagonal must be positive");

  // Levinson recursion on the unit-diagonal system (Golub & Van Loan, Alg. 4.7.2).
  std::vector<double> x(n), y(n), scratch(n);
  x[0] = rhs[0] / r0;
  if (n == 1) return x;
  y[0] = -column[1] / r0;
  double beta = 1.0;
  double alpha = y[0];
  for (std::size_t k = 1; k < n; ++k) {
    beta *= (1.0 - alpha * alpha);
    if (!(beta > 0.0)) throw std::runtime_error("toeplitz matrix is not positive definite");
    double dot = 0.0;
    for (std::size_t j = 0; j < k; ++j) dot += column[j + 1] / r0 * x[k - 1 - j];
    const double mu = (rhs[k] / r0 - dot) / beta;
    for (std::size_t j = 0; j < k; ++j) scratch[j] = x[j] + mu * y[k - 1 - j];
    for (std::size_t j = 0; j < k; ++j) x[j] = scratch[j];
    x[k] = mu;
    if (k + 1 < n) {
      double dot_y = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot_y += column[j + 1] / r0 * y[k - 1 - j];
      alpha = (-column[k + 1] / r0 - dot_y) / beta;
      for (std::size_t j = 0; j < k; ++j) scratch[j] = y[j] + alpha * y[k - 1 - j];
      for (std::size_t j = 0; j < k; ++j) y[j] = scratch[j];
      y[k] = alpha;
    }
  }
  return x;
}

std::vector<double> toeplitz_multiply(std::span<const double> column, std::span<const double> x) {
  const std::size_t n = column.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += column[i > j ? i - j : j - i] * x[j];
    y[i] = acc;
  }
  return y;
}

double ProjectionOracle::rms_difference(std::span<const double> other_weights) const {
  std::vector<double> d(weights.size());
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = other_weights[j] - weights[j];
  const auto gd = toeplitz_multiply(increment_covariance, d);
  return std::sqrt(std::max(0.0, std::inner_product(d.begin(), d.end(), gd.begin(), 0.0)));
}

double ProjectionOracle::rms_mean() const {
  const auto gw = toeplitz_multiply(increment_covariance, weights);
  return std::sqrt(std::max(0.0, std::inner_product(weights.begin(), weights.end(), gw.begin(), 0.0)));
}

ProjectionOracle projection_oracle(double step, std::size_t n_obs, double target, HurstIndex h) {
  if (!(step > 0.0) || n_obs == 0) throw std::invalid_argument("bad projection oracle grid");
  const double u = step * static_cast<double>(n_obs);
  if (target < u) throw std::invalid_argument("projection target must not precede the data");

  ProjectionOracle out;
  out.step = step;
  out.target = target;
  out.increment_covariance.resize(n_obs);
  for (std::size_t k = 0; k < n_obs; ++k) {
    // Cov(X_1, X_{1+k}) from the fBm covariance itself.
    const double a = static_cast<double>(k) * step;
    out.increment_covariance[k] = covariance(a + step, step, h) - covariance(a, step, h);
  }
  std::vector<double> c(n_obs);
  for (std::size_t j = 0; j < n_obs; ++j) {
    const double hi = static_cast<double>(j + 1) * step;
    const double lo = static_cast<double>(j) * step;
    c[j] = covariance(target, hi, h) - covariance(target, lo, h);
  }
  out.weights = solve_toeplitz(out.increment_covariance, c);
  out.variance = covariance(target, target, h) -
                 std::inner_product(c.begin(), c.end(), out.weights.begin(), 0.0);
  return out;
}

}  // namespace fbmhedge
