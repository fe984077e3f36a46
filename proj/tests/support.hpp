// Reference numerics used only by the tests. Nothing here shares code with the
// library: plain adaptive Simpson and dense Eigen linear algebra.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace testsupport {

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12,
                      int depth = 48) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, depth);
}

inline double fbm_cov(double t, double s, double h) {
  return 0.5 * (std::pow(t, 2 * h) + std::pow(s, 2 * h) - std::pow(std::abs(t - s), 2 * h));
}

// Psi(t, s | u) with the inner integral taken by Simpson after z = u + w^2,
// which makes the integrand smooth at z = u.
inline double psi(double t, double s, double u, double h) {
  const double a = h - 0.5;
  auto inner = [&](double w) {
    const double z = u + w * w;
    return 2.0 * w * std::pow(z, a) * std::pow(w * w, a) / (z - s);
  };
  const double integral = simpson(inner, 0.0, std::sqrt(t - u), 1e-13);
  return -std::sin(M_PI * a) / M_PI * std::pow(s, -a) * std::pow(u - s, -a) * integral;
}

inline double transfer_constant(double h) {
  return (h - 0.5) * std::sqrt(2 * h * std::tgamma(1.5 - h) / (std::tgamma(h + 0.5) * std::tgamma(2 - 2 * h)));
}

// c s^{1/2-H} \int_s^t (z-s)^e z^{H-1/2} dz, with the factor (z-s)^e removed by
// z = s + w^{1/(e+1)}.
inline double kernel_variant(double t, double s, double h, double e, double c) {
  const double a = h - 0.5, b = e + 1.0;
  auto inner = [&](double w) { return std::pow(s + std::pow(w, 1.0 / b), a) / b; };
  return c * std::pow(s, -a) * simpson(inner, 0.0, std::pow(t - s, b), 1e-13);
}

inline double kernel(double t, double s, double h) {
  return kernel_variant(t, s, h, h - 1.5, transfer_constant(h));
}

// \int_0^t g(v)^2 dv for g ~ v^{1/2-H} at 0, with v = t w^{1/(2-2H)}.
inline double square_integral(const std::function<double(double)>& g, double t, double h, double tol) {
  const double p = 1.0 / (2.0 - 2.0 * h);
  auto f = [&](double w) {
    w = std::max(w, 1e-12);
    const double v = t * std::pow(w, p);
    if (v >= t) return 0.0;
    const double k = g(v);
    return k * k * t * p * std::pow(w, p - 1.0);
  };
  return simpson(f, 0.0, 1.0, tol, 30);
}

struct Conditioned {
  Eigen::VectorXd weights;  // mean = weights . observations
  double variance;
};

// Exact Gaussian conditioning of B_target on B at the observation times.
inline Conditioned condition(const std::vector<double>& obs, double target, double h) {
  const Eigen::Index n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd sigma(n, n);
  Eigen::VectorXd cross(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cross(i) = fbm_cov(target, obs[i], h);
    for (Eigen::Index j = 0; j < n; ++j) sigma(i, j) = fbm_cov(obs[i], obs[j], h);
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
  Conditioned c;
  c.weights = ldlt.solve(cross);
  c.variance = std::pow(target, 2 * h) - cross.dot(c.weights);
  return c;
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double std_error(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

}  // namespace testsupport
