#include "fbmhedge/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fbmhedge {

namespace {

void require_converged(const QuadResult& r, const char* what) {
  if (!r.converged) {
    std::ostringstream msg;
    msg << what << ": quadrature did not converge (estimate " << r.value << ", error "
        << r.error << ", " << r.evaluations << " evaluations)";
    throw QuadratureError(msg.str(), r);
  }
}

// J(t,s) = \int_0^1 w^{H-3/2} (s + (t-s) w)^{H-1/2} dw, so that
// \int_s^t z^{H-1/2} (z-s)^{H-3/2} dz = (t-s)^{H-1/2} J(t,s).
QuadResult normalized_transfer_integral(double t, double s, double hv, const QuadratureConfig& q) {
  const double width = t - s;
  auto g = [=](double w, double, double) { return std::pow(s + width * w, hv - 0.5); };
  // The unit interval is the natural scale here; keep the initial panelling fixed.
  QuadratureConfig local = q;
  local.nodes_per_unit = std::max(q.nodes_per_unit, 8);
  return integrate_endpoint_weighted(g, 0.0, 1.0, hv - 1.5, 0.0, local);
}

}  // namespace

void PredictionQuery::validate() const {
  if (!(u >= 0.0 && u < t)) throw std::invalid_argument("prediction query needs 0 <= u < t");
}

KernelEstimate psi_weight_estimate(double t, double s, double u, HurstIndex h,
                                   const QuadratureConfig& q) {
  if (!(s > 0.0 && s < u)) throw std::invalid_argument("psi_weight needs 0 < s < u");
  if (t < u) throw std::invalid_argument("psi_weight needs t >= u");
  if (h.is_brownian() || t == u) return {};

  const double hv = h.value();
  const double gap = u - s;
  // Inner integral over z in [u, t]: weight (z-u)^{H-1/2}, smooth remainder z^{H-1/2}/(z-s).
  auto g = [=](double z, double from_u, double) { return std::pow(z, hv - 0.5) / (gap + from_u); };
  const QuadResult inner = integrate_endpoint_weighted(g, u, t, hv - 0.5, 0.0, q);
  require_converged(inner, "psi_weight");

  const double prefactor = -std::sin(std::numbers::pi * (hv - 0.5)) / std::numbers::pi *
                           std::pow(s, 0.5 - hv) * std::pow(gap, 0.5 - hv);
  return {prefactor * inner.value, std::abs(prefactor) * inner.error};
}

double psi_weight(double t, double s, double u, HurstIndex h, const QuadratureConfig& q) {
  return psi_weight_estimate(t, s, u, h, q).value;
}

double transfer_constant(HurstIndex h) {
  if (h.is_brownian()) return 1.0;
  const double hv = h.value();
  return (hv - 0.5) *
         std::sqrt(2.0 * hv * std::tgamma(1.5 - hv) / (std::tgamma(hv + 0.5) * std::tgamma(2.0 - 2.0 * hv)));
}

KernelEstimate transfer_kernel_estimate(double t, double s, HurstIndex h, const QuadratureConfig& q) {
  if (!(s > 0.0 && s <= t)) throw std::invalid_argument("transfer_kernel needs 0 < s <= t");
  if (s == t) return {};
  if (h.is_brownian()) return {1.0, 0.0};

  const double hv = h.value();
  const QuadResult j = normalized_transfer_integral(t, s, hv, q);
  require_converged(j, "transfer_kernel");
  const double scale = transfer_constant(h) * std::pow(s, 0.5 - hv) * std::pow(t - s, hv - 0.5);
  return {scale * j.value, scale * j.error};
}

double transfer_kernel(double t, double s, HurstIndex h, const QuadratureConfig& q) {
  return transfer_kernel_estimate(t, s, h, q).value;
}

KernelEstimate conditional_covariance_estimate(double t, double s, double u, HurstIndex h,
                                               const QuadratureConfig& q) {
  if (!(u >= 0.0 && u <= std::min(t, s))) {
    throw std::invalid_argument("conditional_covariance needs 0 <= u <= min(t, s)");
  }
  const double r = covariance(t, s, h);
  if (u == 0.0) return {r, 0.0};
  if (h.is_brownian()) return {std::min(t, s) - u, 0.0};

  // \int_0^u k(t,v) k(s,v) dv = c_H^2 \int_0^u v^{1-2H} (t-v)^{H-1/2} (s-v)^{H-1/2} J(t,v) J(s,v) dv.
  // Factors (t-v)^{H-1/2} with t == u vanish at the right end and move into the weight.
  const double hv = h.value();
  const double a = hv - 0.5;
  const bool t_at_end = t == u;
  const bool s_at_end = s == u;
  const double beta = (t_at_end ? a : 0.0) + (s_at_end ? a : 0.0);

  double worst_inner = 0.0;
  bool inner_failed = false;
  auto g = [&](double v, double, double from_u) {
    double val = 1.0;
    QuadResult jt = normalized_transfer_integral(t, v, hv, q);
    QuadResult js = (s == t) ? jt : normalized_transfer_integral(s, v, hv, q);
    inner_failed = inner_failed || !jt.converged || !js.converged;
    worst_inner = std::max({worst_inner, jt.error / std::abs(jt.value), js.error / std::abs(js.value)});
    val *= jt.value * js.value;
    if (!t_at_end) val *= std::pow((t - u) + from_u, a);
    if (!s_at_end) val *= std::pow((s - u) + from_u, a);
    return val;
  };
  const QuadResult outer = integrate_endpoint_weighted(g, 0.0, u, 1.0 - 2.0 * hv, beta, q);
  require_converged(outer, "conditional_covariance");
  if (inner_failed) {
    throw QuadratureError("conditional_covariance: inner transfer integral did not converge", outer);
  }
  const double c2 = transfer_constant(h) * transfer_constant(h);
  const double integral = c2 * outer.value;
  const double error = c2 * (outer.error + 2.0 * worst_inner * std::abs(outer.value));
  return {r - integral, error};
}

double conditional_covariance(double t, double s, double u, HurstIndex h, const QuadratureConfig& q) {
  return conditional_covariance_estimate(t, s, u, h, q).value;
}

VarianceEstimate conditional_variance_estimate(double t, double u, HurstIndex h,
                                               const QuadratureConfig& q) {
  const KernelEstimate raw = conditional_covariance_estimate(t, t, u, h, q);
  VarianceEstimate out{raw.value, raw.error, 0.0};
  if (out.value < 0.0) {
    const double floor = -1e-10 * std::pow(t, 2.0 * h.value());
    if (out.value <= floor) {
      throw QuadratureError("conditional variance is negative beyond round-off",
                            QuadResult{raw.value, raw.error, 0, false});
    }
    out.clamped = -out.value;
    out.value = 0.0;
  }
  return out;
}

double conditional_variance(double t, double u, HurstIndex h, const QuadratureConfig& q) {
  return conditional_variance_estimate(t, u, h, q).value;
}

std::vector<double> psi_midpoint_weights(std::span<const double> points, std::size_t u_index,
                                         double t, HurstIndex h, const QuadratureConfig& q,
                                         double* max_error) {
  std::vector<double> w(u_index, 0.0);
  if (max_error) *max_error = 0.0;
  if (h.is_brownian() || u_index == 0) return w;
  const double u = points[u_index];
  for (std::size_t j = 0; j < u_index; ++j) {
    const double mid = 0.5 * (points[j] + points[j + 1]);
    const KernelEstimate e = psi_weight_estimate(t, mid, u, h, q);
    w[j] = e.value;
    if (max_error) *max_error = std::max(*max_error, e.error);
  }
  return w;
}

double conditional_mean(const FbmPath& path, const PredictionQuery& query, const QuadratureConfig& q) {
  query.validate();
  const auto iu = path.grid->index_of(query.u);
  if (!iu || !path.grid->index_of(query.t)) {
    throw std::invalid_argument("prediction query times must lie on the path subgrid");
  }
  const double b_u = path.values[*iu];
  if (query.hurst.is_brownian() || *iu == 0) return b_u;

  const auto w = psi_midpoint_weights(path.grid->points(), *iu, query.t, query.hurst, q);
  double acc = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * (path.values[j + 1] - path.values[j]);
  return b_u - acc;
}

PredictionKernels::PredictionKernels(GridPtr grid, HurstIndex h, const QuadratureConfig& q)
    : grid_(std::move(grid)), hurst_(h) {
  q.validate();
  const auto times = grid_->trading_times();
  const auto pts = grid_->points();
  const std::size_t n = grid_->steps();
  weights_.resize(n);
  variances_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double err = 0.0;
    weights_[i] = psi_midpoint_weights(pts, grid_->trading_index(i), times[i + 1], h, q, &err);
    max_psi_error_ = std::max(max_psi_error_, err);
    variances_[i] = conditional_variance_estimate(times[i + 1], times[i], h, q);
  }
}

double PredictionKernels::predicted_increment(const FbmPath& path, std::size_t step) const {
  const auto& w = weights_.at(step);
  double acc = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * (path.values[j + 1] - path.values[j]);
  return -acc;
}

}  // namespace fbmhedge
