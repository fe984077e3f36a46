#include "fbmhedge/fbm_core.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <string>

#include "fbmhedge/random.hpp"

namespace fbmhedge {

namespace {

// FFTW planning is not thread safe; execution with the new-array interface is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

HurstIndex::HurstIndex(double value) : value_(value) {
  if (!(value > 0.5 && value < 1.0)) {
    throw std::invalid_argument("Hurst index must lie in (1/2, 1); use HurstIndex::brownian() for 1/2");
  }
}

HurstIndex HurstIndex::from_config(double value) {
  if (value == 0.5) return brownian();
  return HurstIndex(value);
}

void ModelParams::validate() const {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(spot > 0.0)) throw std::invalid_argument("spot must be positive");
  if (!(cost >= 0.0 && cost < 1.0)) throw std::invalid_argument("cost must lie in [0, 1)");
  if (!std::isfinite(mu)) throw std::invalid_argument("mu must be finite");
}

TimeGrid::TimeGrid(std::vector<double> trading_times, int refinement)
    : trading_(std::move(trading_times)), refinement_(refinement), uniform_(true) {
  if (refinement_ < 1) throw std::invalid_argument("grid refinement must be >= 1");
  if (trading_.size() < 2) throw std::invalid_argument("grid needs at least two trading times");
  if (trading_.front() != 0.0) throw std::invalid_argument("first trading time must be 0");
  for (std::size_t i = 1; i < trading_.size(); ++i) {
    if (!(trading_[i] > trading_[i - 1])) {
      throw std::invalid_argument("trading times must be strictly increasing");
    }
  }
  const double first_width = trading_[1] - trading_[0];
  points_.reserve(steps() * refinement_ + 1);
  points_.push_back(0.0);
  for (std::size_t i = 0; i + 1 < trading_.size(); ++i) {
    const double lo = trading_[i];
    const double width = trading_[i + 1] - lo;
    if (!nearly_equal(width, first_width)) uniform_ = false;
    for (int m = 1; m < refinement_; ++m) points_.push_back(lo + width * m / refinement_);
    points_.push_back(trading_[i + 1]);
  }
}

TimeGrid TimeGrid::uniform(double maturity, std::size_t steps, int refinement) {
  if (!(maturity > 0.0) || steps < 1) throw std::invalid_argument("bad uniform grid");
  std::vector<double> times(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) times[i] = maturity * static_cast<double>(i) / steps;
  times.back() = maturity;
  return TimeGrid(std::move(times), refinement);
}

std::optional<std::size_t> TimeGrid::index_of(double t) const {
  auto it = std::lower_bound(points_.begin(), points_.end(), t);
  for (auto cand : {it, it == points_.begin() ? it : std::prev(it)}) {
    if (cand != points_.end() && nearly_equal(*cand, t)) {
      return static_cast<std::size_t>(cand - points_.begin());
    }
  }
  return std::nullopt;
}

double covariance(double t, double s, HurstIndex h) {
  if (t < 0.0 || s < 0.0) throw std::invalid_argument("covariance needs nonnegative times");
  if (h.is_brownian()) return std::min(t, s);
  const double two_h = 2.0 * h.value();
  return 0.5 * (std::pow(t, two_h) + std::pow(s, two_h) - std::pow(std::abs(t - s), two_h));
}

struct FbmSampler::Circulant {
  std::size_t size = 0;       // embedding length 2M
  std::vector<double> scale;  // sqrt(eigenvalue / size) per frequency
  fftw_plan plan = nullptr;

  ~Circulant() {
    if (plan) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

FbmSampler::FbmSampler(GridPtr grid, HurstIndex h, FbmBackend backend)
    : grid_(std::move(grid)), hurst_(h), backend_(backend) {
  if (!grid_) throw std::invalid_argument("sampler needs a grid");
  const auto pts = grid_->points();
  n_ = pts.size() - 1;
  if (hurst_.is_brownian()) return;  // independent increments, nothing to precompute

  if (backend_ == FbmBackend::kCholesky) {
    Eigen::MatrixXd cov(n_, n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        cov(i, j) = cov(j, i) = covariance(pts[i + 1], pts[j + 1], hurst_);
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw FactorizationError("fBm covariance is not positive definite on this grid");
    }
    Eigen::MatrixXd lower = llt.matrixL();
    // A pivot at rounding level means two grid points are numerically the same time.
    for (Eigen::Index i = 0; i < lower.rows(); ++i) {
      if (lower(i, i) * lower(i, i) <= 1e-13 * cov(i, i)) {
        throw FactorizationError("fBm covariance is numerically singular on this grid (near-duplicate times)");
      }
    }
    chol_.resize(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) chol_[i * n_ + j] = lower(i, j);
    }
    return;
  }

  if (!grid_->is_uniform()) {
    throw std::invalid_argument("circulant backend needs a uniform subgrid");
  }
  const double step = pts[1];
  const double two_h = 2.0 * hurst_.value();
  auto gamma = [&](std::size_t k) {
    const double kk = static_cast<double>(k);
    return 0.5 * std::pow(step, two_h) *
           (std::pow(kk + 1.0, two_h) - 2.0 * std::pow(kk, two_h) +
            std::pow(std::abs(kk - 1.0), two_h));
  };
  std::size_t half = 1;
  while (half < n_) half <<= 1;
  circulant_ = std::make_unique<Circulant>();
  circulant_->size = 2 * half;
  const std::size_t m = circulant_->size;

  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m));
  {
    std::lock_guard lock(fftw_planner_mutex());
    circulant_->plan = fftw_plan_dft_1d(static_cast<int>(m), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t lag = k <= half ? k : m - k;
    buf[k][0] = gamma(lag);
    buf[k][1] = 0.0;
  }
  fftw_execute_dft(circulant_->plan, buf, buf);
  circulant_->scale.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double lambda = buf[k][0];
    if (lambda < -1e-10 * std::abs(buf[0][0])) {
      fftw_free(buf);
      throw FactorizationError("circulant embedding has a negative eigenvalue");
    }
    circulant_->scale[k] = std::sqrt(std::max(lambda, 0.0) / static_cast<double>(m));
  }
  fftw_free(buf);
}

FbmSampler::~FbmSampler() = default;

FbmPath FbmSampler::sample(std::uint64_t seed, std::uint64_t path_index) const {
  auto rng = make_stream(seed, path_index);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto pts = grid_->points();
  FbmPath path{grid_, std::vector<double>(n_ + 1, 0.0)};

  if (hurst_.is_brownian()) {
    for (std::size_t i = 1; i <= n_; ++i) {
      path.values[i] = path.values[i - 1] + std::sqrt(pts[i] - pts[i - 1]) * normal(rng);
    }
    return path;
  }

  if (backend_ == FbmBackend::kCholesky) {
    std::vector<double> z(n_);
    for (double& x : z) x = normal(rng);
    for (std::size_t i = 0; i < n_; ++i) {
      const double* row = &chol_[i * n_];
      double acc = 0.0;
      for (std::size_t j = 0; j <= i; ++j) acc += row[j] * z[j];
      path.values[i + 1] = acc;
    }
    return path;
  }

  const std::size_t m = circulant_->size;
  const std::size_t half = m / 2;
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m));
  const auto& scale = circulant_->scale;
  buf[0][0] = scale[0] * normal(rng);
  buf[0][1] = 0.0;
  buf[half][0] = scale[half] * normal(rng);
  buf[half][1] = 0.0;
  for (std::size_t k = 1; k < half; ++k) {
    const double re = normal(rng) * scale[k] / std::sqrt(2.0);
    const double im = normal(rng) * scale[k] / std::sqrt(2.0);
    buf[k][0] = re;
    buf[k][1] = im;
    buf[m - k][0] = re;
    buf[m - k][1] = -im;
  }
  fftw_execute_dft(circulant_->plan, buf, buf);
  double level = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    level += buf[i][0];
    path.values[i + 1] = level;
  }
  fftw_free(buf);
  return path;
}

std::vector<FbmPath> generate_paths(GridPtr grid, HurstIndex h, std::size_t n_paths,
                                    std::uint64_t seed, FbmBackend backend) {
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  FbmSampler sampler(std::move(grid), h, backend);
  std::vector<FbmPath> out;
  out.reserve(n_paths);
  for (std::size_t j = 0; j < n_paths; ++j) out.push_back(sampler.sample(seed, j));
  return out;
}

AssetPath asset_path(const FbmPath& b, const ModelParams& params) {
  const auto pts = b.grid->points();
  AssetPath s{b.grid, std::vector<double>(b.values.size())};
  for (std::size_t i = 0; i < b.values.size(); ++i) {
    s.values[i] = params.spot * std::exp(params.mu * pts[i] + params.sigma * b.values[i]);
  }
  return s;
}

double frictionless_value(const AssetPath& s, const Payoff& payoff, double t) {
  const auto idx = s.grid->index_of(t);
  if (!idx) throw std::invalid_argument("time " + std::to_string(t) + " is not on the subgrid");
  return payoff(s.values[*idx]);
}

}  // namespace fbmhedge
