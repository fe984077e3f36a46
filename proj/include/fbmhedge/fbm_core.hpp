#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fbmhedge/payoff.hpp"

namespace fbmhedge {

/// Hurst index of the driving fractional Brownian motion.
///
/// The general constructor admits H in (1/2, 1). Standard Brownian motion
/// (H = 1/2) is only reachable through brownian(); every consumer checks
/// is_brownian() and takes a dedicated branch instead of a numerical limit.
class HurstIndex {
 public:
  explicit HurstIndex(double value);
  static HurstIndex brownian() noexcept { return HurstIndex(0.5, Tag{}); }
  /// Parses a configured value: 0.5 maps to brownian(), anything else goes through
  /// the validating constructor.
  static HurstIndex from_config(double value);

  double value() const noexcept { return value_; }
  bool is_brownian() const noexcept { return value_ == 0.5; }

 private:
  struct Tag {};
  HurstIndex(double value, Tag) noexcept : value_(value) {}
  double value_;
};

struct ModelParams {
  double mu = 0.0;
  double sigma = 0.2;
  double spot = 100.0;
  HurstIndex hurst = HurstIndex(0.75);
  double cost = 0.0;  // proportional transaction cost k

  void validate() const;
};

/// Trading times 0 = t_0 < ... < t_N = T, each interval split uniformly into
/// `refinement` cells. The simulation subgrid contains every trading time exactly.
class TimeGrid {
 public:
  TimeGrid(std::vector<double> trading_times, int refinement);
  static TimeGrid uniform(double maturity, std::size_t steps, int refinement);

  std::span<const double> trading_times() const noexcept { return trading_; }
  std::span<const double> points() const noexcept { return points_; }
  int refinement() const noexcept { return refinement_; }
  std::size_t steps() const noexcept { return trading_.size() - 1; }
  double maturity() const noexcept { return trading_.back(); }

  /// Subgrid index of trading time t_i.
  std::size_t trading_index(std::size_t i) const noexcept {
    return i * static_cast<std::size_t>(refinement_);
  }
  /// Subgrid index of t, if t is a subgrid point (up to 1e-12 relative).
  std::optional<std::size_t> index_of(double t) const;
  /// True when every subgrid cell has the same width.
  bool is_uniform() const noexcept { return uniform_; }

 private:
  std::vector<double> trading_;
  std::vector<double> points_;
  int refinement_;
  bool uniform_;
};

using GridPtr = std::shared_ptr<const TimeGrid>;

struct FbmPath {
  GridPtr grid;
  std::vector<double> values;  // B at each subgrid point, values[0] == 0
};

struct AssetPath {
  GridPtr grid;
  std::vector<double> values;  // S at each subgrid point, values[0] == spot
};

class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// fBm covariance 1/2 (t^{2H} + s^{2H} - |t-s|^{2H}).
double covariance(double t, double s, HurstIndex h);

enum class FbmBackend {
  kCholesky,   // dense factorization of the subgrid covariance (reference)
  kCirculant,  // Davies-Harte embedding of the increments (needs a uniform subgrid)
};

/// Exact fBm sampler on a fixed subgrid.
///
/// Path j of a seed is drawn from its own generator seeded with (seed, j), so a
/// path is reproducible on its own and batches may be split across workers.
class FbmSampler {
 public:
  FbmSampler(GridPtr grid, HurstIndex h, FbmBackend backend = FbmBackend::kCholesky);
  ~FbmSampler();
  FbmSampler(const FbmSampler&) = delete;
  FbmSampler& operator=(const FbmSampler&) = delete;

  FbmPath sample(std::uint64_t seed, std::uint64_t path_index) const;

  const GridPtr& grid() const noexcept { return grid_; }
  HurstIndex hurst() const noexcept { return hurst_; }
  FbmBackend backend() const noexcept { return backend_; }

 private:
  struct Circulant;

  GridPtr grid_;
  HurstIndex hurst_;
  FbmBackend backend_;
  std::vector<double> chol_;  // row-major lower factor, n x n
  std::size_t n_ = 0;         // subgrid points excluding t = 0
  std::unique_ptr<Circulant> circulant_;
};

std::vector<FbmPath> generate_paths(GridPtr grid, HurstIndex h, std::size_t n_paths,
                                    std::uint64_t seed,
                                    FbmBackend backend = FbmBackend::kCholesky);

/// S_t = spot * exp(mu t + sigma B_t) pointwise.
AssetPath asset_path(const FbmPath& b, const ModelParams& params);

/// f(S_t): the continuous-trading frictionless value at subgrid time t.
double frictionless_value(const AssetPath& s, const Payoff& payoff, double t);

}  // namespace fbmhedge
