#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fbmhedge {

/// European vanilla payoff f(S_T) with f convex or concave.
///
/// Besides the value, a payoff carries its left derivative (the frictionless
/// replicating position f'(S)) and the list of kink locations, which the
/// conditional-expectation quadrature uses as breakpoints.
class Payoff {
 public:
  enum class Kind { kCall, kPut, kIdentity, kCustom };

  static Payoff call(double strike);
  static Payoff put(double strike);
  static Payoff identity();
  static Payoff custom(std::string name, std::function<double(double)> value,
                       std::function<double(double)> left_derivative,
                       std::vector<double> kinks = {});
  /// f(x) = c; convenience custom payoff.
  static Payoff constant(double c);

  double operator()(double s) const;
  double left_derivative(double s) const;

  Kind kind() const noexcept { return kind_; }
  double strike() const noexcept { return strike_; }
  const std::string& name() const noexcept { return name_; }
  std::span<const double> kinks() const noexcept { return kinks_; }

  /// Same payoff with all price-dimension parameters multiplied by factor.
  Payoff scaled(double factor) const;

 private:
  Payoff() = default;

  Kind kind_ = Kind::kIdentity;
  double strike_ = 0.0;
  std::string name_;
  std::function<double(double)> value_;
  std::function<double(double)> derivative_;
  std::vector<double> kinks_;
};

}  // namespace fbmhedge
