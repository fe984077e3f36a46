#include "fbmhedge/payoff.hpp"

#include <algorithm>
#include <stdexcept>

namespace fbmhedge {

Payoff Payoff::call(double strike) {
  if (!(strike > 0.0)) throw std::invalid_argument("call strike must be positive");
  Payoff p;
  p.kind_ = Kind::kCall;
  p.strike_ = strike;
  p.name_ = "call";
  p.kinks_ = {strike};
  return p;
}

Payoff Payoff::put(double strike) {
  if (!(strike > 0.0)) throw std::invalid_argument("put strike must be positive");
  Payoff p;
  p.kind_ = Kind::kPut;
  p.strike_ = strike;
  p.name_ = "put";
  p.kinks_ = {strike};
  return p;
}

Payoff Payoff::identity() {
  Payoff p;
  p.kind_ = Kind::kIdentity;
  p.name_ = "identity";
  return p;
}

Payoff Payoff::custom(std::string name, std::function<double(double)> value,
                      std::function<double(double)> left_derivative, std::vector<double> kinks) {
  if (!value || !left_derivative) {
    throw std::invalid_argument("custom payoff needs both a value and a left derivative");
  }
  Payoff p;
  p.kind_ = Kind::kCustom;
  p.name_ = std::move(name);
  p.value_ = std::move(value);
  p.derivative_ = std::move(left_derivative);
  p.kinks_ = std::move(kinks);
  std::sort(p.kinks_.begin(), p.kinks_.end());
  return p;
}

Payoff Payoff::constant(double c) {
  return custom("constant", [c](double) { return c; }, [](double) { return 0.0; });
}

double Payoff::operator()(double s) const {
  switch (kind_) {
    case Kind::kCall:
      return std::max(s - strike_, 0.0);
    case Kind::kPut:
      return std::max(strike_ - s, 0.0);
    case Kind::kIdentity:
      return s;
    case Kind::kCustom:
      return value_(s);
  }
  return 0.0;
}

double Payoff::left_derivative(double s) const {
  switch (kind_) {
    case Kind::kCall:
      return s > strike_ ? 1.0 : 0.0;
    case Kind::kPut:
      return s > strike_ ? 0.0 : -1.0;
    case Kind::kIdentity:
      return 1.0;
    case Kind::kCustom:
      return derivative_(s);
  }
  return 0.0;
}

Payoff Payoff::scaled(double factor) const {
  switch (kind_) {
    case Kind::kCall:
      return call(strike_ * factor);
    case Kind::kPut:
      return put(strike_ * factor);
    case Kind::kIdentity:
      return identity();
    case Kind::kCustom: {
      auto v = value_;
      auto d = derivative_;
      std::vector<double> kinks = kinks_;
      for (double& k : kinks) k *= factor;
      return custom(
          name_, [v, factor](double s) { return factor * v(s / factor); },
          [d, factor](double s) { return d(s / factor); }, std::move(kinks));
    }
  }
  return *this;
}

}  // namespace fbmhedge
