#pragma once

// Forward-mode dual numbers with a dynamic tangent vector.
//
// A Dual carries a value and the derivatives of that value along every
// active direction. An empty tangent means "all derivatives zero", so
// constants can be created without knowing the number of directions.

#include <cmath>
#include <cstddef>
#include <limits>

#include <Eigen/Core>

#include "edenmech/errors.hpp"

namespace edenmech {

class Dual {
 public:
  Dual() = default;
  Dual(double value) : value_(value) {}  // NOLINT: implicit by design of a scalar type
  Dual(double value, Eigen::VectorXd tangent) : value_(value), tangent_(std::move(tangent)) {}

  /// The i-th coordinate variable among `directions` seeded directions.
  static Dual variable(double value, std::size_t index, std::size_t directions) {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(directions));
    t[static_cast<Eigen::Index>(index)] = 1.0;
    return Dual(value, std::move(t));
  }

  double value() const { return value_; }
  const Eigen::VectorXd& tangent() const { return tangent_; }
  bool is_constant() const { return tangent_.size() == 0; }

  /// Derivative along direction i; zero for constants.
  double derivative(Eigen::Index i) const { return is_constant() ? 0.0 : tangent_[i]; }

  /// Tangent padded to a known number of directions.
  Eigen::VectorXd gradient(Eigen::Index directions) const {
    return is_constant() ? Eigen::VectorXd::Zero(directions) : tangent_;
  }

  Dual& operator+=(const Dual& o) {
    value_ += o.value_;
    add_scaled(o.tangent_, 1.0);
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    value_ -= o.value_;
    add_scaled(o.tangent_, -1.0);
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    // d(uv) = u dv + v du
    if (!is_constant()) tangent_ *= o.value_;
    add_scaled(o.tangent_, value_);
    value_ *= o.value_;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.value_;
    const double quotient = value_ * inv;
    if (!is_constant()) tangent_ *= inv;
    add_scaled(o.tangent_, -quotient * inv);
    value_ = quotient;
    return *this;
  }

  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
  friend Dual operator/(Dual a, const Dual& b) { return a /= b; }
  friend Dual operator-(Dual a) {
    a.value_ = -a.value_;
    if (!a.is_constant()) a.tangent_ = -a.tangent_;
    return a;
  }
  friend Dual operator+(const Dual& a) { return a; }

  friend bool operator<(const Dual& a, const Dual& b) { return a.value_ < b.value_; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.value_ > b.value_; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.value_ <= b.value_; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.value_ >= b.value_; }
  friend bool operator==(const Dual& a, const Dual& b) { return a.value_ == b.value_; }
  friend bool operator!=(const Dual& a, const Dual& b) { return a.value_ != b.value_; }

  /// Apply a scalar function with value `f` and derivative `df` at value().
  Dual chain(double f, double df) const {
    if (is_constant()) return Dual(f);
    return Dual(f, tangent_ * df);
  }

 private:
  void add_scaled(const Eigen::VectorXd& t, double s) {
    if (t.size() == 0) return;
    if (is_constant()) {
      tangent_ = t * s;
    } else {
      tangent_.noalias() += s * t;
    }
  }

  double value_ = 0.0;
  Eigen::VectorXd tangent_;
};

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.value(); }

inline Dual sin(const Dual& x) { return x.chain(std::sin(x.value()), std::cos(x.value())); }
inline Dual cos(const Dual& x) { return x.chain(std::cos(x.value()), -std::sin(x.value())); }
inline Dual exp(const Dual& x) {
  const double e = std::exp(x.value());
  return x.chain(e, e);
}
inline Dual log(const Dual& x) { return x.chain(std::log(x.value()), 1.0 / x.value()); }
inline Dual sqrt(const Dual& x) {
  const double s = std::sqrt(x.value());
  return x.chain(s, 0.5 / s);
}
// abs is differentiated with sign(0) = 0.
inline Dual abs(const Dual& x) {
  const double v = x.value();
  return x.chain(std::abs(v), v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0));
}
/// Power with a constant exponent.
inline Dual pow(const Dual& x, double e) {
  const double v = x.value();
  return x.chain(std::pow(v, e), e == 0.0 ? 0.0 : e * std::pow(v, e - 1.0));
}

}  // namespace edenmech

namespace Eigen {

template <>
struct NumTraits<edenmech::Dual> : NumTraits<double> {
  using Real = edenmech::Dual;
  using NonInteger = edenmech::Dual;
  using Nested = edenmech::Dual;
  using Literal = edenmech::Dual;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 4,
    AddCost = 8,
    MulCost = 16,
  };
};

}  // namespace Eigen
