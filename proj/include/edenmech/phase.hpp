#pragma once

#include <cmath>

#include <Eigen/Core>

#include "edenmech/errors.hpp"

namespace edenmech {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace detail {

template <typename Self>
struct SplitVector {
  static Self unpack(const Vec& flat) {
    const Eigen::Index n = (flat.size() - 1) / 2;
    if (flat.size() != 2 * n + 1) throw Error(ErrorKind::DimensionMismatch, "flat vector must have odd length");
    return Self(flat.head(n), flat.segment(n, n), flat[2 * n]);
  }
};

inline void require_same_dim(Eigen::Index a, Eigen::Index b) {
  if (a != b) throw Error(ErrorKind::DimensionMismatch, "q and p blocks differ in length");
}

}  // namespace detail

/// A point (q, p, z) of T*Q x R.
struct PhasePoint : detail::SplitVector<PhasePoint> {
  Vec q;
  Vec p;
  double z = 0.0;

  PhasePoint() = default;
  PhasePoint(Vec q_, Vec p_, double z_) : q(std::move(q_)), p(std::move(p_)), z(z_) {
    detail::require_same_dim(q.size(), p.size());
  }

  int dim() const { return static_cast<int>(q.size()); }

  Vec pack() const {
    Vec out(2 * q.size() + 1);
    out << q, p, z;
    return out;
  }

  bool finite() const { return q.allFinite() && p.allFinite() && std::isfinite(z); }
};

/// Components (dq, dp, dz) of a vector tangent to T*Q x R.
struct TangentVector : detail::SplitVector<TangentVector> {
  Vec dq;
  Vec dp;
  double dz = 0.0;

  TangentVector() = default;
  TangentVector(Vec dq_, Vec dp_, double dz_) : dq(std::move(dq_)), dp(std::move(dp_)), dz(dz_) {
    detail::require_same_dim(dq.size(), dp.size());
  }

  static TangentVector zero(int n) { return {Vec::Zero(n), Vec::Zero(n), 0.0}; }

  int dim() const { return static_cast<int>(dq.size()); }

  Vec pack() const {
    Vec out(2 * dq.size() + 1);
    out << dq, dp, dz;
    return out;
  }
};

/// Components (a_q, a_p, a_z) of a covector on T*Q x R.
struct CotangentVector : detail::SplitVector<CotangentVector> {
  Vec a_q;
  Vec a_p;
  double a_z = 0.0;

  CotangentVector() = default;
  CotangentVector(Vec a_q_, Vec a_p_, double a_z_) : a_q(std::move(a_q_)), a_p(std::move(a_p_)), a_z(a_z_) {
    detail::require_same_dim(a_q.size(), a_p.size());
  }

  static CotangentVector zero(int n) { return {Vec::Zero(n), Vec::Zero(n), 0.0}; }

  int dim() const { return static_cast<int>(a_q.size()); }

  Vec pack() const {
    Vec out(2 * a_q.size() + 1);
    out << a_q, a_p, a_z;
    return out;
  }

  /// Pairing with a tangent vector.
  double operator()(const TangentVector& v) const { return a_q.dot(v.dq) + a_p.dot(v.dp) + a_z * v.dz; }
};

inline PhasePoint operator+(const PhasePoint& x, const TangentVector& v) {
  return {x.q + v.dq, x.p + v.dp, x.z + v.dz};
}
inline TangentVector operator*(double s, const TangentVector& v) { return {s * v.dq, s * v.dp, s * v.dz}; }
inline TangentVector operator+(const TangentVector& a, const TangentVector& b) {
  return {a.dq + b.dq, a.dp + b.dp, a.dz + b.dz};
}
inline TangentVector operator-(const TangentVector& a, const TangentVector& b) {
  return {a.dq - b.dq, a.dp - b.dp, a.dz - b.dz};
}
inline CotangentVector operator-(const CotangentVector& a, const CotangentVector& b) {
  return {a.a_q - b.a_q, a.a_p - b.a_p, a.a_z - b.a_z};
}
inline CotangentVector operator+(const CotangentVector& a, const CotangentVector& b) {
  return {a.a_q + b.a_q, a.a_p + b.a_p, a.a_z + b.a_z};
}
inline CotangentVector operator*(double s, const CotangentVector& a) { return {s * a.a_q, s * a.a_p, s * a.a_z}; }

/// Max-norm distance helpers used throughout the checks.
inline double max_abs(const TangentVector& v) { return v.pack().lpNorm<Eigen::Infinity>(); }
inline double max_abs(const CotangentVector& a) { return a.pack().lpNorm<Eigen::Infinity>(); }

}  // namespace edenmech
