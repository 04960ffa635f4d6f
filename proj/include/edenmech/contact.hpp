#pragma once

// Canonical contact structure of T*Q x R with eta = dz - p_i dq^i.
//
// Flat coordinate order is (q, p, z) for both vectors and covectors. With
// s = eta(v) = dz - p.dq the isomorphism v -> i_v d(eta) + eta(v) eta reads
//   a_q = -dp - s p,   a_p = dq,   a_z = s.

#include <Eigen/LU>

#include "edenmech/observable.hpp"
#include "edenmech/phase.hpp"

namespace edenmech {

inline CotangentVector eta_at(const PhasePoint& x) {
  return {-x.p, Vec::Zero(x.dim()), 1.0};
}

inline TangentVector reeb(int n) {
  return {Vec::Zero(n), Vec::Zero(n), 1.0};
}

/// d(eta)(u, v) = u_q . v_p - u_p . v_q
inline double d_eta(const TangentVector& u, const TangentVector& v) {
  return u.dq.dot(v.dp) - u.dp.dot(v.dq);
}

/// Interior product i_v d(eta) as a covector.
inline CotangentVector contract_d_eta(const TangentVector& v) {
  return {-v.dp, v.dq, 0.0};
}

/// Matrix F with flat(x, v).pack() == F * v.pack().
inline Mat flat_matrix(const PhasePoint& x) {
  const Eigen::Index n = x.dim();
  Mat f = Mat::Zero(2 * n + 1, 2 * n + 1);
  const Vec& p = x.p;
  // a_q = p p^T dq - dp - p dz
  f.block(0, 0, n, n) = p * p.transpose();
  f.block(0, n, n, n) = -Mat::Identity(n, n);
  f.block(0, 2 * n, n, 1) = -p;
  // a_p = dq
  f.block(n, 0, n, n) = Mat::Identity(n, n);
  // a_z = dz - p . dq
  f.block(2 * n, 0, 1, n) = -p.transpose();
  f(2 * n, 2 * n) = 1.0;
  return f;
}

inline CotangentVector flat(const PhasePoint& x, const TangentVector& v) {
  if (v.dim() != x.dim()) throw Error(ErrorKind::DimensionMismatch, "vector and point dimensions differ");
  const double s = v.dz - x.p.dot(v.dq);
  return {-v.dp - s * x.p, v.dq, s};
}

/// Inverse of flat, solved in closed form from the block structure.
inline TangentVector sharp(const PhasePoint& x, const CotangentVector& a) {
  if (a.dim() != x.dim()) throw Error(ErrorKind::DimensionMismatch, "covector and point dimensions differ");
  const double s = a.a_z;
  return {a.a_p, -a.a_q - s * x.p, s + x.p.dot(a.a_p)};
}

/// sharp through an LU factorization of flat_matrix; used for cross-checks.
inline TangentVector sharp_lu(const PhasePoint& x, const CotangentVector& a) {
  return TangentVector::unpack(flat_matrix(x).partialPivLu().solve(a.pack()));
}

/// omega(u, v) = d(eta)(u, v) + eta(u) eta(v), i.e. flat(u) applied to v.
inline double omega(const PhasePoint& x, const TangentVector& u, const TangentVector& v) {
  return flat(x, u)(v);
}

/// Contact Hamiltonian vector field from a value and differential of H.
inline TangentVector hamiltonian_field(const PhasePoint& x, const Jet& h) {
  const CotangentVector& dh = h.differential;
  return {dh.a_p, -dh.a_q - dh.a_z * x.p, x.p.dot(dh.a_p) - h.value};
}

inline TangentVector hamiltonian_field(const Observable& h, const PhasePoint& x) {
  return hamiltonian_field(x, h.jet(x));
}

/// Residual of flat(X_H) = dH - (R(H) + H) eta; zero for a correct field.
inline CotangentVector defining_residual(const PhasePoint& x, const Jet& h, const TangentVector& field) {
  return flat(x, field) - h.differential + (h.differential.a_z + h.value) * eta_at(x);
}

/// Directional derivative X(f) = df(X).
inline double lie_derivative(const Observable& f, const PhasePoint& x, const TangentVector& field) {
  return f.differential(x)(field);
}

/// Jacobi bracket from jets, definitional route:
/// {f,g} = -d(eta)(sharp df, sharp dg) - f R(g) + g R(f).
inline double contact_bracket(const PhasePoint& x, const Jet& f, const Jet& g) {
  const TangentVector xf = sharp(x, f.differential);
  const TangentVector xg = sharp(x, g.differential);
  return -d_eta(xf, xg) - f.value * g.differential.a_z + g.value * f.differential.a_z;
}

inline double contact_bracket(const Observable& f, const Observable& g, const PhasePoint& x) {
  return contact_bracket(x, f.jet(x), g.jet(x));
}

/// Same bracket expanded in coordinates.
inline double contact_bracket_coordinates(const PhasePoint& x, const Jet& f, const Jet& g) {
  const CotangentVector& df = f.differential;
  const CotangentVector& dg = g.differential;
  const Vec& p = x.p;
  return df.a_p.dot(dg.a_q) - df.a_q.dot(dg.a_p) - p.dot(dg.a_p) * df.a_z + p.dot(df.a_p) * dg.a_z -
         f.value * dg.a_z + g.value * df.a_z;
}

/// X_H(f) predicted by the bracket: {H, f} - f R(H).
inline double bracket_evolution(const PhasePoint& x, const Jet& h, const Jet& f) {
  return contact_bracket(x, h, f) - f.value * h.differential.a_z;
}

}  // namespace edenmech
