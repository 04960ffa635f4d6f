#pragma once

// Constrained contact dynamics X_{H,M}, built two independent ways:
//   - multipliers: p' = -H_q - p H_z - Phi^T lambda, lambda chosen so that
//     d/dt (Phi g^-1 p) = 0;
//   - pushforward: apply T(gamma) to the free field X_H at points of M x R.

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "edenmech/contact.hpp"
#include "edenmech/mech_system.hpp"

namespace edenmech {

namespace detail {

inline void require_on_constraint(const MechanicalSystem& sys, const PhasePoint& x, double tol) {
  const double r = constraint_violation(sys, x);
  if (!(r <= tol)) {
    throw Error(ErrorKind::NotOnConstraint, "point is off the constraint manifold (|Phi g^-1 p| = " +
                                                format_double(r) + ", tol " + format_double(tol) + ")");
  }
}

/// d/ds (Phi(q + s w) g(q + s w)^-1 p) at s = 0.
inline Vec constraint_q_derivative(const MechanicalSystem& sys, const PhasePoint& x, const Vec& w) {
  const int n = sys.dim();
  std::vector<Dual> xs;
  for (int i = 0; i < n; ++i) xs.emplace_back(x.q[i], Vec::Constant(1, w[i]));
  const std::span<const Dual> qs(xs);
  const MatrixX<Dual> lg = linalg::cholesky<Dual>(sys.metric<Dual>(qs), ErrorKind::NotSPD);
  MatrixX<Dual> p(n, 1);
  for (int i = 0; i < n; ++i) p(i, 0) = Dual(x.p[i]);
  const MatrixX<Dual> phi_v = linalg::multiply<Dual>(sys.constraint_matrix<Dual>(qs), linalg::cholesky_solve<Dual>(lg, p));
  Vec out(phi_v.rows());
  for (Eigen::Index a = 0; a < phi_v.rows(); ++a) out[a] = phi_v(a, 0).derivative(0);
  return out;
}

/// Multipliers without the membership check; valid off M as the value that
/// keeps Phi g^-1 p stationary.
inline Vec multipliers_raw(const MechanicalSystem& sys, const PhasePoint& x, const Jet& h) {
  const int k = sys.num_constraints();
  if (k == 0) return Vec::Zero(0);
  const CotangentVector& dh = h.differential;
  const Mat phi = sys.constraints_at(x.q);
  const Mat lg = linalg::cholesky<double>(sys.metric_at(x.q), ErrorKind::NotSPD);
  const Mat ginv_phi_t = linalg::cholesky_solve<double>(lg, Mat(phi.transpose()));
  const Mat a = phi * ginv_phi_t;
  const Vec b = -dh.a_q - dh.a_z * x.p;
  const Vec rhs = constraint_q_derivative(sys, x, dh.a_p) + ginv_phi_t.transpose() * b;
  const Mat la = linalg::cholesky<double>(a, ErrorKind::RankDeficient);
  return linalg::cholesky_solve<double>(la, Mat(rhs));
}

inline TangentVector multiplier_field_raw(const MechanicalSystem& sys, const PhasePoint& x, const Jet& h) {
  TangentVector v = hamiltonian_field(x, h);
  if (sys.num_constraints() == 0) return v;
  const Vec lambda = multipliers_raw(sys, x, h);
  v.dp -= sys.constraints_at(x.q).transpose() * lambda;
  return v;
}

}  // namespace detail

/// Lagrange multipliers lambda_a at a point of M x R.
inline Vec multipliers(const MechanicalSystem& sys, const Observable& h, const PhasePoint& x,
                       double tol = kDefaultMembershipTol) {
  detail::require_on_constraint(sys, x, tol);
  return detail::multipliers_raw(sys, x, h.jet(x));
}

inline TangentVector constrained_field_multipliers(const MechanicalSystem& sys, const Observable& h,
                                                   const PhasePoint& x, double tol = kDefaultMembershipTol) {
  detail::require_on_constraint(sys, x, tol);
  return detail::multiplier_field_raw(sys, x, h.jet(x));
}

/// T(gamma) applied to a tangent vector based at x.
inline TangentVector push_forward(const ProjectorAtQ& proj, const PhasePoint& x, const TangentVector& v) {
  Vec dp = proj.P * v.dp;
  for (int j = 0; j < x.dim(); ++j) dp += v.dq[j] * (proj.dP[static_cast<std::size_t>(j)] * x.p);
  return {v.dq, dp, v.dz};
}

inline TangentVector constrained_field_pushforward(const MechanicalSystem& sys, const Observable& h,
                                                   const PhasePoint& x, double tol = kDefaultMembershipTol) {
  detail::require_on_constraint(sys, x, tol);
  return push_forward(projector(sys, x.q), x, hamiltonian_field(h, x));
}

enum class Route { Multiplier, Pushforward };

/// X_{H,M} by either construction.
struct ConstrainedField {
  MechanicalSystem system;
  Observable hamiltonian;
  Route route = Route::Multiplier;

  TangentVector operator()(const PhasePoint& x, double tol = kDefaultMembershipTol) const {
    return route == Route::Multiplier ? constrained_field_multipliers(system, hamiltonian, x, tol)
                                      : constrained_field_pushforward(system, hamiltonian, x, tol);
  }
};

// ---------------------------------------------------------------------------
// Integration.

enum class FieldKind { Free, Constrained };

struct IntegrateOptions {
  bool reproject = false;             // p <- P(q) p after each step (Constrained only)
  double membership_tol = kDefaultMembershipTol;
  double snap_tol = 1e-6;             // x0 within this distance of M is projected onto it
};

struct StepDiagnostics {
  double hamiltonian = 0.0;
  double constraint_residual = 0.0;   // |Phi g^-1 p|_inf
  double dissipation_residual = 0.0;  // |X(H) + H H_z|
};

struct Trajectory {
  std::vector<double> times;
  std::vector<PhasePoint> states;
  std::vector<StepDiagnostics> diagnostics;
  bool snapped = false;  // x0 was moved onto M x R before integrating
};

inline Trajectory integrate(FieldKind kind, const MechanicalSystem& sys, const Observable& h, PhasePoint x0,
                            double t1, double dt, const IntegrateOptions& opts = {}) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::ConfigError, "dt must be positive");
  if (!(t1 >= 0.0) || !std::isfinite(t1)) throw Error(ErrorKind::ConfigError, "t1 must be non-negative");
  if (x0.dim() != sys.dim()) throw Error(ErrorKind::DimensionMismatch, "initial point has wrong dimension");
  if (!x0.finite()) throw Error(ErrorKind::StepFailure, "initial point is not finite");

  Trajectory traj;
  const bool constrained = kind == FieldKind::Constrained && sys.num_constraints() > 0;
  if (constrained) {
    const double r = constraint_violation(sys, x0);
    if (r > opts.membership_tol) {
      if (r > opts.snap_tol) detail::require_on_constraint(sys, x0, opts.membership_tol);
      x0 = project_point(sys, x0);
      traj.snapped = true;
    }
  }

  auto field = [&](const PhasePoint& x) {
    const Jet jh = h.jet(x);
    return constrained ? detail::multiplier_field_raw(sys, x, jh) : hamiltonian_field(x, jh);
  };
  auto record = [&](double t, const PhasePoint& x) {
    const Jet jh = h.jet(x);
    const TangentVector v = constrained ? detail::multiplier_field_raw(sys, x, jh) : hamiltonian_field(x, jh);
    StepDiagnostics d;
    d.hamiltonian = jh.value;
    d.constraint_residual = constraint_violation(sys, x);
    d.dissipation_residual = std::abs(jh.differential(v) + jh.value * jh.differential.a_z);
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.diagnostics.push_back(d);
  };

  const auto steps = static_cast<long>(std::llround(t1 / dt));
  PhasePoint x = x0;
  record(0.0, x);
  for (long i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double t_next = i + 1 == steps ? t1 : static_cast<double>(i + 1) * dt;
    const double hstep = t_next - t;
    // classical RK4
    const TangentVector k1 = field(x);
    const TangentVector k2 = field(x + (0.5 * hstep) * k1);
    const TangentVector k3 = field(x + (0.5 * hstep) * k2);
    const TangentVector k4 = field(x + hstep * k3);
    x = x + (hstep / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (constrained && opts.reproject) x = project_point(sys, x);
    if (!x.finite()) throw Error(ErrorKind::StepFailure, "state became non-finite at t = " + detail::format_double(t_next));
    record(t_next, x);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// CSV: t,q1..qn,p1..pn,z,H,phi1..phik with %.17g floats.

inline std::string trajectory_csv_header(int n, int k) {
  std::string h = "t";
  for (int i = 1; i <= n; ++i) h += ",q" + std::to_string(i);
  for (int i = 1; i <= n; ++i) h += ",p" + std::to_string(i);
  h += ",z,H";
  for (int a = 1; a <= k; ++a) h += ",phi" + std::to_string(a);
  return h;
}

inline void write_trajectory_csv(std::ostream& out, const MechanicalSystem& sys, const Trajectory& traj) {
  out << trajectory_csv_header(sys.dim(), sys.num_constraints()) << '\n';
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    const PhasePoint& x = traj.states[s];
    std::string line = detail::format_double(traj.times[s]);
    for (int i = 0; i < x.dim(); ++i) line += "," + detail::format_double(x.q[i]);
    for (int i = 0; i < x.dim(); ++i) line += "," + detail::format_double(x.p[i]);
    line += "," + detail::format_double(x.z) + "," + detail::format_double(traj.diagnostics[s].hamiltonian);
    const Vec phi = constraint_residual(sys, x);
    for (Eigen::Index a = 0; a < phi.size(); ++a) line += "," + detail::format_double(phi[a]);
    out << line << '\n';
  }
}

/// Parsed trajectory table: header names and numeric rows.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) throw Error(ErrorKind::ConfigError, "empty CSV");
  table.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    for (const auto& cell : split(line)) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != table.columns.size()) throw Error(ErrorKind::ConfigError, "ragged CSV row");
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace edenmech
