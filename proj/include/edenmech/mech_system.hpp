#pragma once

// Mechanical-type systems: H = 1/2 g^{ij}(q) p_i p_j + V(q, z), with linear
// constraints Phi(q) v = 0 on velocities. In momenta the constraint bundle
// is M = {p : Phi g^-1 p = 0}, and gamma projects T*Q onto M along the span
// of the constraint covectors (the rows of Phi).

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "edenmech/linalg.hpp"
#include "edenmech/observable.hpp"
#include "edenmech/phase.hpp"

namespace edenmech {

enum class MetricKind { Identity, Diagonal, Full };

/// Textual description of a system, as read from a config file or template.
struct SystemConfig {
  std::string name = "custom";
  int dimension = 0;
  MetricKind metric_kind = MetricKind::Identity;
  std::vector<std::string> metric;                   // n diagonal entries or n*n row-major entries
  std::string potential = "0";
  std::vector<std::vector<std::string>> constraints;  // k rows of n entries
  std::map<std::string, double> parameters;
  std::vector<std::pair<double, double>> sample_box;  // per coordinate; empty means [-1, 1]
};

inline constexpr double kDefaultMembershipTol = 1e-9;
inline constexpr int kValidationSamples = 32;

class MechanicalSystem {
 public:
  MechanicalSystem(std::string name, int n, MetricKind kind, std::vector<Expr> metric, Expr potential,
                   std::vector<std::vector<Expr>> constraints, std::map<std::string, double> params,
                   std::vector<std::pair<double, double>> box)
      : name_(std::move(name)),
        n_(n),
        metric_kind_(kind),
        metric_(std::move(metric)),
        potential_(std::move(potential)),
        constraints_(std::move(constraints)),
        params_(std::move(params)),
        box_(std::move(box)) {
    if (box_.empty()) box_.assign(static_cast<std::size_t>(n_), {-1.0, 1.0});
  }

  const std::string& name() const { return name_; }
  int dim() const { return n_; }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  const std::map<std::string, double>& params() const { return params_; }
  const std::vector<std::pair<double, double>>& sample_box() const { return box_; }
  const Expr& potential_expr() const { return potential_; }

  /// g(q). `x` is the flat coordinate vector of which only q is read.
  template <typename S>
  MatrixX<S> metric(std::span<const S> x) const {
    MatrixX<S> g = MatrixX<S>::Zero(n_, n_);
    switch (metric_kind_) {
      case MetricKind::Identity:
        for (int i = 0; i < n_; ++i) g(i, i) = S(1.0);
        break;
      case MetricKind::Diagonal:
        for (int i = 0; i < n_; ++i) g(i, i) = metric_[static_cast<std::size_t>(i)].evaluate<S>(x);
        break;
      case MetricKind::Full:
        for (int i = 0; i < n_; ++i)
          for (int j = 0; j < n_; ++j) g(i, j) = metric_[static_cast<std::size_t>(i * n_ + j)].evaluate<S>(x);
        break;
    }
    return g;
  }

  /// Phi(q), k x n; row a holds the one-form Phi^a_i dq^i.
  template <typename S>
  MatrixX<S> constraint_matrix(std::span<const S> x) const {
    MatrixX<S> phi(num_constraints(), n_);
    for (int a = 0; a < num_constraints(); ++a)
      for (int i = 0; i < n_; ++i) phi(a, i) = constraints_[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)].evaluate<S>(x);
    return phi;
  }

  Mat metric_at(const Vec& q) const { return metric<double>(q_span(q)); }
  Mat constraints_at(const Vec& q) const { return constraint_matrix<double>(q_span(q)); }

  /// Draw a configuration uniformly from the sample box.
  template <typename Rng>
  Vec sample_q(Rng& rng) const {
    Vec q(n_);
    for (int i = 0; i < n_; ++i) {
      const auto [lo, hi] = box_[static_cast<std::size_t>(i)];
      q[i] = std::uniform_real_distribution<double>(lo, hi)(rng);
    }
    return q;
  }

  /// Raise NotSPD / RankDeficient unless g is SPD and Phi has full row rank
  /// k < n at `samples` random configurations.
  void validate(int samples = kValidationSamples, std::uint64_t seed = 0x5eedULL) const {
    if (num_constraints() >= n_) throw Error(ErrorKind::RankDeficient, "need fewer constraints than coordinates");
    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s) check_at(sample_q(rng));
  }

  void check_at(const Vec& q) const {
    const Mat g = metric_at(q);
    if (!g.isApprox(g.transpose(), 1e-12) || !g.allFinite()) {
      throw Error(ErrorKind::NotSPD, "metric is not symmetric at q = " + describe(q));
    }
    try {
      linalg::cholesky<double>(g, ErrorKind::NotSPD);
    } catch (const Error&) {
      throw Error(ErrorKind::NotSPD, "metric is not positive definite at q = " + describe(q));
    }
    if (num_constraints() == 0) return;
    const Mat phi = constraints_at(q);
    Eigen::JacobiSVD<Mat> svd(phi);
    const Vec sv = svd.singularValues();
    if (!phi.allFinite() || sv.minCoeff() <= 1e-10 * std::max(1.0, sv.maxCoeff())) {
      throw Error(ErrorKind::RankDeficient, "constraint rows are linearly dependent at q = " + describe(q));
    }
  }

  static std::string describe(const Vec& q) {
    std::string out = "(";
    for (Eigen::Index i = 0; i < q.size(); ++i) out += (i ? ", " : "") + detail::format_double(q[i]);
    return out + ")";
  }

 private:
  std::span<const double> q_span(const Vec& q) const {
    if (q.size() != n_) throw Error(ErrorKind::DimensionMismatch, "configuration has wrong dimension");
    return {q.data(), static_cast<std::size_t>(q.size())};
  }

  std::string name_;
  int n_;
  MetricKind metric_kind_;
  std::vector<Expr> metric_;
  Expr potential_;
  std::vector<std::vector<Expr>> constraints_;
  std::map<std::string, double> params_;
  std::vector<std::pair<double, double>> box_;
};

/// Parse and validate a configuration.
inline MechanicalSystem build_system(const SystemConfig& cfg) {
  const int n = cfg.dimension;
  if (n < 1) throw Error(ErrorKind::ConfigError, "dimension must be at least 1");
  const auto& params = cfg.parameters;

  std::vector<Expr> metric;
  switch (cfg.metric_kind) {
    case MetricKind::Identity:
      if (!cfg.metric.empty()) throw Error(ErrorKind::ConfigError, "identity metric takes no entries");
      break;
    case MetricKind::Diagonal:
      if (cfg.metric.size() != static_cast<std::size_t>(n)) {
        throw Error(ErrorKind::ConfigError, "diagonal metric needs " + std::to_string(n) + " entries");
      }
      break;
    case MetricKind::Full:
      if (cfg.metric.size() != static_cast<std::size_t>(n * n)) {
        throw Error(ErrorKind::ConfigError, "full metric needs " + std::to_string(n * n) + " entries");
      }
      break;
  }
  for (const auto& src : cfg.metric) metric.push_back(parse_expr(src, n, params, VarSet::q_only()));

  Expr potential = parse_expr(cfg.potential, n, params, VarSet::q_and_z());

  std::vector<std::vector<Expr>> rows;
  for (const auto& row : cfg.constraints) {
    if (row.size() != static_cast<std::size_t>(n)) {
      throw Error(ErrorKind::ConfigError, "constraint rows need " + std::to_string(n) + " entries");
    }
    std::vector<Expr> parsed;
    for (const auto& src : row) parsed.push_back(parse_expr(src, n, params, VarSet::q_only()));
    rows.push_back(std::move(parsed));
  }

  std::vector<std::pair<double, double>> box = cfg.sample_box;
  if (!box.empty() && box.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorKind::ConfigError, "sample_box needs one interval per coordinate");
  }
  for (const auto& [lo, hi] : box) {
    if (!(lo < hi)) throw Error(ErrorKind::ConfigError, "sample_box intervals need lo < hi");
  }

  MechanicalSystem sys(cfg.name, n, cfg.metric_kind, std::move(metric), std::move(potential), std::move(rows),
                       params, std::move(box));
  sys.validate();
  return sys;
}

// ---------------------------------------------------------------------------
// Fields derived from the system.

namespace detail {

template <typename S>
VectorX<S> momentum_block(const MechanicalSystem& sys, std::span<const S> x) {
  VectorX<S> p(sys.dim());
  for (int i = 0; i < sys.dim(); ++i) p[i] = x[static_cast<std::size_t>(sys.dim() + i)];
  return p;
}

class HamiltonianField final : public GenericField<HamiltonianField> {
 public:
  explicit HamiltonianField(MechanicalSystem sys) : sys_(std::move(sys)) {}
  template <typename S>
  S evaluate(std::span<const S> x) const {
    const MatrixX<S> l = linalg::cholesky<S>(sys_.metric<S>(x), ErrorKind::NotSPD);
    const VectorX<S> p = momentum_block<S>(sys_, x);
    const MatrixX<S> v = linalg::cholesky_solve<S>(l, p);
    S kinetic(0.0);
    for (int i = 0; i < sys_.dim(); ++i) kinetic += p[i] * v(i, 0);
    return S(0.5) * kinetic + sys_.potential_expr().evaluate<S>(x);
  }

 private:
  MechanicalSystem sys_;
};

/// phi^a(q, p) = (Phi g^-1 p)_a
class ConstraintField final : public GenericField<ConstraintField> {
 public:
  ConstraintField(MechanicalSystem sys, int row) : sys_(std::move(sys)), row_(row) {}
  template <typename S>
  S evaluate(std::span<const S> x) const {
    const MatrixX<S> l = linalg::cholesky<S>(sys_.metric<S>(x), ErrorKind::NotSPD);
    const MatrixX<S> v = linalg::cholesky_solve<S>(l, momentum_block<S>(sys_, x));
    const MatrixX<S> phi = sys_.constraint_matrix<S>(x);
    S out(0.0);
    for (int i = 0; i < sys_.dim(); ++i) out += phi(row_, i) * v(i, 0);
    return out;
  }

 private:
  MechanicalSystem sys_;
  int row_;
};

}  // namespace detail

/// H(q, p, z) = 1/2 p^T g(q)^-1 p + V(q, z).
inline Observable hamiltonian(const MechanicalSystem& sys) {
  return {std::make_shared<detail::HamiltonianField>(sys), sys.dim(), VarSet::all(), "H"};
}

/// Constraint function phi^a = (Phi g^-1 p)_a, vanishing exactly on M x R.
inline Observable constraint_function(const MechanicalSystem& sys, int a) {
  if (a < 0 || a >= sys.num_constraints()) throw Error(ErrorKind::BadIndex, "no constraint row " + std::to_string(a));
  return {std::make_shared<detail::ConstraintField>(sys, a), sys.dim(), VarSet{true, true, false},
          "phi" + std::to_string(a + 1)};
}

inline Vec legendre_flat(const MechanicalSystem& sys, const Vec& q, const Vec& v) { return sys.metric_at(q) * v; }

inline Vec legendre_sharp(const MechanicalSystem& sys, const Vec& q, const Vec& p) {
  const Mat l = linalg::cholesky<double>(sys.metric_at(q), ErrorKind::NotSPD);
  return linalg::cholesky_solve<double>(l, p);
}

/// Phi(q) g(q)^-1 p
inline Vec constraint_residual(const MechanicalSystem& sys, const PhasePoint& x) {
  if (sys.num_constraints() == 0) return Vec::Zero(0);
  return sys.constraints_at(x.q) * legendre_sharp(sys, x.q, x.p);
}

inline double constraint_violation(const MechanicalSystem& sys, const PhasePoint& x) {
  const Vec r = constraint_residual(sys, x);
  return r.size() == 0 ? 0.0 : r.lpNorm<Eigen::Infinity>();
}

inline bool in_constraint_manifold(const MechanicalSystem& sys, const PhasePoint& x, double tol = kDefaultMembershipTol) {
  return constraint_violation(sys, x) <= tol;
}

// ---------------------------------------------------------------------------
// The projector gamma.

/// Matrix of gamma at q: P = I - Phi^T A^-1 Phi g^-1 with A = Phi g^-1 Phi^T,
/// so that (P p)_i = gamma^l_i p_l. Only the q block of `x` is read.
template <typename S>
MatrixX<S> projector_matrix(const MechanicalSystem& sys, std::span<const S> x) {
  const int n = sys.dim();
  MatrixX<S> p = MatrixX<S>::Identity(n, n);
  if (sys.num_constraints() == 0) return p;
  const MatrixX<S> phi = sys.constraint_matrix<S>(x);
  const MatrixX<S> phi_t = phi.transpose();
  const MatrixX<S> lg = linalg::cholesky<S>(sys.metric<S>(x), ErrorKind::NotSPD);
  const MatrixX<S> ginv_phi_t = linalg::cholesky_solve<S>(lg, phi_t);  // g^-1 Phi^T
  const MatrixX<S> a = linalg::multiply<S>(phi, ginv_phi_t);
  const MatrixX<S> la = linalg::cholesky<S>(a, ErrorKind::RankDeficient);
  const MatrixX<S> b = linalg::cholesky_solve<S>(la, MatrixX<S>(ginv_phi_t.transpose()));  // A^-1 Phi g^-1
  p -= linalg::multiply<S>(phi_t, b);
  return p;
}

/// Matrix of gamma at q with its q-derivatives: dP[j] = dP/dq^j.
struct ProjectorAtQ {
  Mat P;
  std::vector<Mat> dP;
};

enum class DerivativeMethod { Dual, CentralDifference };

inline ProjectorAtQ projector(const MechanicalSystem& sys, const Vec& q,
                              DerivativeMethod method = DerivativeMethod::Dual, double fd_step = 1e-6) {
  const int n = sys.dim();
  if (q.size() != n) throw Error(ErrorKind::DimensionMismatch, "configuration has wrong dimension");
  ProjectorAtQ out;
  if (method == DerivativeMethod::Dual) {
    std::vector<Dual> xs;
    for (int i = 0; i < n; ++i) xs.push_back(Dual::variable(q[i], static_cast<std::size_t>(i), static_cast<std::size_t>(n)));
    const MatrixX<Dual> pd = projector_matrix<Dual>(sys, std::span<const Dual>(xs));
    out.P = linalg::values(pd);
    for (int j = 0; j < n; ++j) out.dP.push_back(linalg::derivatives(pd, j));
    return out;
  }
  auto at = [&](const Vec& qq) {
    return projector_matrix<double>(sys, std::span<const double>(qq.data(), static_cast<std::size_t>(n)));
  };
  out.P = at(q);
  for (int j = 0; j < n; ++j) {
    Vec plus = q, minus = q;
    plus[j] += fd_step;
    minus[j] -= fd_step;
    out.dP.push_back((at(plus) - at(minus)) / (2.0 * fd_step));
  }
  return out;
}

/// gamma(q, p, z) = (q, P(q) p, z).
inline PhasePoint project_point(const MechanicalSystem& sys, const PhasePoint& x) {
  const Mat p = projector_matrix<double>(sys, std::span<const double>(x.q.data(), static_cast<std::size_t>(x.dim())));
  return {x.q, p * x.p, x.z};
}

/// Draw a point of M x R: q from the box, p = P(q) p0 with p0 and z uniform in [-1, 1].
template <typename Rng>
PhasePoint sample_on_constraint(const MechanicalSystem& sys, Rng& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vec q = sys.sample_q(rng);
  Vec p0(sys.dim());
  for (int i = 0; i < sys.dim(); ++i) p0[i] = unit(rng);
  const double z = unit(rng);
  return project_point(sys, PhasePoint(std::move(q), std::move(p0), z));
}

/// Draw an unconstrained point of T*Q x R.
template <typename Rng>
PhasePoint sample_point(const MechanicalSystem& sys, Rng& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vec q = sys.sample_q(rng);
  Vec p(sys.dim());
  for (int i = 0; i < sys.dim(); ++i) p[i] = unit(rng);
  const double z = unit(rng);
  return {std::move(q), std::move(p), z};
}

}  // namespace edenmech
