#pragma once

// Sampled verification of the contact / nonholonomic identities.
//
// Every property draws its own points from a generator seeded with
// (seed, property index), so results do not depend on which other
// properties run. Residuals are absolute max-norms.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "edenmech/config.hpp"
#include "edenmech/contact.hpp"
#include "edenmech/eden.hpp"
#include "edenmech/mech_system.hpp"
#include "edenmech/nh_dynamics.hpp"

namespace edenmech {

struct PropertyResult {
  std::string property_id;
  std::string description;
  std::string paper_anchor;
  int samples = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::string system;
  std::uint64_t seed = 0;
  int samples = 0;
  std::vector<PropertyResult> properties;
  bool pass = false;
};

/// Supplies P(q) and dP/dq for the projector checks; swapped out by negative
/// controls.
using ProjectorFn = std::function<ProjectorAtQ(const MechanicalSystem&, const Vec&)>;

struct VerifyOptions {
  int samples = 200;
  std::uint64_t seed = 42;
  int random_observables = 10;
  std::map<std::string, double> tolerance_overrides;  // keyed by property id
  std::vector<std::string> mechanical_observables;
  ProjectorFn projector_under_test;                   // default: the system's gamma
};

/// A projector scaled by `factor`; not idempotent unless factor is 0 or 1.
inline ProjectorFn corrupted_projector(double factor) {
  return [factor](const MechanicalSystem& sys, const Vec& q) {
    ProjectorAtQ p = projector(sys, q);
    p.P *= factor;
    for (auto& d : p.dP) d *= factor;
    return p;
  };
}

/// Random polynomial of degree <= `degree` in the allowed coordinates,
/// rendered as source text so it goes through the parser.
template <typename Rng>
std::string random_polynomial(Rng& rng, int n, VarSet vars, int terms = 5, int degree = 3) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) {
    if (vars.q) names.push_back("q" + std::to_string(i));
    if (vars.p) names.push_back("p" + std::to_string(i));
  }
  if (vars.z) names.push_back("z");
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(names.size()) - 1);
  std::uniform_int_distribution<int> deg(0, degree);
  std::string out = detail::format_double(coeff(rng));
  for (int t = 0; t < terms; ++t) {
    const double c = coeff(rng);
    out += " + (" + detail::format_double(c) + ")";
    const int d = deg(rng);
    for (int k = 0; k < d; ++k) out += "*" + names[static_cast<std::size_t>(pick(rng))];
  }
  return out;
}

namespace detail {

struct Accumulator {
  int samples = 0;
  double max_residual = 0.0;
  void add(double r) {
    // NaN must not hide behind max()
    if (std::isnan(r)) r = std::numeric_limits<double>::infinity();
    max_residual = std::max(max_residual, r);
  }
};

inline double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }
inline double inf_norm(const Mat& m) { return m.size() == 0 ? 0.0 : m.lpNorm<Eigen::Infinity>(); }

/// Distance of v from the column span of b (least squares).
inline double span_residual(const Mat& b, const Vec& v) {
  if (b.cols() == 0) return inf_norm(v);
  const Vec coef = b.colPivHouseholderQr().solve(v);
  return inf_norm(Vec(b * coef - v));
}

class Runner {
 public:
  Runner(const MechanicalSystem& sys, const VerifyOptions& opts)
      : sys_(sys), opts_(opts), h_(hamiltonian(sys)), n_(sys.dim()), k_(sys.num_constraints()) {}

  VerifyReport run() {
    VerifyReport report;
    report.system = sys_.name();
    report.seed = opts_.seed;
    report.samples = opts_.samples;
    add(report, "P1", "sharp(flat(v)) = v, flat(sharp(a)) = a, closed-form sharp = LU sharp", "v -> i_v d(eta) + eta(v) eta is invertible", 1e-12, &Runner::isomorphism);
    add(report, "P2", "flat(R) = eta, eta(R) = 1, i_R d(eta) = 0", "R = d/dz is the Reeb field of eta = dz - p dq", 1e-12, &Runner::reeb_checks);
    add(report, "P3", "flat(X_H) - dH + (R(H) + H) eta = 0 and eta(X_H) = -H", "flat(X_H) = dH - (R(H) + H) eta", 1e-9, &Runner::defining_equation);
    add(report, "P4", "X_H(f) = {H, f} - f R(H) for random polynomial f", "the contact bracket gives the evolution of observables", 1e-9, &Runner::evolution_law);
    add(report, "P5", "X_H(H) = -H dH/dz", "energy dissipation along X_H", 1e-9, &Runner::dissipation);
    add(report, "P6", "{f, g} + {g, f} = 0; sharp-route bracket = coordinate bracket", "{f,g} = -d(eta)(sharp df, sharp dg) - f R(g) + g R(f)", 1e-9, &Runner::antisymmetry);
    add(report, "P7", "P^2 = P, Phi g^-1 P = 0, P Phi^T = 0, P g symmetric", "gamma projects T*Q = M + ann(D) onto M", 1e-10, &Runner::projector_properties);
    add(report, "P8", "on M: Phi H_p = 0, P^T g^-1 p = g^-1 p, H_p^T (dP/dq^i) p = 0, d(H o gamma) = dH", "d(H o gamma) = dH on M x R", 1e-8, &Runner::hamiltonian_projection);
    add(report, "P9", "multiplier field = T(gamma) X_H on M", "T(gamma)(X_H) = X_{H,M}", 1e-8, &Runner::two_routes);
    add(report, "P10", "X_{H,M}(phi^a) = 0, X_{H,M}(H) = -H H_z, flat(X_{H,M}) - dH + (H + R(H)) eta in span{Phi^a dq}", "X_{H,M} is tangent to M x R and solves the constrained Herglotz equations", 1e-8, &Runner::tangency);
    add(report, "P11", "X_H = X_{H o gamma} on M", "X_H|M = X_{H o gamma}|M", 1e-8, &Runner::composed_field);
    add(report, "P12", "{f, phi^a h}_E = 0 for random f, h", "functions vanishing on M x R are Casimirs of the Eden bracket", 1e-8, &Runner::casimir);
    add(report, "P13", "X_{H,M}(f) = X_H(f o gamma) = {H, f}_E - f R(H); {H, f}_E = {H, f o gamma}", "constrained evolution of f equals free evolution of f o gamma", 1e-8, &Runner::eden_evolution);
    add(report, "P14", "for Phi f_p = Phi g_p = 0: X_{H,M}(f) = X_H(f), {f, g}_E = {f, g}, d(f o gamma) = df", "the dynamics of mechanical observables remain unconstrained", 1e-8, &Runner::mechanical_subspace);
    report.pass = true;
    for (const auto& p : report.properties) report.pass = report.pass && p.pass;
    return report;
  }

 private:
  using Check = Accumulator (Runner::*)(std::mt19937_64&);

  void add(VerifyReport& report, const std::string& id, const std::string& description, const std::string& anchor,
           double tolerance, Check check) {
    if (auto it = opts_.tolerance_overrides.find(id); it != opts_.tolerance_overrides.end()) tolerance = it->second;
    const auto index = static_cast<std::uint64_t>(std::stoi(id.substr(1)));
    std::seed_seq seq{static_cast<std::uint32_t>(opts_.seed), static_cast<std::uint32_t>(opts_.seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(seq);
    const Accumulator acc = (this->*check)(rng);
    report.properties.push_back({id, description, anchor, acc.samples, acc.max_residual, tolerance,
                                 acc.max_residual < tolerance});
  }

  std::vector<Observable> random_observables(std::mt19937_64& rng, VarSet vars) const {
    std::vector<Observable> out;
    for (int i = 0; i < opts_.random_observables; ++i) {
      out.push_back(Observable::parse(random_polynomial(rng, n_, vars), n_));
    }
    return out;
  }

  Vec unit_vector(std::mt19937_64& rng, Eigen::Index size) const {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec v(size);
    for (Eigen::Index i = 0; i < size; ++i) v[i] = u(rng);
    return v;
  }

  Accumulator isomorphism(std::mt19937_64& rng) {
    Accumulator acc;
    for (int s = 0; s < opts_.samples; ++s) {
      const PhasePoint x = sample_point(sys_, rng);
      const TangentVector v = TangentVector::unpack(unit_vector(rng, 2 * n_ + 1));
      const CotangentVector a = CotangentVector::unpack(unit_vector(rng, 2 * n_ + 1));
      acc.add(max_abs(sharp(x, flat(x, v)) - v));
      acc.add(max_abs(flat(x, sharp(x, a)) - a));
      acc.add(max_abs(sharp_lu(x, a) - sharp(x, a)));
      ++acc.samples;
    }
    return acc;
  }

  Accumulator reeb_checks(std::mt19937_64& rng) {
    Accumulator acc;
    const TangentVector r = reeb(n_);
    for (int s = 0; s < opts_.samples; ++s) {
      const PhasePoint x = sample_point(sys_, rng);
      acc.add(max_abs(flat(x, r) - eta_at(x)));
      acc.add(std::abs(eta_at(x)(r) - 1.0));
      acc.add(max_abs(contract_d_eta(r)));
      ++acc.samples;
    }
    return acc;
  }

  Accumulator defining_equation(std::mt19937_64& rng) {
    Accumulator acc;
    for (int s = 0; s < opts_.samples; ++s) {
      const PhasePoint x = sample_point(sys_, rng);
      const Jet jh = h_.jet(x);
      const TangentVector xh = hamiltonian_field(x, jh);
      acc.add(max_abs(defining_residual(x, jh, xh)));
      acc.add(std::abs(eta_at(x)(xh) + jh.value));
      ++acc.samples;
    }
    return acc;
  }

  Accumulator evolution_law(std::mt19937_64& rng) {
    Accumulator acc;
    const auto fs = random_observables(rng, VarSet::all());
    for (int s = 0; s < opts_.samples; ++s) {
      const PhasePoint x = sample_point(sys_, rng);
      const Jet jh = h_.jet(x);
      const TangentVector xh = hamiltonian_field(x, jh);
      for (const auto& f : fs) {
        const Jet jf = f.jet(x);
        acc.add(std::abs(jf.differential(xh) - bracket_evolution(x, jh, jf)));
      }
      ++acc.samples;
    }
    return acc;
  }

  Accumulator dissipation(std::mt19937_64& rng) {
    Accumulator acc;
    for (int s = 0; s < opts_.samples; ++s) {
      const PhasePoint x = sample_point(sys_, rng);
      const Jet jh = h_.jet(x);
      acc.add(std::abs(jh.differential(hamiltonian_field(x, jh)) + jh.value * jh.differential.a_z));
      ++acc.samples;
    }
    return acc;
  }

  Accumulator antisymmetry(std::mt19937_64& rng) {
    Accumulator acc;
    const auto fs = random_observables(rng, VarSet::all());
    for (int s = 0; s < opts_.samples; ++s) {
      const PhasePoint x = sample_point(sys_, rng);
      for (std::size_t i = 0; i < fs.size(); ++i) {
        const Jet jf = fs[i].jet(x);
        const Jet jg = fs[(i + 1) % fs.size()].jet(x);
        acc.add(std::abs(contact_bracket(x, jf, jg) + contact_bracket(x, jg, jf)));
        acc.add(std::abs(contact_bracket(x, jf, jf)));
        acc.add(std::abs(contact_bracket(x, jf, jg) - contact_bracket_coordinates(x, jf, jg)));
      }
      ++acc.samples;
    }
    return acc;
  }

  Accumulator projector_properties(std::mt19937_64& rng) {
    Accumulator acc;
    const ProjectorFn proj = opts_.projector_under_test
                                 ? opts_.projector_under_test
                                 : ProjectorFn([](const MechanicalSystem& s, const Vec& q) { return projector(s, q); });
    for (int s = 0; s < opts_.samples; ++s) {
      const Vec q = sys_.sample_q(rng);
      const Mat p = proj(sys_, q).P;
      const Mat g = sys_.metric_at(q);
      acc.add(inf_norm(Mat(p * p - p)));
      if (k_ > 0) {
        const Mat phi = sys_.constraints_at(q);
        const Mat phi_ginv = phi * g.llt().solve(Mat::Identity(n_, n_));
        acc.add(inf_norm(Mat(phi_ginv * p)));
        acc.add(inf_norm(Mat(p * phi.transpose())));
      }
      const Mat pg = p * g;
      acc.add(inf_norm(Mat(pg - pg.transpose())));
      ++acc.samples;
    }
    return acc;
  }

  Accumulator hamiltonian_projection(std::mt19937_64& rng) {
    Accumulator acc;
    const Observable hg = compose_with_gamma(sys_, h_);
    for (int s = 0; s < opts_.samples; ++s) {
      const PhasePoint x = sample_on_constraint(sys_, rng);
      const Jet jh = h_.jet(x);
      const Vec& hp = jh.differential.a_p;
      const ProjectorAtQ proj = projector(sys_, x.q);
      if (k_ > 0) acc.add(inf_norm(Vec(sys_.constraints_at(x.q) * hp)));
      const Vec ginv_p = legendre_sharp(sys_, x.q, x.p);
      acc.add(inf_norm(Vec(proj.P.transpose() * ginv_p - ginv_p)));
      for (int i = 0; i < n_; ++i) acc.add(std::abs(hp.dot(proj.dP[static_cast<std::size_t>(i)] * x.p)));
      acc.add(max_abs(hg.differential(x) - jh.differential));
      ++acc.samples;
    }
    return acc;
  }

  Accumulator two_routes(std::mt19937_64& rng) {
    Accumulator acc;
    for (int s = 0; s < opts_.samples; ++s) {
      const PhasePoint x = sample_on_constraint(sys_, rng);
      acc.add(max_abs(constrained_field_multipliers(sys_, h_, x) - constrained_field_pushforward(sys_, h_, x)));
      ++acc.samples;
    }
    return acc;
  }

  Accumulator tangency(std::mt19937_64& rng) {
    Accumulator acc;
    std::vector<Observable> phis;
    for (int a = 0; a < k_; ++a) phis.push_back(constraint_function(sys_, a));
    for (int s = 0; s < opts_.samples; ++s) {
      const PhasePoint x = sample_on_constraint(sys_, rng);
      const Jet jh = h_.jet(x);
      const TangentVector xm = constrained_field_multipliers(sys_, h_, x);
      for (const auto& phi : phis) acc.add(std::abs(lie_derivative(phi, x, xm)));
      acc.add(std::abs(jh.differential(xm) + jh.value * jh.differential.a_z));
      const CotangentVector defect = defining_residual(x, jh, xm);
      acc.add(inf_norm(defect.a_p));
      acc.add(std::abs(defect.a_z));
      const Mat basis = k_ > 0 ? Mat(sys_.constraints_at(x.q).transpose()) : Mat(n_, 0);
      acc.add(span_residual(basis, defect.a_q));
      ++acc.samples;
    }
    return acc;
  }

  Accumulator composed_field(std::mt19937_64& rng) {
    Accumulator acc;
    const Observable hg = compose_with_gamma(sys_, h_);
    for (int s = 0; s < opts_.samples; ++s) {
      const PhasePoint x = sample_on_constraint(sys_, rng);
      acc.add(max_abs(hamiltonian_field(h_, x) - hamiltonian_field(hg, x)));
      ++acc.samples;
    }
    return acc;
  }

  Accumulator casimir(std::mt19937_64& rng) {
    Accumulator acc;
    if (k_ == 0) return acc;
    const auto fs = random_observables(rng, VarSet::all());
    const auto hs = random_observables(rng, VarSet::all());
    // Only the zero constant: {F, c} = c F_z for the Jacobi bracket.
    std::vector<Observable> gs;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const int a = static_cast<int>(i % static_cast<std::size_t>(k_));
      gs.push_back(constraint_function(sys_, a) * hs[i]);
    }
    for (int s = 0; s < opts_.samples; ++s) {
      const PhasePoint x = sample_on_constraint(sys_, rng);
      for (std::size_t i = 0; i < fs.size(); ++i) acc.add(std::abs(eden_bracket(sys_, fs[i], gs[i], x)));
      ++acc.samples;
    }
    return acc;
  }

  Accumulator eden_evolution(std::mt19937_64& rng) {
    Accumulator acc;
    const auto fs = random_observables(rng, VarSet::all());
    std::vector<Observable> composed;
    for (const auto& f : fs) composed.push_back(compose_with_gamma(sys_, f));
    for (int s = 0; s < opts_.samples; ++s) {
      const PhasePoint x = sample_on_constraint(sys_, rng);
      const Jet jh = h_.jet(x);
      const TangentVector xh = hamiltonian_field(x, jh);
      const TangentVector xm = constrained_field_multipliers(sys_, h_, x);
      for (std::size_t i = 0; i < fs.size(); ++i) {
        const Jet jf = fs[i].jet(x);
        const Jet jfg = composed[i].jet(x);
        const double constrained = jf.differential(xm);
        const double eden = eden_bracket(sys_, h_, fs[i], x);
        acc.add(std::abs(constrained - jfg.differential(xh)));
        acc.add(std::abs(eden - contact_bracket(x, jh, jfg)));
        acc.add(std::abs(constrained - (eden - jf.value * jh.differential.a_z)));
      }
      ++acc.samples;
    }
    return acc;
  }

  Accumulator mechanical_subspace(std::mt19937_64& rng) {
    Accumulator acc;
    auto fs = random_observables(rng, VarSet::q_only());
    for (const auto& src : opts_.mechanical_observables) fs.push_back(Observable::parse(src, n_, sys_.params()));
    std::vector<PhasePoint> points;
    for (int s = 0; s < opts_.samples; ++s) points.push_back(sample_on_constraint(sys_, rng));
    // Premise: every observable used must satisfy the mechanical condition.
    for (const auto& f : fs) acc.add(mechanical_condition(sys_, f, points).residual);
    std::vector<Observable> composed;
    for (const auto& f : fs) composed.push_back(compose_with_gamma(sys_, f));
    for (const auto& x : points) {
      const TangentVector xh = hamiltonian_field(h_, x);
      const TangentVector xm = constrained_field_multipliers(sys_, h_, x);
      for (std::size_t i = 0; i < fs.size(); ++i) {
        const Jet jf = fs[i].jet(x);
        const Jet jg = fs[(i + 1) % fs.size()].jet(x);
        acc.add(std::abs(jf.differential(xm) - jf.differential(xh)));
        acc.add(std::abs(eden_bracket(sys_, fs[i], fs[(i + 1) % fs.size()], x) - contact_bracket(x, jf, jg)));
        acc.add(max_abs(composed[i].differential(x) - jf.differential));
      }
      ++acc.samples;
    }
    return acc;
  }

  const MechanicalSystem& sys_;
  const VerifyOptions& opts_;
  Observable h_;
  int n_;
  int k_;
};

}  // namespace detail

inline VerifyReport run_verify(const MechanicalSystem& sys, const VerifyOptions& opts = {}) {
  return detail::Runner(sys, opts).run();
}

inline nlohmann::json to_json(const VerifyReport& report) {
  nlohmann::json props = nlohmann::json::array();
  for (const auto& p : report.properties) {
    props.push_back({{"property_id", p.property_id},
                     {"description", p.description},
                     {"paper_anchor", p.paper_anchor},
                     {"samples", p.samples},
                     {"max_residual", std::isfinite(p.max_residual) ? nlohmann::json(p.max_residual) : nlohmann::json("inf")},
                     {"tolerance", p.tolerance},
                     {"pass", p.pass}});
  }
  return {{"system", report.system},
          {"seed", report.seed},
          {"samples", report.samples},
          {"properties", props},
          {"pass", report.pass}};
}

}  // namespace edenmech
