#pragma once

// The contact Eden bracket {f, g}_E = {f o gamma, g o gamma} on M x R,
// the mechanical condition on observables, and constrained evolution.

#include <algorithm>
#include <vector>

#include "edenmech/contact.hpp"
#include "edenmech/mech_system.hpp"
#include "edenmech/nh_dynamics.hpp"

namespace edenmech {

namespace detail {

class ComposedField final : public GenericField<ComposedField> {
 public:
  ComposedField(MechanicalSystem sys, Observable base) : sys_(std::move(sys)), base_(std::move(base)) {}
  template <typename S>
  S evaluate(std::span<const S> x) const {
    const int n = sys_.dim();
    const MatrixX<S> proj = projector_matrix<S>(sys_, x);
    std::vector<S> image(x.begin(), x.end());
    for (int i = 0; i < n; ++i) {
      S s(0.0);
      for (int l = 0; l < n; ++l) s += proj(i, l) * x[static_cast<std::size_t>(n + l)];
      image[static_cast<std::size_t>(n + i)] = s;
    }
    return base_.impl().eval(std::span<const S>(image));
  }

 private:
  MechanicalSystem sys_;
  Observable base_;
};

}  // namespace detail

/// f o Gamma with Gamma(q, p, z) = (q, P(q) p, z). Differentials include the
/// q-dependence of P.
inline Observable compose_with_gamma(const MechanicalSystem& sys, const Observable& f) {
  if (f.dim() != sys.dim()) throw Error(ErrorKind::DimensionMismatch, "observable and system dimensions differ");
  VarSet vars = f.vars();
  if (vars.p) vars.q = true;
  return {std::make_shared<detail::ComposedField>(sys, f), sys.dim(), vars, "(" + f.label() + ") o gamma"};
}

inline double eden_bracket(const MechanicalSystem& sys, const Observable& f, const Observable& g, const PhasePoint& x,
                           double tol = kDefaultMembershipTol) {
  detail::require_on_constraint(sys, x, tol);
  return contact_bracket(compose_with_gamma(sys, f), compose_with_gamma(sys, g), x);
}

struct MechanicalSubspaceTag {
  bool verdict = false;
  double residual = 0.0;  // max over samples of |Phi^a_i df/dp_i|
};

inline double mechanical_residual(const MechanicalSystem& sys, const Observable& f, const PhasePoint& x) {
  if (sys.num_constraints() == 0) return 0.0;
  const Vec r = sys.constraints_at(x.q) * f.differential(x).a_p;
  return r.lpNorm<Eigen::Infinity>();
}

/// Checks Phi^a_i df/dp_i = 0 at the given points of M x R.
inline MechanicalSubspaceTag mechanical_condition(const MechanicalSystem& sys, const Observable& f,
                                                  const std::vector<PhasePoint>& samples, double tol = 1e-8) {
  MechanicalSubspaceTag tag;
  for (const auto& x : samples) tag.residual = std::max(tag.residual, mechanical_residual(sys, f, x));
  tag.verdict = tag.residual < tol;
  return tag;
}

/// X_{H,M}(f) = df(X_{H,M}) at a point of M x R.
inline double constrained_evolution(const MechanicalSystem& sys, const Observable& h, const Observable& f,
                                    const PhasePoint& x, double tol = kDefaultMembershipTol) {
  return f.differential(x)(constrained_field_multipliers(sys, h, x, tol));
}

}  // namespace edenmech
