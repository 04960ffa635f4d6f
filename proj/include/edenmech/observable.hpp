#pragma once

// Observables: scalar fields on T*Q x R that can be evaluated on plain
// doubles and on dual numbers. Dual evaluation is what gives every field in
// the library an exact first differential, including fields built by
// composition (f o gamma, products, the Hamiltonian).

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edenmech/dual.hpp"
#include "edenmech/expr.hpp"
#include "edenmech/phase.hpp"

namespace edenmech {

class ObservableImpl {
 public:
  virtual ~ObservableImpl() = default;
  virtual double eval(std::span<const double> x) const = 0;
  virtual Dual eval(std::span<const Dual> x) const = 0;
};

/// Implements both evaluation paths from one `evaluate<S>` template.
template <typename Derived>
class GenericField : public ObservableImpl {
 public:
  double eval(std::span<const double> x) const final {
    return static_cast<const Derived&>(*this).template evaluate<double>(x);
  }
  Dual eval(std::span<const Dual> x) const final {
    return static_cast<const Derived&>(*this).template evaluate<Dual>(x);
  }
};

class ExprField final : public GenericField<ExprField> {
 public:
  explicit ExprField(Expr e) : expr_(std::move(e)) {}
  template <typename S>
  S evaluate(std::span<const S> x) const {
    return expr_.evaluate<S>(x);
  }
  const Expr& expr() const { return expr_; }

 private:
  Expr expr_;
};

/// Value plus full differential at a point.
struct Jet {
  double value = 0.0;
  CotangentVector differential;
};

class Observable {
 public:
  Observable(std::shared_ptr<const ObservableImpl> impl, int n, VarSet vars, std::string label = {})
      : impl_(std::move(impl)), n_(n), vars_(vars), label_(std::move(label)) {}

  static Observable from_expr(const Expr& e, int n, VarSet allowed = VarSet::all()) {
    const VarSet used = e.vars_used(n);
    if (!used.subset_of(allowed)) {
      throw Error(ErrorKind::MechanicalTypeViolation, "expression uses variables outside its allowed set");
    }
    if (e.max_index() > 2 * n) throw Error(ErrorKind::BadIndex, "expression refers past dimension " + std::to_string(n));
    return Observable(std::make_shared<ExprField>(e), n, used, to_string(e, n));
  }

  /// Parse `source` and wrap it. `allowed` is enforced by the parser.
  static Observable parse(std::string_view source, int n, const std::map<std::string, double>& params = {},
                          VarSet allowed = VarSet::all()) {
    return from_expr(parse_expr(source, n, params, allowed), n, allowed);
  }

  static Observable constant(double c, int n) { return from_expr(Expr::literal(c), n); }

  /// Coordinate function: flat index into (q, p, z).
  static Observable coordinate(int index, int n) { return from_expr(Expr::variable(index, n), n); }

  int dim() const { return n_; }
  VarSet vars() const { return vars_; }
  const std::string& label() const { return label_; }
  const ObservableImpl& impl() const { return *impl_; }

  double value(std::span<const double> x) const { return impl_->eval(x); }
  double value(const PhasePoint& x) const {
    check_dim(x);
    const Vec flat = x.pack();
    return impl_->eval(std::span<const double>(flat.data(), static_cast<std::size_t>(flat.size())));
  }

  /// Evaluate on dual inputs (chain rule through whatever they are seeded with).
  Dual apply(std::span<const Dual> x) const { return impl_->eval(x); }

  Jet jet(const PhasePoint& x) const {
    check_dim(x);
    const Vec flat = x.pack();
    const auto directions = static_cast<std::size_t>(flat.size());
    std::vector<Dual> seeded;
    seeded.reserve(directions);
    for (std::size_t i = 0; i < directions; ++i) seeded.push_back(Dual::variable(flat[static_cast<Eigen::Index>(i)], i, directions));
    const Dual r = impl_->eval(std::span<const Dual>(seeded));
    return {r.value(), CotangentVector::unpack(r.gradient(flat.size()))};
  }

  CotangentVector differential(const PhasePoint& x) const { return jet(x).differential; }

 private:
  void check_dim(const PhasePoint& x) const {
    if (x.dim() != n_) throw Error(ErrorKind::DimensionMismatch, "point dimension does not match observable");
  }

  std::shared_ptr<const ObservableImpl> impl_;
  int n_;
  VarSet vars_;
  std::string label_;
};

namespace detail {

class SumField final : public GenericField<SumField> {
 public:
  SumField(Observable a, Observable b, double sign) : a_(std::move(a)), b_(std::move(b)), sign_(sign) {}
  template <typename S>
  S evaluate(std::span<const S> x) const {
    return a_.impl().eval(x) + S(sign_) * b_.impl().eval(x);
  }

 private:
  Observable a_, b_;
  double sign_;
};

class ProductField final : public GenericField<ProductField> {
 public:
  ProductField(Observable a, Observable b) : a_(std::move(a)), b_(std::move(b)) {}
  template <typename S>
  S evaluate(std::span<const S> x) const {
    return a_.impl().eval(x) * b_.impl().eval(x);
  }

 private:
  Observable a_, b_;
};

inline int common_dim(const Observable& a, const Observable& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::DimensionMismatch, "observables live in different dimensions");
  return a.dim();
}

}  // namespace detail

inline Observable operator+(const Observable& a, const Observable& b) {
  const int n = detail::common_dim(a, b);
  return {std::make_shared<detail::SumField>(a, b, 1.0), n, a.vars() | b.vars(), "(" + a.label() + " + " + b.label() + ")"};
}
inline Observable operator-(const Observable& a, const Observable& b) {
  const int n = detail::common_dim(a, b);
  return {std::make_shared<detail::SumField>(a, b, -1.0), n, a.vars() | b.vars(), "(" + a.label() + " - " + b.label() + ")"};
}
inline Observable operator*(const Observable& a, const Observable& b) {
  const int n = detail::common_dim(a, b);
  return {std::make_shared<detail::ProductField>(a, b), n, a.vars() | b.vars(), "(" + a.label() + " * " + b.label() + ")"};
}

}  // namespace edenmech
