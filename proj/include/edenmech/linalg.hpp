#pragma once

// Small dense routines written once for any scalar (double or Dual), so the
// same assembly code yields values and their exact q-derivatives.

#include <Eigen/Core>

#include "edenmech/dual.hpp"
#include "edenmech/errors.hpp"

namespace edenmech {

template <typename S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

namespace linalg {

/// Lower Cholesky factor of a symmetric matrix; throws `fail` if a pivot is
/// not positive.
template <typename S>
MatrixX<S> cholesky(const MatrixX<S>& a, ErrorKind fail) {
  const Eigen::Index n = a.rows();
  MatrixX<S> l = MatrixX<S>::Zero(n, n);
  // Relative pivot floor: a nearly singular matrix is reported, not factored.
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(value_of(a(i, i))));
  const double floor = 1e-13 * std::max(scale, 1e-300);
  for (Eigen::Index j = 0; j < n; ++j) {
    S d = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(value_of(d) > floor)) {
      throw Error(fail, "matrix is not positive definite (pivot " + std::to_string(value_of(d)) + ")");
    }
    using std::sqrt;
    l(j, j) = sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      S s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

/// Solve (L L^T) X = B given the lower factor L.
template <typename S>
MatrixX<S> cholesky_solve(const MatrixX<S>& l, const MatrixX<S>& b) {
  const Eigen::Index n = l.rows();
  MatrixX<S> x = b;
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      S s = x(i, c);
      for (Eigen::Index k = 0; k < i; ++k) s -= l(i, k) * x(k, c);
      x(i, c) = s / l(i, i);
    }
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      S s = x(i, c);
      for (Eigen::Index k = i + 1; k < n; ++k) s -= l(k, i) * x(k, c);
      x(i, c) = s / l(i, i);
    }
  }
  return x;
}

template <typename S>
MatrixX<S> multiply(const MatrixX<S>& a, const MatrixX<S>& b) {
  MatrixX<S> out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      S s(0.0);
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  }
  return out;
}

/// Values of a dual matrix.
inline Eigen::MatrixXd values(const MatrixX<Dual>& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j).value();
  return out;
}

/// Derivative of a dual matrix along seeded direction d.
inline Eigen::MatrixXd derivatives(const MatrixX<Dual>& m, Eigen::Index d) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j).derivative(d);
  return out;
}

}  // namespace linalg
}  // namespace edenmech
