#pragma once

// Test-only oracles. Nothing here goes through the dual-number path, so it
// can be used to check it.

#include <cmath>
#include <random>

#include "edenmech/observable.hpp"
#include "edenmech/phase.hpp"

namespace edenmech::oracle {

/// Central differences of f at x with per-coordinate step h = scale (1 + |x_i|).
inline CotangentVector fd_differential(const Observable& f, const PhasePoint& x, double scale = 1e-6) {
  const Vec flat = x.pack();
  Vec grad(flat.size());
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    const double h = scale * (1.0 + std::abs(flat[i]));
    Vec plus = flat, minus = flat;
    plus[i] += h;
    minus[i] -= h;
    grad[i] = (f.value(PhasePoint::unpack(plus)) - f.value(PhasePoint::unpack(minus))) / (2.0 * h);
  }
  return CotangentVector::unpack(grad);
}

inline Vec uniform_vec(std::mt19937_64& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline PhasePoint uniform_point(std::mt19937_64& rng, int n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec q = uniform_vec(rng, n, lo, hi);
  Vec p = uniform_vec(rng, n, lo, hi);
  return {q, p, u(rng)};
}

}  // namespace edenmech::oracle
