#include <gtest/gtest.h>

#include <random>

#include "edenmech/config.hpp"
#include "edenmech/eden.hpp"
#include "edenmech/verify.hpp"
#include "oracles.hpp"

using namespace edenmech;

namespace {

std::vector<Observable> random_fields(std::mt19937_64& rng, int n, VarSet vars, int count) {
  std::vector<Observable> out;
  for (int i = 0; i < count; ++i) out.push_back(Observable::parse(random_polynomial(rng, n, vars), n));
  return out;
}

}  // namespace

TEST(ComposeWithGamma, ValueAndDifferential) {
  const MechanicalSystem sys = load_template("heisenberg").system;
  const Observable p3 = Observable::parse("p3", 3);
  const Observable composed = compose_with_gamma(sys, p3);
  // (P p)_3 = p3 - (p3 - q2 p1)/(1 + q2^2), which vanishes at q2 = 0
  const PhasePoint x{Vec::Zero(3), Vec{{1.0, 2.0, 3.0}}, 0.0};
  EXPECT_EQ(composed.value(x), 0.0);
  std::mt19937_64 rng(41);
  for (int s = 0; s < 50; ++s) {
    const PhasePoint y = sample_point(sys, rng);
    const Vec ad = composed.differential(y).pack();
    const Vec fd = oracle::fd_differential(composed, y).pack();
    EXPECT_LT((ad - fd).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(EdenBracket, AntisymmetricAndGuarded) {
  const MechanicalSystem sys = load_template("knife_edge").system;
  std::mt19937_64 rng(42);
  const auto fs = random_fields(rng, 3, VarSet::all(), 4);
  for (int s = 0; s < 50; ++s) {
    const PhasePoint x = sample_on_constraint(sys, rng);
    for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
      EXPECT_NEAR(eden_bracket(sys, fs[i], fs[i + 1], x), -eden_bracket(sys, fs[i + 1], fs[i], x), 1e-12);
    }
  }
  const PhasePoint off{Vec::Zero(3), Vec{{0.0, 1.0, 0.0}}, 0.0};
  try {
    eden_bracket(sys, fs[0], fs[1], off);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotOnConstraint);
  }
}

TEST(EdenBracket, ConstraintFunctionsAreCasimirs) {
  for (const char* name : {"heisenberg", "knife_edge"}) {
    const MechanicalSystem sys = load_template(name).system;
    std::mt19937_64 rng(43);
    const auto fs = random_fields(rng, 3, VarSet::all(), 10);
    const auto hs = random_fields(rng, 3, VarSet::all(), 10);
    const Observable phi = constraint_function(sys, 0);
    for (int s = 0; s < 100; ++s) {
      const PhasePoint x = sample_on_constraint(sys, rng);
      for (std::size_t i = 0; i < fs.size(); ++i) {
        EXPECT_LT(std::abs(eden_bracket(sys, fs[i], phi, x)), 1e-8);
        EXPECT_LT(std::abs(eden_bracket(sys, fs[i], phi * hs[i], x)), 1e-8);
      }
    }
  }
}

TEST(EdenBracket, NonzeroConstantIsNotACasimir) {
  // {F, c} = c dF/dz for the Jacobi bracket, so only the zero constant drops out.
  const MechanicalSystem sys = load_template("heisenberg").system;
  const Observable f = Observable::parse("z*q1 + p1", 3);
  const Observable c = Observable::constant(2.0, 3);
  std::mt19937_64 rng(44);
  for (int s = 0; s < 20; ++s) {
    const PhasePoint x = sample_on_constraint(sys, rng);
    EXPECT_NEAR(eden_bracket(sys, f, c, x), 2.0 * x.q[0], 1e-12);
  }
}

TEST(EdenBracket, GivesConstrainedEvolution) {
  for (const char* name : {"heisenberg", "knife_edge"}) {
    const MechanicalSystem sys = load_template(name).system;
    const Observable h = hamiltonian(sys);
    std::mt19937_64 rng(45);
    const auto fs = random_fields(rng, 3, VarSet::all(), 10);
    for (int s = 0; s < 100; ++s) {
      const PhasePoint x = sample_on_constraint(sys, rng);
      const double hz = h.differential(x).a_z;
      for (const auto& f : fs) {
        const double lhs = constrained_evolution(sys, h, f, x);
        const Observable fg = compose_with_gamma(sys, f);
        EXPECT_NEAR(lhs, fg.differential(x)(hamiltonian_field(h, x)), 1e-8);
        EXPECT_NEAR(lhs, eden_bracket(sys, h, f, x) - f.value(x) * hz, 1e-8);
        EXPECT_NEAR(eden_bracket(sys, h, f, x), contact_bracket(h, fg, x), 1e-8);
      }
    }
  }
}

TEST(MechanicalCondition, Verdicts) {
  const LoadedSystem ls = load_template("heisenberg");
  const MechanicalSystem& sys = ls.system;
  std::mt19937_64 rng(46);
  std::vector<PhasePoint> pts;
  for (int s = 0; s < 100; ++s) pts.push_back(sample_on_constraint(sys, rng));

  const MechanicalSubspaceTag good = mechanical_condition(sys, Observable::parse(ls.mechanical_observables[0], 3), pts);
  EXPECT_TRUE(good.verdict);
  EXPECT_LT(good.residual, 1e-14);
  EXPECT_TRUE(mechanical_condition(sys, Observable::parse("q1*q2 + sin(q3)", 3), pts).verdict);

  // Phi f_p = q2^2 + 1
  const MechanicalSubspaceTag bad = mechanical_condition(sys, Observable::parse("p3 - q2*p1", 3), pts);
  EXPECT_FALSE(bad.verdict);
  EXPECT_GE(bad.residual, 1.0);
}

TEST(MechanicalCondition, MechanicalObservablesEvolveFreely) {
  for (const char* name : {"heisenberg", "knife_edge"}) {
    const LoadedSystem ls = load_template(name);
    const MechanicalSystem& sys = ls.system;
    const Observable h = hamiltonian(sys);
    std::mt19937_64 rng(47);
    std::vector<Observable> fs = random_fields(rng, 3, VarSet::q_only(), 5);
    for (const auto& src : ls.mechanical_observables) fs.push_back(Observable::parse(src, 3));
    for (int s = 0; s < 100; ++s) {
      const PhasePoint x = sample_on_constraint(sys, rng);
      const TangentVector xh = hamiltonian_field(h, x);
      for (std::size_t i = 0; i < fs.size(); ++i) {
        const Observable& f = fs[i];
        const Observable& g = fs[(i + 1) % fs.size()];
        EXPECT_NEAR(constrained_evolution(sys, h, f, x), f.differential(x)(xh), 1e-8) << f.label();
        EXPECT_NEAR(eden_bracket(sys, f, g, x), contact_bracket(f, g, x), 1e-8);
      }
    }
  }
}
