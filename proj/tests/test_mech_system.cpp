#include <gtest/gtest.h>

#include <Eigen/LU>
#include <random>

#include "edenmech/config.hpp"
#include "edenmech/mech_system.hpp"
#include "oracles.hpp"

using namespace edenmech;

namespace {

ErrorKind build_failure(const SystemConfig& cfg) {
  try {
    build_system(cfg);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected build_system to reject " << cfg.name;
  return ErrorKind::ConfigError;
}

SystemConfig custom(int n) {
  SystemConfig c;
  c.name = "custom";
  c.dimension = n;
  c.metric_kind = MetricKind::Identity;
  c.potential = "0";
  return c;
}

// P by the textbook formula with explicit inverses, independent of the
// Cholesky path.
Mat reference_projector(const MechanicalSystem& sys, const Vec& q) {
  const Mat g = sys.metric_at(q);
  const Mat phi = sys.constraints_at(q);
  const Mat ginv = g.inverse();
  if (phi.rows() == 0) return Mat::Identity(q.size(), q.size());
  return Mat::Identity(q.size(), q.size()) - phi.transpose() * (phi * ginv * phi.transpose()).inverse() * phi * ginv;
}

}  // namespace

TEST(BuildSystem, TemplatesLoad) {
  for (const auto& name : template_names()) {
    const LoadedSystem s = load_template(name);
    EXPECT_EQ(s.system.dim(), 3);
  }
  EXPECT_EQ(load_template("heisenberg").system.num_constraints(), 1);
  EXPECT_EQ(load_template("free_particle").system.num_constraints(), 0);
}

TEST(BuildSystem, RejectsBadData) {
  SystemConfig neg = custom(2);
  neg.metric_kind = MetricKind::Diagonal;
  neg.metric = {"1", "-1"};
  EXPECT_EQ(build_failure(neg), ErrorKind::NotSPD);

  SystemConfig asym = custom(2);
  asym.metric_kind = MetricKind::Full;
  asym.metric = {"2", "1", "0", "2"};
  EXPECT_EQ(build_failure(asym), ErrorKind::NotSPD);

  SystemConfig dependent = custom(3);
  dependent.constraints = {{"1", "0", "0"}, {"2", "0", "0"}};
  EXPECT_EQ(build_failure(dependent), ErrorKind::RankDeficient);

  SystemConfig too_many = custom(2);
  too_many.constraints = {{"1", "0"}, {"0", "1"}};  // k = n leaves no motion
  EXPECT_EQ(build_failure(too_many), ErrorKind::RankDeficient);

  SystemConfig momentum_metric = custom(2);
  momentum_metric.metric_kind = MetricKind::Diagonal;
  momentum_metric.metric = {"1 + p1^2", "1"};
  EXPECT_EQ(build_failure(momentum_metric), ErrorKind::MechanicalTypeViolation);

  SystemConfig momentum_potential = custom(2);
  momentum_potential.potential = "p2*z";
  EXPECT_EQ(build_failure(momentum_potential), ErrorKind::MechanicalTypeViolation);

  SystemConfig short_row = custom(3);
  short_row.constraints = {{"1", "0"}};
  EXPECT_EQ(build_failure(short_row), ErrorKind::ConfigError);
}

TEST(BuildSystem, ConstraintVanishingAtASampleIsRankDeficient) {
  SystemConfig c = custom(2);
  c.constraints = {{"q1", "0"}};
  c.sample_box = {{0.0, 0.0}, {-1.0, 1.0}};
  EXPECT_EQ(build_failure(c), ErrorKind::ConfigError);  // empty interval
  c.sample_box = {{-1e-12, 1e-12}, {-1.0, 1.0}};
  EXPECT_EQ(build_failure(c), ErrorKind::RankDeficient);
}

TEST(MechanicalSystem, HamiltonianAndLegendre) {
  const MechanicalSystem sys = load_template("knife_edge").system;
  const Observable h = hamiltonian(sys);
  const PhasePoint x{Vec{{0.0, 0.0, 0.3}}, Vec{{1.0, 2.0, 1.0}}, 2.0};
  // m = 1, J = 0.5, alpha = 0.5
  EXPECT_DOUBLE_EQ(h.value(x), 0.5 * (1.0 + 4.0 + 1.0 / 0.5) + 0.5 * 2.0);
  const Vec v{{0.3, -0.4, 2.0}};
  EXPECT_LT((legendre_sharp(sys, x.q, legendre_flat(sys, x.q, v)) - v).lpNorm<Eigen::Infinity>(), 1e-15);
  const Vec expect_v{{1.0, 2.0, 2.0}};
  EXPECT_LT((legendre_sharp(sys, x.q, x.p) - expect_v).lpNorm<Eigen::Infinity>(), 1e-15);
}

TEST(Projector, HeisenbergAxisAligned) {
  const MechanicalSystem sys = load_template("heisenberg").system;
  const Vec q = Vec::Zero(3);
  const Mat p = projector(sys, q).P;
  Mat expected = Mat::Identity(3, 3);
  expected(2, 2) = 0.0;
  EXPECT_EQ(p, expected);

  const PhasePoint x{q, Vec{{1.0, 2.0, 3.0}}, 0.5};
  const PhasePoint y = project_point(sys, x);
  EXPECT_EQ(y.p, (Vec{{1.0, 2.0, 0.0}}));
  EXPECT_EQ(y.z, 0.5);
  const PhasePoint again = project_point(sys, y);
  EXPECT_EQ(again.p, y.p);
}

TEST(Projector, HeisenbergClosedForm) {
  // Phi = (-q2, 0, 1), g = I: P = I - Phi^T Phi / (1 + q2^2).
  const MechanicalSystem sys = load_template("heisenberg").system;
  std::mt19937_64 rng(21);
  for (int s = 0; s < 100; ++s) {
    const Vec q = oracle::uniform_vec(rng, 3);
    const Vec phi{{-q[1], 0.0, 1.0}};
    const Mat expected = Mat::Identity(3, 3) - phi * phi.transpose() / (1.0 + q[1] * q[1]);
    EXPECT_LT((projector(sys, q).P - expected).lpNorm<Eigen::Infinity>(), 1e-15);
  }
}

TEST(Projector, DefiningPropertiesOnTemplatesAndRandomSystems) {
  SystemConfig twisted = custom(4);
  twisted.metric_kind = MetricKind::Full;
  twisted.metric = {"2 + sin(q1)", "0.3", "0", "0", "0.3", "2", "0.1*q2", "0", "0", "0.1*q2", "3", "0.2",
                    "0", "0", "0.2", "1 + q4^2"};
  twisted.constraints = {{"1", "q3", "0", "cos(q1)"}, {"0", "1", "q1", "-1"}};
  std::vector<MechanicalSystem> systems = {load_template("heisenberg").system, load_template("knife_edge").system,
                                           build_system(twisted)};
  std::mt19937_64 rng(22);
  for (const auto& sys : systems) {
    const int n = sys.dim();
    for (int s = 0; s < 100; ++s) {
      const Vec q = sys.sample_q(rng);
      const ProjectorAtQ pr = projector(sys, q);
      const Mat& p = pr.P;
      const Mat g = sys.metric_at(q);
      const Mat phi = sys.constraints_at(q);
      EXPECT_LT((p * p - p).lpNorm<Eigen::Infinity>(), 1e-10);
      EXPECT_LT((phi * g.inverse() * p).lpNorm<Eigen::Infinity>(), 1e-10);
      EXPECT_LT((p * phi.transpose()).lpNorm<Eigen::Infinity>(), 1e-10);
      EXPECT_LT((p * g - (p * g).transpose()).lpNorm<Eigen::Infinity>(), 1e-10);
      EXPECT_LT((p - reference_projector(sys, q)).lpNorm<Eigen::Infinity>(), 1e-12);
      EXPECT_NEAR(p.trace(), n - sys.num_constraints(), 1e-12);
    }
  }
}

TEST(Projector, DualDerivativeMatchesCentralDifference) {
  for (const char* name : {"heisenberg", "knife_edge"}) {
    const MechanicalSystem sys = load_template(name).system;
    std::mt19937_64 rng(23);
    for (int s = 0; s < 50; ++s) {
      const Vec q = sys.sample_q(rng);
      const ProjectorAtQ ad = projector(sys, q);
      const ProjectorAtQ fd = projector(sys, q, DerivativeMethod::CentralDifference);
      for (int j = 0; j < sys.dim(); ++j) {
        EXPECT_LT((ad.dP[static_cast<std::size_t>(j)] - fd.dP[static_cast<std::size_t>(j)]).lpNorm<Eigen::Infinity>(),
                  1e-8)
            << name << " j=" << j;
      }
    }
  }
}

TEST(Membership, SamplesLieOnConstraint) {
  const MechanicalSystem sys = load_template("knife_edge").system;
  std::mt19937_64 rng(24);
  for (int s = 0; s < 100; ++s) {
    const PhasePoint x = sample_on_constraint(sys, rng);
    EXPECT_LT(constraint_violation(sys, x), 1e-14);
    EXPECT_TRUE(in_constraint_manifold(sys, x));
  }
  const PhasePoint off{Vec::Zero(3), Vec{{0.0, 1.0, 0.0}}, 0.0};
  EXPECT_NEAR(constraint_violation(sys, off), 1.0, 1e-15);
  EXPECT_FALSE(in_constraint_manifold(sys, off));
}

TEST(ConstraintFunction, DifferentialMatchesFiniteDifferences) {
  const MechanicalSystem sys = load_template("knife_edge").system;
  const Observable phi = constraint_function(sys, 0);
  std::mt19937_64 rng(25);
  for (int s = 0; s < 50; ++s) {
    const PhasePoint x = sample_point(sys, rng);
    const Vec ad = phi.differential(x).pack();
    const Vec fd = oracle::fd_differential(phi, x).pack();
    EXPECT_LT((ad - fd).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}
