#include <gtest/gtest.h>

#include "ssp/functionals.hpp"
#include "ssp/problems.hpp"
#include "ssp/steppers.hpp"
#include "test_util.hpp"

using namespace ssp;
using testutil::random_vector;

namespace {
Matrix central_fd(const IvpProblem& p, const Vector& u, double eps = 1e-6) {
  Matrix J(p.m, p.m);
  for (Eigen::Index j = 0; j < p.m; ++j) {
    Vector a = u, b = u;
    a(j) += eps;
    b(j) -= eps;
    J.col(j) = (p.rhs(0, a) - p.rhs(0, b)) / (2 * eps);
  }
  return J;
}
}  // namespace

TEST(Brusselator, RhsAtInitialState) {
  const auto p = make_brusselator();
  const Vector f = p.rhs(0, p.initial);
  EXPECT_NEAR(f(0), -10.0, 1e-14);
  EXPECT_NEAR(f(1), -1.0, 1e-14);
  EXPECT_NEAR(f(2), 1.0, 1e-14);
  EXPECT_NEAR(f(3), 0.1, 1e-14);
  EXPECT_NEAR(f(4), 10.0 - 1.0 + 0.1 * 0.1 * 0.1 - 0.1, 1e-13);
  EXPECT_NEAR(f(5), 1.0 - 0.1 * 0.1 * 0.1, 1e-14);
}

TEST(Brusselator, ZeroStateIsEquilibrium) {
  const auto p = make_brusselator();
  EXPECT_EQ(p.rhs(0, Vector::Zero(6)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Brusselator, JacobianMatchesCentralDifferences) {
  const auto p = make_brusselator();
  for (int k = 0; k < 20; ++k) {
    const Vector u = random_vector(6, 0.05, 5.0);
    EXPECT_LE((p.jacobian(0, u) - central_fd(p, u)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Brusselator, InvariantsAnnihilateRhs) {
  const auto p = make_brusselator();
  ASSERT_TRUE(p.invariants.has_value());
  EXPECT_EQ(p.invariants->rows(), 2);
  for (int k = 0; k < 50; ++k) {
    const Vector u = random_vector(6, 0, 4);
    EXPECT_LE((*p.invariants * p.rhs(0, u)).cwiseAbs().maxCoeff(), 1e-12);
  }
  // orthonormal rows
  EXPECT_LE((*p.invariants * p.invariants->transpose() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Brusselator, NetworkMatchesRhs) {
  const auto p = make_brusselator();
  EXPECT_LE((p.pd->Q() * p.pd->rates(p.initial) - p.rhs(0, p.initial)).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_EQ(p.pd->Q(), Matrix(p.pd->R - p.pd->L));
}

TEST(PdSplit, ReconstructsRhs) {
  const auto p = make_brusselator();
  for (int k = 0; k < 100; ++k) {
    const Vector u = random_vector(6, 0.01, 5.0);
    const auto s = pd_split(*p.pd, u);
    EXPECT_GE(s.production.minCoeff(), 0.0);
    EXPECT_EQ(s.destruction, Matrix(s.production.transpose()));
    const Vector f = s.production.rowwise().sum() - s.destruction.rowwise().sum();
    EXPECT_LE((f - p.rhs(0, u)).cwiseAbs().maxCoeff(), 1e-12);
    // gross form P - D u
    const Vector g = s.gross_production - Vector(s.destruction_rate.cwiseProduct(u));
    EXPECT_LE((g - p.rhs(0, u)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PdSplit, SingleReaction) {
  ProductionDestructionSystem pd;
  pd.L = Matrix::Zero(2, 1);
  pd.R = Matrix::Zero(2, 1);
  pd.L(0, 0) = 1;
  pd.R(1, 0) = 1;
  pd.k = Vector::Ones(1);
  Vector u(2);
  u << 2, 1;
  const auto s = pd_split(pd, u);
  EXPECT_EQ(s.production(1, 0), 2.0);
  EXPECT_EQ(s.destruction_rate(0), 1.0);
  EXPECT_EQ(s.destruction(0, 1), 2.0);
}

TEST(PdSplit, ZeroRates) {
  const auto pd = brusselator_network(0, 0, 0, 0);
  const auto s = pd_split(pd, Vector::Ones(6));
  EXPECT_EQ(s.production.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(s.destruction_rate.cwiseAbs().maxCoeff(), 0.0);
}

TEST(PdSplit, Errors) {
  const auto pd = brusselator_network();
  Vector u = Vector::Ones(6);
  u(4) = 0.0;
  EXPECT_THROW(pd_split(pd, u), NonpositiveState);
  EXPECT_THROW(pd_split(pd, Vector::Ones(5)), DimensionMismatch);
  ProductionDestructionSystem bad = pd;
  bad.k(0) = -1;
  EXPECT_THROW(bad.validate(), DomainError);
}

TEST(PdSystem, RatesNonnegative) {
  const auto pd = brusselator_network();
  for (int k = 0; k < 50; ++k) EXPECT_GE(pd.rates(random_vector(6, 0, 3)).minCoeff(), 0.0);
}

TEST(Grid, Spacing) {
  GridSpec g;
  EXPECT_NEAR(g.nx * g.dx(), 1.0, 1e-14);
  EXPECT_NEAR(g.x(100), 1.0, 1e-14);
  EXPECT_THROW(GridSpec{2}.validate(), DomainError);
}

TEST(Advection, Stencil) {
  const auto p = make_advection();
  EXPECT_EQ(p.rhs(0, Vector::Constant(100, 3.0)).cwiseAbs().maxCoeff(), 0.0);
  const Vector f = p.rhs(0, Vector::Unit(100, 40));
  EXPECT_NEAR(f(40), -100.0, 1e-12);
  EXPECT_NEAR(f(41), 100.0, 1e-12);
  EXPECT_NEAR(f.cwiseAbs().sum(), 200.0, 1e-12);
  // periodic wrap
  const Vector g = p.rhs(0, Vector::Unit(100, 99));
  EXPECT_NEAR(g(0), 100.0, 1e-12);
  EXPECT_THROW(make_advection({}, -1.0), DomainError);
}

TEST(Advection, JacobianIsExact) {
  const auto p = make_advection();
  const Vector u = random_vector(100, 0, 1);
  EXPECT_LE((p.jacobian(0, u) * u - p.rhs(0, u)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Advection, InitialPulse) {
  const auto p = make_advection();
  // cells with |x_i - 0.5| < 0.25 strictly: x = 0.26 .. 0.74
  EXPECT_EQ(p.initial.sum(), 49.0);
  EXPECT_EQ(p.initial(25), 1.0);  // x = 0.26
  EXPECT_EQ(p.initial(24), 0.0);  // x = 0.25
  EXPECT_EQ(p.initial(74), 0.0);  // x = 0.75
  EXPECT_EQ(eval_functional(ConvexFunctional::tv(), p.initial), 2.0);
}

TEST(Advection, ExplicitEulerTvContractiveBelowCourantOne) {
  const auto p = make_advection();
  for (int k = 0; k < 100; ++k) {
    const Vector u = random_vector(100, -1, 1);
    const double h = testutil::uniform(0.0, 0.01);
    const Vector v = explicit_euler_step(p, 0, u, h).u_next;
    EXPECT_LE(tv_periodic(v.data(), 100), tv_periodic(u.data(), 100) + 1e-12);
  }
}

TEST(Adr, SourceHandValues) {
  const auto s = geobio_source(1.0, 1.0, 0.3);
  EXPECT_DOUBLE_EQ(s[0], -0.5);
  EXPECT_NEAR(s[1], 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(s[2], 0.3);
  for (int k = 0; k < 100; ++k) {
    const auto r = geobio_source(testutil::uniform(0, 10), testutil::uniform(0, 10), 0.3);
    EXPECT_LE(std::abs(r[0] + r[1] + r[2]), 1e-15);
  }
}

TEST(Adr, InitialState) {
  const auto p = make_adr();
  EXPECT_EQ(p.m, 300);
  EXPECT_EQ(p.species, 3);
  const Vector u1 = p.block(p.initial, 0);
  EXPECT_NEAR(eval_functional(ConvexFunctional::tv(), u1), 19.96, 1e-12);
  EXPECT_EQ(u1.maxCoeff(), 9.98);
  EXPECT_EQ(p.block(p.initial, 1).maxCoeff(), 2.0);
  EXPECT_EQ(p.block(p.initial, 2).maxCoeff(), 1.0);
}

TEST(Adr, TotalMassInvariant) {
  const auto p = make_adr();
  for (int k = 0; k < 20; ++k) {
    const Vector u = random_vector(300, 0, 10);
    EXPECT_LE(std::abs(p.rhs(0, u).sum()), 1e-12 * 300 * 10);
  }
}

TEST(Adr, JacobianMatchesCentralDifferences) {
  GridSpec g{12};
  const auto p = make_adr(g);
  const Vector u = random_vector(36, 0.1, 5);
  EXPECT_LE((p.jacobian(0, u) - central_fd(p, u)).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Adr, DiffusionRowSumsVanish) {
  GridSpec g{20};
  AdrParams prm;
  prm.k = 0.0;
  const auto p = make_adr(g, prm);
  // source is identically zero when u2 = 0 and k = 0; check diffusion + advection on constants
  Vector c = Vector::Zero(60);
  c.head(20).setConstant(2.5);
  c.tail(20).setConstant(1.5);
  EXPECT_LE(p.rhs(0, c).cwiseAbs().maxCoeff(), 1e-13);
  const Matrix J = p.jacobian(0, c);
  EXPECT_LE(J.rowwise().sum().segment(40, 20).cwiseAbs().maxCoeff(), 1e-13);
  prm.d1 = -1;
  EXPECT_THROW(make_adr(g, prm), DomainError);
}

TEST(Limiter, Values) {
  EXPECT_EQ(limiter(LimiterKind::van_leer, 1.0), 1.0);
  EXPECT_EQ(limiter(LimiterKind::van_leer, -1.0), 0.0);
  EXPECT_EQ(limiter(LimiterKind::koren, 1.0), 1.0);
  EXPECT_EQ(limiter(LimiterKind::koren, 4.0), 2.0);
  EXPECT_EQ(limiter(LimiterKind::koren, -0.5), 0.0);
}

TEST(Limiter, RangeProperties) {
  for (auto kind : {LimiterKind::van_leer, LimiterKind::koren})
    for (int i = -10000; i <= 10000; ++i) {
      const double th = i * 1e-3;
      const double v = limiter(kind, th);
      if (th <= 0) {
        EXPECT_EQ(v, 0.0);
      }
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 2.0);
    }
}

TEST(ConservationLaws, ConstantStateIsSteady) {
  EXPECT_LE(make_burgers().rhs(0, Vector::Constant(100, 0.4)).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LE(make_buckley_leverett().rhs(0, Vector::Constant(100, 0.3)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(ConservationLaws, InitialTv) {
  EXPECT_NEAR(tv_periodic(make_burgers().initial.data(), 100), 1.0, 1e-12);
  EXPECT_NEAR(tv_periodic(make_buckley_leverett().initial.data(), 100), 1.0, 1e-15);
}

TEST(ConservationLaws, ConservativeAndNoJacobian) {
  for (const auto& p : {make_burgers(), make_buckley_leverett()}) {
    EXPECT_FALSE(p.has_jacobian());
    const Vector u = random_vector(100, 0.0, 0.6);
    EXPECT_LE(std::abs(p.rhs(0, u).sum()), 1e-11);
  }
}

TEST(ConservationLaws, WaveSpeedCheck) {
  const auto b = make_burgers();
  Vector u = Vector::Constant(100, 0.5);
  EXPECT_EQ(b.state_check(u), 0);
  u(3) = -0.1;
  u(7) = -0.2;
  EXPECT_EQ(b.state_check(u), 2);
  const auto bl = make_buckley_leverett();
  Vector w = Vector::Constant(100, 0.2);
  w(0) = 1.2;  // g' < 0 above 1
  EXPECT_EQ(bl.state_check(w), 1);
}

TEST(Registry, MakeProblem) {
  for (const auto& id : problem_ids()) EXPECT_EQ(make_problem(id).name, id);
  EXPECT_EQ(make_problem("advection", {{"nx", 50}}).m, 50);
  EXPECT_EQ(make_problem("adr", {{"k", 0.1}}).params.at("k"), 0.1);
  EXPECT_THROW(make_problem("heat"), ConfigError);
  EXPECT_THROW(make_problem("advection", {{"k", 1}}), ConfigError);
}
