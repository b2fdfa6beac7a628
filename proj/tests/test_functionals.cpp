#include <gtest/gtest.h>

#include "ssp/functionals.hpp"
#include "ssp/problems.hpp"
#include "test_util.hpp"

using namespace ssp;
using testutil::random_vector;
using testutil::uniform;

namespace {
Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

std::vector<ConvexFunctional> all_kinds() {
  return {ConvexFunctional::sup(), ConvexFunctional::tv(), ConvexFunctional::floor(0.0),
          ConvexFunctional::ceil(1.0), ConvexFunctional::max(), ConvexFunctional::min()};
}
}  // namespace

TEST(Functional, Examples) {
  EXPECT_EQ(eval_functional(ConvexFunctional::floor(0), vec({1, 2, 3})), 0.0);
  EXPECT_EQ(eval_functional(ConvexFunctional::floor(0), vec({1, -0.5, 3})), 0.5);
  EXPECT_EQ(eval_functional(ConvexFunctional::sup(), vec({-4, 1})), 4.0);
  EXPECT_EQ(eval_functional(ConvexFunctional::ceil(1), vec({0.2, 1.5})), 1.5);
  EXPECT_EQ(eval_functional(ConvexFunctional::ceil(1), vec({0.2, 0.5})), 1.0);
  EXPECT_EQ(eval_functional(ConvexFunctional::max(), vec({0.2, -3})), 0.2);
  EXPECT_EQ(eval_functional(ConvexFunctional::min(), vec({0.2, -3})), 3.0);
}

TEST(Functional, TvPeriodicClosure) {
  EXPECT_EQ(eval_functional(ConvexFunctional::tv(), vec({0, 1, 0})), 2.0);
  EXPECT_EQ(eval_functional(ConvexFunctional::tv(), vec({0, 1})), 2.0);
  EXPECT_EQ(eval_functional(ConvexFunctional::tv(), vec({3, 3, 3, 3})), 0.0);
}

TEST(Functional, TvOfAdvectionInitialState) {
  const auto p = make_advection();
  EXPECT_NEAR(eval_functional(ConvexFunctional::tv(), p.initial), 2.0, 1e-15);
}

TEST(Functional, EmptyStateRejected) {
  EXPECT_THROW(eval_functional(ConvexFunctional::sup(), Vector()), DimensionMismatch);
}

TEST(Functional, ConvexOnSamples) {
  for (const auto& f : all_kinds())
    for (int k = 0; k < 200; ++k) {
      const Vector v = random_vector(8, -2, 2), w = random_vector(8, -2, 2);
      const double l = uniform(0, 1);
      EXPECT_LE(eval_functional(f, l * v + (1 - l) * w),
                l * eval_functional(f, v) + (1 - l) * eval_functional(f, w) + 1e-12)
          << f.to_string();
    }
}

TEST(Functional, Scaling) {
  const Vector u = vec({0.3, -1.2, 2.5, 0.0, -0.7});
  for (double l : {-2.0, -1.0, 0.5}) {
    EXPECT_EQ(eval_functional(ConvexFunctional::sup(), l * u), std::abs(l) * eval_functional(ConvexFunctional::sup(), u));
    EXPECT_NEAR(eval_functional(ConvexFunctional::tv(), l * u), std::abs(l) * eval_functional(ConvexFunctional::tv(), u),
                1e-15);
  }
  // floor / ceil are not symmetric under u -> -u
  const Vector w = vec({0.5, -1.0});
  EXPECT_NE(eval_functional(ConvexFunctional::floor(0), -1.0 * w), eval_functional(ConvexFunctional::floor(0), w));
  EXPECT_NE(eval_functional(ConvexFunctional::ceil(0), -1.0 * w), eval_functional(ConvexFunctional::ceil(0), w));
}

TEST(Functional, TvCyclicShiftInvariant) {
  for (int k = 0; k < 50; ++k) {
    const Vector u = random_vector(11, -1, 1);
    Vector s(11);
    const int shift = k % 11;
    for (int i = 0; i < 11; ++i) s((i + shift) % 11) = u(i);
    EXPECT_NEAR(tv_periodic(u.data(), 11), tv_periodic(s.data(), 11), 1e-14);
  }
}

TEST(Functional, Parse) {
  EXPECT_EQ(parse_functional("floor chi=0.25").chi, 0.25);
  EXPECT_EQ(parse_functional("ceil psi=1").psi, 1.0);
  EXPECT_EQ(parse_functional("tv").kind, FunctionalKind::tv_seminorm);
  EXPECT_EQ(parse_functional("sup").kind, FunctionalKind::sup_norm);
  EXPECT_THROW(parse_functional("median"), ConfigError);
  EXPECT_THROW(parse_functional("floor psi=1"), ConfigError);
  EXPECT_THROW(parse_functional("floor chi=abc"), ConfigError);
  EXPECT_THROW(parse_functional(""), ConfigError);
  EXPECT_EQ(parse_functional(parse_functional("floor chi=0.5").to_string()).chi, 0.5);
}

TEST(GlobalSensor, FloorExamples) {
  const auto s = SensorSpec::global(ConvexFunctional::floor(0), 0.0);
  EXPECT_EQ(global_sensor(s, vec({0, 1, 2})), 1);
  EXPECT_EQ(global_sensor(s, vec({0, -1e-6, 2})), 0);
  // within tol_sensor
  EXPECT_EQ(global_sensor(s, vec({0, -1e-10, 2})), 1);
}

TEST(GlobalSensor, TvBoundTripsOnOvershoot) {
  const auto s = SensorSpec::global(ConvexFunctional::tv(), 2.0);
  Vector u = make_advection().initial;
  EXPECT_EQ(global_sensor(s, u), 1);
  u(30) = 1.1875;  // TV 2.375
  EXPECT_EQ(global_sensor(s, u), 0);
}

TEST(GlobalSensor, MonotoneInBound) {
  for (int k = 0; k < 100; ++k) {
    const Vector u = random_vector(6, -1, 1);
    const double M = uniform(0, 3);
    if (global_sensor(SensorSpec::global(ConvexFunctional::tv(), M), u) == 1) {
      EXPECT_EQ(global_sensor(SensorSpec::global(ConvexFunctional::tv(), M + uniform(0, 1)), u), 1);
    }
  }
}

TEST(GlobalSensor, ScopeChecked) {
  EXPECT_THROW(global_sensor(SensorSpec::local_range(0, 1), vec({0.5})), DomainError);
  EXPECT_THROW(local_sensor(SensorSpec::global(ConvexFunctional::sup(), 1), vec({0.5})), DomainError);
}

TEST(LocalSensor, RangeExample) {
  const auto s = SensorSpec::local_range(0.0, 1.0);
  const Eigen::ArrayXd sig = local_sensor(s, vec({0.5, 1.2, -0.1}));
  EXPECT_EQ(sig(0), 1.0);
  EXPECT_EQ(sig(1), 0.0);
  EXPECT_EQ(sig(2), 0.0);
  EXPECT_EQ(local_sensor(s, vec({0.0, 0.3, 1.0})).minCoeff(), 1.0);
}

TEST(LocalSensor, BuckleyLeverettInitialStateInsideBounds) {
  const auto p = make_buckley_leverett();
  EXPECT_EQ(local_sensor(SensorSpec::local_range(0.0, 0.5), p.initial).minCoeff(), 1.0);
}

TEST(LocalSensor, PerComponentBounds) {
  SensorSpec s = SensorSpec::local(ConvexFunctional::max(), 0.0);
  s.criteria[0].component_bounds = {1.0, 2.0};
  const Eigen::ArrayXd sig = local_sensor(s, vec({1.5, 1.5}));
  EXPECT_EQ(sig(0), 0.0);
  EXPECT_EQ(sig(1), 1.0);
  EXPECT_THROW(local_sensor(s, vec({1, 2, 3})), DimensionMismatch);
}

TEST(SensorSpec, Validation) {
  EXPECT_THROW(SensorSpec::local(ConvexFunctional::tv(), 1).validate(3), ConfigError);
  SensorSpec empty;
  EXPECT_THROW(empty.validate(3), ConfigError);
  SensorSpec g = SensorSpec::global(ConvexFunctional::sup(), 1);
  g.criteria[0].component_bounds = {1, 1, 1};
  EXPECT_THROW(g.validate(3), ConfigError);
}
