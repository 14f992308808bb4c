#include "sphlap/sphere.hpp"
#include "support/random_points.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

namespace sphlap {
namespace {

TEST(UnitVector, NormalizesOnConstruction) {
  const UnitVector x{3.0, 4.0};
  EXPECT_NEAR(x[0], 0.6, 1e-15);
  EXPECT_NEAR(x[1], 0.8, 1e-15);
  EXPECT_NEAR(x.coords().norm(), 1.0, 1e-12);
  EXPECT_EQ(x.dim(), 1);
}

TEST(UnitVector, NormalizationIsIdempotent) {
  RngState rng(11);
  for (int i = 0; i < 200; ++i) {
    const UnitVector x = testing::random_point(4, rng);
    const UnitVector y(x.coords());
    EXPECT_EQ(x.coords(), y.coords());
  }
}

TEST(UnitVector, RejectsDegenerateInput) {
  EXPECT_THROW(UnitVector(Eigen::VectorXd::Zero(3)), std::invalid_argument);
  EXPECT_THROW(UnitVector(Eigen::VectorXd::Ones(1)), std::invalid_argument);
  EXPECT_THROW((UnitVector{std::nan(""), 1.0}), std::invalid_argument);
}

TEST(UnitVector, NorthPole) {
  const UnitVector e = UnitVector::north_pole(3);
  EXPECT_EQ(e.size(), 4);
  EXPECT_EQ(e[0], 1.0);
  EXPECT_EQ(e.dim(), 3);
}

TEST(TangentVector, RejectsNonOrthogonalVector) {
  const UnitVector x{1.0, 0.0, 0.0};
  EXPECT_THROW(TangentVector(x, Eigen::Vector3d(0.1, 1.0, 0.0)), std::invalid_argument);
  EXPECT_THROW(TangentVector(x, Eigen::Vector2d(0.0, 1.0)), std::invalid_argument);
  EXPECT_NO_THROW(TangentVector(x, Eigen::Vector3d(0.0, 1.0, 2.0)));
}

TEST(GeodesicDistance, Examples) {
  const UnitVector x{1.0, 0.0, 0.0};
  EXPECT_EQ(geodesic_distance(x, x), 0.0);
  EXPECT_NEAR(geodesic_distance(x, UnitVector{0.0, 1.0, 0.0}), kPi / 2, 1e-15);
  EXPECT_NEAR(geodesic_distance(x, UnitVector{-1.0, 0.0, 0.0}), kPi, 1e-15);
}

TEST(GeodesicDistance, ResolvesTinyAngles) {
  const double t = 1e-10;
  const UnitVector x{1.0, 0.0};
  const UnitVector y{std::cos(t), std::sin(t)};
  EXPECT_NEAR(geodesic_distance(x, y), t, 1e-20);
}

TEST(GeodesicDistance, DimensionMismatchThrows) {
  EXPECT_THROW((void)geodesic_distance(UnitVector{1.0, 0.0}, UnitVector{1.0, 0.0, 0.0}),
               std::invalid_argument);
}

TEST(GeodesicDistance, SymmetryAndTriangleInequality) {
  RngState rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto a = testing::random_point(3, rng);
    const auto b = testing::random_point(3, rng);
    const auto c = testing::random_point(3, rng);
    EXPECT_EQ(geodesic_distance(a, b), geodesic_distance(b, a));
    EXPECT_LE(geodesic_distance(a, c), geodesic_distance(a, b) + geodesic_distance(b, c) + 1e-10);
    const double d = geodesic_distance(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, kPi);
  }
}

TEST(ProjectToTangent, Examples) {
  const UnitVector x{1.0, 0.0, 0.0};
  EXPECT_TRUE(project_to_tangent(x, Eigen::Vector3d(1, 0, 0)).vec().isZero(1e-15));
  EXPECT_TRUE(project_to_tangent(x, Eigen::Vector3d(0, 2, 0)).vec().isApprox(Eigen::Vector3d(0, 2, 0)));
  EXPECT_TRUE(project_to_tangent(x, Eigen::Vector3d(3, 4, 0)).vec().isApprox(Eigen::Vector3d(0, 4, 0)));
  EXPECT_TRUE(project_to_tangent(x, Eigen::Vector3d::Zero()).vec().isZero());
}

TEST(ProjectToTangent, Idempotent) {
  RngState rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto x = testing::random_point(4, rng);
    const Eigen::VectorXd z = 3.0 * rng.normal_vector(5);
    const TangentVector once = project_to_tangent(x, z);
    const TangentVector twice = project_to_tangent(x, once.vec());
    EXPECT_LE((once.vec() - twice.vec()).norm(), 1e-12);
    EXPECT_LE(std::abs(x.coords().dot(once.vec())), 1e-12);
  }
}

TEST(ExpMap, Examples) {
  const UnitVector x{1.0, 0.0, 0.0};
  EXPECT_EQ(exp_map(x, TangentVector(x, Eigen::Vector3d::Zero())).coords(), x.coords());
  const UnitVector e1{1.0, 0.0};
  const UnitVector q = exp_map(e1, TangentVector(e1, Eigen::Vector2d(0.0, kPi / 2)));
  EXPECT_NEAR(q[0], 0.0, 1e-15);
  EXPECT_NEAR(q[1], 1.0, 1e-15);
  const UnitVector a = exp_map(x, TangentVector(x, Eigen::Vector3d(0.0, kPi, 0.0)));
  EXPECT_NEAR(a[0], -1.0, 1e-15);
  EXPECT_NEAR(a[1], 0.0, 1e-15);
}

TEST(ExpMap, RejectsTangentAtAnotherPoint) {
  const UnitVector x{1.0, 0.0, 0.0};
  const UnitVector y{0.0, 1.0, 0.0};
  EXPECT_THROW((void)exp_map(x, TangentVector(y, Eigen::Vector3d(1, 0, 0))), std::invalid_argument);
}

TEST(LogMap, Examples) {
  const UnitVector x{1.0, 0.0, 0.0};
  EXPECT_TRUE(log_map(x, x).vec().isZero());
  const UnitVector e1{1.0, 0.0};
  const TangentVector v = log_map(e1, UnitVector{0.0, 1.0});
  EXPECT_NEAR(v.vec()[0], 0.0, 1e-15);
  EXPECT_NEAR(v.vec()[1], kPi / 2, 1e-15);
  const TangentVector w = log_map(x, UnitVector{std::cos(0.3), std::sin(0.3), 0.0});
  EXPECT_NEAR(w.norm(), 0.3, 1e-15);
  EXPECT_NEAR(w.vec()[1], 0.3, 1e-15);
}

TEST(LogMap, AntipodalThrows) {
  const UnitVector x{1.0, 0.0, 0.0};
  EXPECT_THROW((void)log_map(x, UnitVector{-1.0, 0.0, 0.0}), std::domain_error);
}

TEST(ExpLog, RoundTripAndIsometry) {
  RngState rng(17);
  for (int i = 0; i < 500; ++i) {
    const auto x = testing::random_point(3, rng);
    const double len = (kPi - 0.1) * (0.001 + 0.999 * rng.uniform());
    const TangentVector u = testing::random_tangent(x, len, rng);
    const UnitVector y = exp_map(x, u);
    EXPECT_NEAR(geodesic_distance(x, y), len, 1e-10);
    EXPECT_LE((log_map(x, y).vec() - u.vec()).norm(), 1e-8);
    const auto z = testing::random_point(3, rng);
    if (kPi - geodesic_distance(x, z) > 1e-3) {
      const TangentVector v = log_map(x, z);
      EXPECT_NEAR(v.norm(), geodesic_distance(x, z), 1e-10);
      EXPECT_LE((exp_map(x, v).coords() - z.coords()).norm(), 1e-9);
    }
  }
}

}  // namespace
}  // namespace sphlap
