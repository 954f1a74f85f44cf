#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "shadowgrid/geometry.hpp"

using namespace shadowgrid;

namespace {

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
  EXPECT_NEAR(a.x(), b.x(), tol);
  EXPECT_NEAR(a.y(), b.y(), tol);
  EXPECT_NEAR(a.z(), b.z(), tol);
}

RigidTransform random_transform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(-0.3, 0.3), t(-5.0, 5.0);
  Vec6 s;
  s << t(rng), t(rng), t(rng), ang(rng), ang(rng), ang(rng);
  return RigidTransform::from_state(s);
}

}  // namespace

TEST(Spherical, AxisAlignedCases) {
  expect_vec_near(cartesian_from_spherical({1.0, 0.0, 0.0}), Vec3(1, 0, 0), 0.0);
  expect_vec_near(cartesian_from_spherical({2.0, kPi / 2, 0.0}), Vec3(0, 2, 0), 1e-15);
}

TEST(Spherical, MatchesDirectEvaluation) {
  // r = 10, az = 0.3, el = -0.2; reference values to 12 digits
  const Vec3 q = cartesian_from_spherical({10.0, 0.3, -0.2});
  EXPECT_NEAR(q.x(), 9.36293363584, 1e-10);
  EXPECT_NEAR(q.y(), 2.89629477626, 1e-10);
  EXPECT_NEAR(q.z(), -1.98669330795, 1e-10);
}

TEST(Spherical, InverseOnAxes) {
  const auto a = spherical_from_cartesian(Vec3(0, 3, 0));
  EXPECT_DOUBLE_EQ(a.range, 3.0);
  EXPECT_NEAR(a.azimuth, kPi / 2, 1e-15);
  EXPECT_DOUBLE_EQ(a.elevation, 0.0);

  const auto pole = spherical_from_cartesian(Vec3(0, 0, -5));
  EXPECT_DOUBLE_EQ(pole.range, 5.0);
  EXPECT_DOUBLE_EQ(pole.azimuth, 0.0);
  EXPECT_NEAR(pole.elevation, -kPi / 2, 1e-15);
}

TEST(Spherical, OriginIsDegenerate) {
  EXPECT_THROW(spherical_from_cartesian(Vec3::Zero()), GeometryError);
  EXPECT_THROW(spherical_from_cartesian(Vec3(1e-13, 0, 0)), GeometryError);
}

TEST(Spherical, AzimuthIsHalfOpen) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), -kPi);
  EXPECT_DOUBLE_EQ(spherical_from_cartesian(Vec3(-1, 0, 0)).azimuth, -kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi + 0.1), -kPi + 0.1, 1e-12);
}

TEST(Spherical, RoundTripProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> r(0.5, 200.0), az(-kPi, kPi), el(-kPi / 2, kPi / 2);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 q = cartesian_from_spherical({r(rng), az(rng), el(rng)});
    const auto s = spherical_from_cartesian(q);
    EXPECT_GE(s.azimuth, -kPi);
    EXPECT_LT(s.azimuth, kPi);
    expect_vec_near(cartesian_from_spherical(s), q, 1e-9);
  }
}

TEST(Spherical, RoundTripAtFixedRadius) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 q = Vec3(n(rng), n(rng), n(rng)).normalized() * 25.0;
    expect_vec_near(cartesian_from_spherical(spherical_from_cartesian(q)), q, 1e-9);
  }
}

TEST(Euler, ZeroIsIdentity) { EXPECT_TRUE(rotation_from_euler(0, 0, 0).isIdentity(0.0)); }

TEST(Euler, YawTakesXToY) {
  expect_vec_near(rotation_from_euler(0, 0, kPi / 2) * Vec3(1, 0, 0), Vec3(0, 1, 0), 1e-15);
}

TEST(Euler, MatchesIndependentConstruction) {
  const double r = 0.1, p = -0.2, y = 0.7;
  const Mat3 expected = (Eigen::AngleAxisd(y, Vec3::UnitZ()) * Eigen::AngleAxisd(p, Vec3::UnitY()) *
                         Eigen::AngleAxisd(r, Vec3::UnitX()))
                            .toRotationMatrix();
  EXPECT_TRUE(rotation_from_euler(r, p, y).isApprox(expected, 1e-14));
}

TEST(Euler, RoundTripSmallAngles) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> a(-0.3, 0.3);
  for (int i = 0; i < 1000; ++i) {
    const EulerAngles e{a(rng), a(rng), a(rng)};
    const EulerAngles back = euler_from_rotation(rotation_from_euler(e));
    EXPECT_NEAR(back.roll, e.roll, 1e-9);
    EXPECT_NEAR(back.pitch, e.pitch, 1e-9);
    EXPECT_NEAR(back.yaw, e.yaw, 1e-9);
  }
}

TEST(Euler, GimbalLockThrows) {
  EXPECT_THROW(euler_from_rotation(rotation_from_euler(0.1, kPi / 2, 0.2)), GeometryError);
  EXPECT_THROW(euler_from_rotation(rotation_from_euler(0.0, -kPi / 2 + 1e-8, 0.0)), GeometryError);
  EXPECT_NO_THROW(euler_from_rotation(rotation_from_euler(0.0, kPi / 2 - 1e-3, 0.0)));
}

TEST(Transform, SubtractsTranslation) {
  RigidTransform t;
  EXPECT_EQ(t.apply(Vec3(1.5, -2.0, 0.25)), Vec3(1.5, -2.0, 0.25));
  t.translation = Vec3(1, 0, 0);
  EXPECT_EQ(t.apply(Vec3::Zero()), Vec3(-1, 0, 0));
}

TEST(Transform, YawRotatesPoint) {
  Vec6 s = Vec6::Zero();
  s(5) = kPi / 2;
  expect_vec_near(RigidTransform::from_state(s).apply(Vec3(1, 0, 0)), Vec3(0, 1, 0), 1e-15);
}

TEST(Transform, StateRoundTrip) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const RigidTransform t = random_transform(rng);
    const RigidTransform back = RigidTransform::from_state(t.state());
    EXPECT_TRUE(back.rotation.isApprox(t.rotation, 1e-12));
    EXPECT_TRUE(back.translation.isApprox(t.translation, 1e-12));
  }
}

TEST(Transform, InverseAndCompose) {
  const RigidTransform id = invert(RigidTransform::identity());
  EXPECT_TRUE(id.rotation.isIdentity(0.0));
  EXPECT_TRUE(id.translation.isZero(0.0));

  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const RigidTransform t = random_transform(rng);
    const RigidTransform c = compose(t, invert(t));
    EXPECT_TRUE(c.rotation.isIdentity(1e-9));
    EXPECT_LT(c.translation.norm(), 1e-9);
  }
}

TEST(Transform, ComposeMatchesSequentialApply) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 100; ++i) {
    const RigidTransform a = random_transform(rng), b = random_transform(rng), c = random_transform(rng);
    const Vec3 p(1.0, -2.0, 3.0);
    expect_vec_near(compose(a, b).apply(p), a.apply(b.apply(p)), 1e-12);
    const RigidTransform l = compose(compose(a, b), c), r = compose(a, compose(b, c));
    EXPECT_TRUE(l.rotation.isApprox(r.rotation, 1e-12));
    EXPECT_TRUE(l.translation.isApprox(r.translation, 1e-12));
  }
}

TEST(Transform, PureTranslationsAdd) {
  RigidTransform a, b;
  a.translation = Vec3(1, 2, 3);
  b.translation = Vec3(-0.5, 0.25, 4);
  // (p - tb) - ta
  EXPECT_EQ(compose(a, b).translation, Vec3(0.5, 2.25, 7));
}

TEST(Transform, LongChainsStayOrthonormal) {
  std::mt19937_64 rng(12);
  RigidTransform chain;
  for (int i = 0; i < 100; ++i) chain = compose(chain, random_transform(rng));
  const Mat3& r = chain.rotation;
  EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-7);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-7);
  EXPECT_TRUE(chain.is_valid(1e-7));
}

TEST(Transform, OrthonormalizeRepairsDrift) {
  Mat3 r = rotation_from_euler(0.2, 0.1, -0.3);
  r(0, 1) += 1e-4;
  const Mat3 fixed = orthonormalize(r);
  EXPECT_LT((fixed.transpose() * fixed - Mat3::Identity()).norm(), 1e-12);
  EXPECT_NEAR(fixed.determinant(), 1.0, 1e-12);
}

TEST(Pose, RelativeTransformMapsSecondaryIntoPrimary) {
  const Pose a = Pose::from_xyz_yaw(1.0, 2.0, 1.7, 0.3);
  const Pose b = Pose::from_xyz_yaw(1.4, 2.3, 1.9, 0.35);
  const RigidTransform t = relative_transform(a, b);
  const Vec3 world(12.0, -3.0, 0.5);
  expect_vec_near(t.apply(b.to_sensor(world)), a.to_sensor(world), 1e-12);
}

TEST(Pose, ForwardMotionGivesNegativeX) {
  const RigidTransform t = relative_transform(Pose::from_xyz_yaw(0, 0, 1.73, 0), Pose::from_xyz_yaw(0.5, 0, 1.73, 0));
  EXPECT_NEAR(t.state()(0), -0.5, 1e-15);
  EXPECT_NEAR(t.state().tail<5>().norm(), 0.0, 1e-15);
}
