#include <gtest/gtest.h>

#include <numbers>

#include "handover/error.hpp"
#include "handover/geometry.hpp"
#include "oracles.hpp"

using namespace handover;

namespace {

WorldPrimitive at(Primitive p, const Vec3& t, double yaw = 0.0) {
  return {p, make_pose(t, Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ())))};
}

}  // namespace

TEST(Geometry, SignedDistanceMagnitudeMatchesBoundaryDistance) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  const std::vector<Primitive> prims{Box{Vec3(0.03, 0.05, 0.07)}, Cylinder{0.04, 0.06}, Sphere{0.05}};
  for (const auto& p : prims)
    for (int i = 0; i < 2000; ++i) {
      const Vec3 q(u(rng), u(rng), u(rng));
      EXPECT_NEAR(std::abs(signed_distance(p, q)), oracle::boundary_distance(p, q), 1e-12);
      EXPECT_EQ(signed_distance(p, q) < 0.0, oracle::inside_primitive(p, q));
    }
}

TEST(Geometry, RayHitsSphereAnalytically) {
  const auto hit = intersect_ray(Primitive{Sphere{1.0}}, Vec3(0, 0, -5), Vec3(0, 0, 1));
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->t, 4.0, 1e-12);
  EXPECT_NEAR((hit->normal - Vec3(0, 0, -1)).norm(), 0.0, 1e-12);
  EXPECT_FALSE(intersect_ray(Primitive{Sphere{1.0}}, Vec3(2, 0, -5), Vec3(0, 0, 1)));
}

TEST(Geometry, RayHitsCylinderSideAndCap) {
  const Primitive c = Cylinder{0.5, 1.0};
  auto side = intersect_ray(c, Vec3(-3, 0, 0), Vec3(1, 0, 0));
  ASSERT_TRUE(side);
  EXPECT_NEAR(side->t, 2.5, 1e-12);
  auto cap = intersect_ray(c, Vec3(0.1, 0, 4), Vec3(0, 0, -1));
  ASSERT_TRUE(cap);
  EXPECT_NEAR(cap->t, 3.0, 1e-12);
  EXPECT_NEAR(cap->normal.z(), 1.0, 1e-12);
}

TEST(Geometry, SphereDistanceIsCentreGapMinusRadii) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
    const double expect = std::max(0.0, (a - b).norm() - 0.05 - 0.07);
    EXPECT_NEAR(convex_distance(at(Sphere{0.05}, a), at(Sphere{0.07}, b)), expect, 1e-8);
  }
}

// Two upright cylinders standing on the same plane: the closest points are on
// the curved sides, so the distance is the centre gap minus the radii.
TEST(Geometry, UprightCylinderDistanceIsSymmetricAndExact) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-0.2, 0.2), yaw(-3.0, 3.0);
  for (int i = 0; i < 300; ++i) {
    const Vec3 ca(u(rng), u(rng), 0.07), cb(u(rng), u(rng), 0.045);
    const auto a = at(Cylinder{0.041, 0.07}, ca, yaw(rng));
    const auto b = at(Cylinder{0.035, 0.045}, cb, yaw(rng));
    const double expect = std::max(0.0, (ca - cb).head<2>().norm() - 0.076);
    EXPECT_NEAR(convex_distance(a, b), expect, 1e-6);
    EXPECT_NEAR(convex_distance(b, a), expect, 1e-6);
  }
}

TEST(Geometry, BoxDistanceAgreesWithSampledSurfaces) {
  Rng rng(9);
  std::uniform_real_distribution<double> u(-0.15, 0.15), yaw(-3.0, 3.0);
  for (int i = 0; i < 40; ++i) {
    const auto a = at(Box{Vec3(0.03, 0.02, 0.04)}, Vec3(u(rng), u(rng), 0.04), yaw(rng));
    const auto b = at(Cylinder{0.02, 0.03}, Vec3(u(rng), u(rng), 0.03), yaw(rng));
    const double d = convex_distance(a, b);
    EXPECT_NEAR(d, convex_distance(b, a), 1e-7);
    if (d == 0.0) continue;
    std::vector<Vec3> sa, sb;
    Vec3 n;
    for (int k = 0; k < 3000; ++k) {
      sa.push_back(a.pose * sample_surface(a.primitive, rng, n));
      sb.push_back(b.pose * sample_surface(b.primitive, rng, n));
    }
    const double sampled = oracle::min_pair_distance(sa, sb);
    EXPECT_LE(d, sampled + 1e-9);
    EXPECT_GE(d, sampled - 0.01);
  }
}

TEST(Geometry, OverlappingPrimitivesHaveZeroDistance) {
  EXPECT_EQ(convex_distance(at(Box{Vec3(0.1, 0.1, 0.1)}, Vec3::Zero()), at(Sphere{0.05}, Vec3(0.12, 0, 0))), 0.0);
}

TEST(Geometry, SurfaceSamplesLieOnTheSurface) {
  Rng rng(1);
  for (const Primitive& p : {Primitive{Box{Vec3(0.01, 0.02, 0.03)}}, Primitive{Cylinder{0.02, 0.05}}, Primitive{Sphere{0.03}}})
    for (int i = 0; i < 500; ++i) {
      Vec3 n;
      const Vec3 q = sample_surface(p, rng, n);
      EXPECT_LT(oracle::boundary_distance(p, q), 1e-12);
      EXPECT_NEAR(n.norm(), 1.0, 1e-12);
      EXPECT_GT(signed_distance(p, q + 1e-4 * n), 0.0);
    }
}

TEST(Geometry, RotationLogExpRoundTrip) {
  Rng rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Vec3 w(u(rng), u(rng), u(rng));
    w *= 3.0 / std::max(1.0, w.norm());
    EXPECT_LT((rotation_log(rotation_exp(w)) - w).norm(), 1e-9);
  }
}
