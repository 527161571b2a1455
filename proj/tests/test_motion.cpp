#include <gtest/gtest.h>

#include <numbers>

#include "handover/error.hpp"
#include "handover/evaluation.hpp"
#include "handover/motion.hpp"
#include "oracles.hpp"

using namespace handover;

namespace {

Vec6 random_q(Rng& rng) {
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  Vec6 q;
  for (int i = 0; i < 6; ++i) q[i] = u(rng);
  return q;
}

}  // namespace

TEST(Kinematics, ForwardMatchesDhTable) {
  const Pose base = make_pose(Vec3(0.1, -0.3, 0.02), Eigen::Quaterniond(Eigen::AngleAxisd(0.4, Vec3::UnitZ())));
  const ArmModel arm = ur5e_arm(base, 0.15);
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Vec6 q = random_q(rng);
    const Pose a = fk(arm, q), b = oracle::ur5e_fk(base, q, 0.15);
    EXPECT_LT((a.matrix() - b.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_LT((fk(arm, Vec6::Zero()).matrix() - arm.reference_pose.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kinematics, JacobianMatchesFiniteDifferences) {
  const ArmModel arm = default_arm();
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Vec6 q = random_q(rng);
    EXPECT_LT((jacobian(arm, q) - oracle::fd_jacobian(arm, q, 1e-6)).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(Kinematics, LimitsAndRank) {
  const ArmModel arm = default_arm();
  Vec6 q = Vec6::Zero();
  q[2] = 7.0;
  EXPECT_FALSE(arm.within_limits(q));
  try {
    fk(arm, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfLimits);
  }
  EXPECT_EQ(jacobian_rank(jacobian(arm, default_home())), 6);
  // Straight arm: elbow singularity.
  EXPECT_LT(jacobian_rank(jacobian(arm, Vec6::Zero())), 6);
}

TEST(Rmp, AttractorShape) {
  RMPParams p;
  const Vec6 e = (Vec6() << 0.3, -0.1, 0.2, 0.05, 0.0, -0.02).finished();
  const Vec6 xd = Vec6::Constant(0.1);
  const Vec6 f = attractor(e, xd, p);
  EXPECT_LT((f - (p.kappa * e / (e.norm() + p.soft_norm_c) - p.omega * xd)).norm(), 1e-12);
  // Potential gradient magnitude equals the soft-normalised error length.
  const double r = 0.37, h = 1e-6;
  EXPECT_NEAR((attractor_potential(r + h, p.soft_norm_c) - attractor_potential(r - h, p.soft_norm_c)) / (2 * h),
              r / (r + p.soft_norm_c), 1e-8);
  EXPECT_TRUE(p.underdamped() == (p.omega * p.omega < 4 * p.kappa / p.soft_norm_c));
}

TEST(Rmp, PullbackInvertsFullRankJacobian) {
  const ArmModel arm = default_arm();
  const Mat6 j = jacobian(arm, default_home());
  const Vec6 f = (Vec6() << 1, 2, 3, 0.1, 0.2, 0.3).finished();
  const PullResult r = pull(f, Mat6::Identity(), j);
  EXPECT_FALSE(r.truncated);
  EXPECT_LT((j * r.q_ddot - f).norm(), 1e-9);
  EXPECT_LT((r.metric - j.transpose() * j).norm(), 1e-12);
}

TEST(Rmp, ConvergesWithDescendingEnergy) {
  const ArmModel arm = default_arm();
  const RMPParams p;
  const auto targets = random_targets(8, 11);
  ASSERT_EQ(targets.size(), 8u);
  int converged = 0;
  for (const Pose& t : targets) {
    const JointTrajectory traj = integrate(arm, default_home(), t, p);
    converged += traj.converged;
    for (size_t k = 1; k < traj.energy.size(); ++k) EXPECT_LE(traj.energy[k] - traj.energy[k - 1], 50 * p.dt * p.dt);
    for (const auto& s : traj.samples) EXPECT_TRUE(arm.within_limits(s.q));
    if (traj.converged) {
      const Pose end = fk(arm, traj.samples.back().q);
      EXPECT_LT((end.translation() - t.translation()).norm(), p.pos_tol);
    }
  }
  EXPECT_GE(converged, 7);
}

TEST(Rmp, UnreachableTargetIsRejected) {
  const Pose far = make_pose(Vec3(3.0, 0.0, 0.2), Eigen::Quaterniond::Identity());
  EXPECT_FALSE(reachable(default_arm(), far));
  try {
    integrate(default_arm(), default_home(), far, RMPParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnreachable);
  }
}

TEST(Rmp, SymmetricGraspChoice) {
  const Pose g = make_pose(Vec3(0, 0, 0.1), Eigen::Quaterniond(Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX())));
  const Pose flipped = g * Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitZ());
  EXPECT_EQ(nearest_symmetric(g, g).matrix(), g.matrix());
  EXPECT_LT((nearest_symmetric(g, flipped).matrix() - flipped.matrix()).norm(), 1e-12);
}

TEST(Rmp, TrajectoryJsonRoundTrip) {
  const JointTrajectory traj = integrate(default_arm(), default_home(), random_targets(1, 3).front(), RMPParams{});
  const JointTrajectory back = trajectory_from_json(nlohmann::json::parse(to_json(traj).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(traj).dump());
  ASSERT_EQ(back.samples.size(), traj.samples.size());
  EXPECT_EQ(back.samples.back().q, traj.samples.back().q);
  EXPECT_EQ(to_json(rmp_params_from_json(to_json(RMPParams{}))).dump(), to_json(RMPParams{}).dump());
}

TEST(Rmp, HandoverPlanReachesUser) {
  const PipelineConfig cfg;
  const Fixture f = mug_fixture(cfg);
  const Pose grasp = make_pose(f.scene.at("mug-0").pose.translation() + Vec3(0, 0, 0.12),
                               Eigen::Quaterniond(Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX())));
  const HandoverPlan plan = handover_plan(default_arm(), default_home(), grasp, default_user_pose(), 0.05, RMPParams{});
  EXPECT_TRUE(plan.converged());
  const Pose end = fk(default_arm(), plan.deliver.samples.back().q);
  EXPECT_LT((end.translation() - default_user_pose().translation()).norm(), 0.005);
  EXPECT_FALSE(plan.events.empty());
}
