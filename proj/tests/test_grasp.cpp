#include <gtest/gtest.h>

#include "handover/error.hpp"
#include "handover/evaluation.hpp"
#include "handover/grasp_planner.hpp"
#include "oracles.hpp"

using namespace handover;

namespace {

Pose random_rigid(Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Pose t = Pose::Identity();
  t.linear() = rotation_exp(Vec3(u(rng), u(rng), u(rng)) * 2.0);
  t.translation() = Vec3(u(rng), u(rng), u(rng));
  return t;
}

std::vector<Vec3> random_cloud(Rng& rng, int n, const Vec3& offset) {
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) out.push_back(offset + Vec3(g(rng), g(rng), g(rng)));
  return out;
}

}  // namespace

TEST(GraspScore, DistanceFixtures) {
  EXPECT_EQ(distance_measure({Vec3(0, 0, 0), Vec3(1, 0, 0)}, {Vec3(0, 1, 0)}), 1.5);
  EXPECT_EQ(distance_measure({Vec3(0, 0, 0)}, {Vec3(3, 4, 0)}, false), 5.0);
  EXPECT_EQ(distance_measure({Vec3(1, 2, 3)}, {Vec3(1, 2, 3)}), 0.0);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto g = random_cloud(rng, 40, Vec3::Zero()), h = random_cloud(rng, 48, Vec3(0.1, 0, 0));
    EXPECT_NEAR(distance_measure(g, h), oracle::s_d(g, h), 1e-12);
  }
  EXPECT_THROW(distance_measure({}, {Vec3::Zero()}), Error);
}

TEST(GraspScore, AngleFixtures) {
  EXPECT_EQ(angle_measure(Vec3::UnitZ(), -Vec3::UnitZ()), 1.0);
  EXPECT_EQ(angle_measure(Vec3::UnitZ(), Vec3::UnitZ()), -1.0);
  EXPECT_EQ(angle_measure(Vec3::UnitZ(), Vec3::UnitX()), 0.0);
  Rng rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 a = Vec3(u(rng), u(rng), u(rng)).normalized(), b = Vec3(u(rng), u(rng), u(rng)).normalized();
    const double s = angle_measure(a, b);
    EXPECT_NEAR(s, oracle::s_a(a, b), 1e-12);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
  }
  EXPECT_EQ(angle_measure(Vec3(1, 1e-9, 0).normalized(), Vec3(-1, 0, 0)), 1.0);
  EXPECT_THROW(angle_measure(Vec3(2, 0, 0), Vec3::UnitX()), Error);
}

TEST(GraspScore, RigidInvariance) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const auto g = random_cloud(rng, 30, Vec3::Zero()), h = random_cloud(rng, 48, Vec3(0, 0.1, 0));
    const Vec3 ag = Vec3(u(rng), u(rng), u(rng)).normalized(), ah = Vec3(u(rng), u(rng), u(rng)).normalized();
    const Pose t = random_rigid(rng);
    std::vector<Vec3> tg, th;
    for (const auto& p : g) tg.push_back(t * p);
    for (const auto& p : h) th.push_back(t * p);
    EXPECT_NEAR(distance_measure(tg, th), distance_measure(g, h), 1e-9);
    EXPECT_NEAR(angle_measure(t.linear() * ag, t.linear() * ah), angle_measure(ag, ah), 1e-9);
  }
}

TEST(GraspScore, CoGraspTakesTheWorstHand) {
  const GripperModel gripper = default_gripper();
  GraspCandidate g;
  g.width = 0.05;
  g.approach = Vec3::UnitZ();
  HandPose near_hand{{Vec3(0, 0, 0.01)}, -Vec3::UnitZ()};
  HandPose far_hand{{Vec3(0, 0, 1.0)}, Vec3::UnitZ()};
  const auto scored = cograsp_score({g}, {near_hand, far_hand}, gripper, 0.5);
  const auto pc = gripper_cloud(g, gripper);
  const double c_near = oracle::s_d(pc, near_hand.cloud) / 0.25 + 1.0;
  const double c_far = oracle::s_d(pc, far_hand.cloud) / 0.25 - 1.0;
  EXPECT_NEAR(scored[0].second, std::min(c_near, c_far), 1e-12);
  EXPECT_EQ(*scored[0].first.cograsp_score, scored[0].second);
  EXPECT_THROW(cograsp_score({g}, {near_hand}, gripper, 0.0), Error);
}

TEST(GraspScore, GripperCloudFollowsPose) {
  const GripperModel gripper = default_gripper();
  EXPECT_EQ(gripper.contact_template.size(), 29u);
  GraspCandidate g;
  g.width = gripper.max_width / 2;
  g.pose = make_pose(Vec3(0.1, 0.2, 0.3), Eigen::Quaterniond(Eigen::AngleAxisd(0.7, Vec3::UnitX())));
  const auto pc = gripper_cloud(g, gripper);
  for (size_t i = 0; i < pc.size(); ++i) {
    const Vec3 local = g.pose.inverse() * pc[i];
    EXPECT_NEAR(local.y(), gripper.contact_template[i].y() / 2, 1e-12);
    EXPECT_NEAR(local.z(), gripper.contact_template[i].z(), 1e-12);
  }
}

TEST(GraspSampling, AntipodalContactsOnTheSurface) {
  Scene s;
  ASSERT_TRUE(try_place(s, catalog_entry("mug"), "m", 0.0, 0.0, 0.5, "white", 0.0));
  const PointCloud pc = complete_cloud(PointCloud{}, s, "m", 4000, 1);
  const auto grasps = sample_grasps(pc, default_gripper(), 32, 7);
  ASSERT_FALSE(grasps.empty());
  for (const auto& g : grasps) {
    EXPECT_LE(g.width, default_gripper().max_width + 1e-12);
    EXPECT_NEAR(g.approach.norm(), 1.0, 1e-9);
    for (const auto& c : g.contacts) EXPECT_LT(surface_distance(s.objects[0], c), 1e-9);
    EXPECT_GE(g.stability, 0.0);
    EXPECT_LE(g.stability, 1.0);
  }
  EXPECT_EQ(sample_grasps(pc, default_gripper(), 32, 7).front().pose.matrix(), grasps.front().pose.matrix());
  PointCloud tiny;
  tiny.points.assign(5, Vec3::Zero());
  EXPECT_THROW(sample_grasps(tiny, default_gripper(), 8, 0), Error);
}

namespace {

GraspPlan plan_for(const Fixture& f, const PipelineConfig& cfg, const std::string& utterance, SelectionResult& sel) {
  const RenderOutput r = render(f.scene, cfg.camera);
  const Heatmap h = build_heatmap(label_centroid(r, f.target_id), r.width, r.height, cfg.sigma_px);
  const ParsedCommand c = parse(utterance);
  sel = select_target(c, h, r, f.scene, cfg.detector, 0);
  return plan_grasp(r, cfg.camera, sel, c, f.scene, default_gripper(), cfg.grasp);
}

}  // namespace

TEST(GraspPlan, MugHandleConstraintHoldsUnderOracle) {
  const PipelineConfig cfg;
  const Fixture f = mug_fixture(cfg);
  const SceneObject& mug = f.scene.at("mug-0");
  const ObjectPart& handle = *mug.find_part("handle");

  SelectionResult sel;
  const GraspPlan robot = plan_for(f, cfg, "Pick up the mug by the handle", sel);
  EXPECT_FALSE(robot.used_cograsp);
  for (const auto& c : robot.best.contacts) {
    EXPECT_TRUE(oracle::in_part(mug, handle, c));
    const Vec2 px = oracle::project(c, cfg.camera);
    EXPECT_TRUE(sel.part_region->contains(std::lround(px.x()), std::lround(px.y())));
  }

  const GraspPlan human = plan_for(f, cfg, "Give me the mug so I can hold the handle", sel);
  for (const auto& c : human.best.contacts) {
    EXPECT_FALSE(oracle::in_part(mug, handle, c));
    const Vec2 px = oracle::project(c, cfg.camera);
    EXPECT_TRUE(sel.part_region->contains(std::lround(px.x()), std::lround(px.y())));
  }
}

TEST(GraspPlan, NoPreferenceUsesHandPrediction) {
  const PipelineConfig cfg;
  const Fixture f = mug_fixture(cfg);
  SelectionResult sel;
  const GraspPlan plan = plan_for(f, cfg, "give me the mug", sel);
  EXPECT_TRUE(plan.used_cograsp);
  EXPECT_EQ(plan.hands.size(), static_cast<size_t>(cfg.grasp.hand_count));
  for (const auto& h : plan.hands) EXPECT_EQ(h.cloud.size(), 48u);
  const auto order = ranked_candidates(plan);
  EXPECT_EQ(plan.candidates[order.front()].cograsp_score, plan.best.cograsp_score);
  for (const auto& c : plan.candidates) EXPECT_LE(*c.cograsp_score, *plan.best.cograsp_score);

  const GraspPlan back = grasp_plan_from_json(grasp_debug_dump(plan));
  EXPECT_EQ(grasp_debug_dump(back).dump(), grasp_debug_dump(plan).dump());
}

TEST(GraspPlan, PermittedPredicate) {
  const PipelineConfig cfg;
  const Fixture f = mug_fixture(cfg);
  const SceneObject& mug = f.scene.at("mug-0");
  const RenderOutput r = render(f.scene, cfg.camera);
  const PixelRegion whole{r.boxes.at("mug-0"), std::nullopt};
  for (const Vec3& p : oracle::surface_samples(mug, 200, 5)) {
    const bool on_handle = oracle::in_part(mug, *mug.find_part("handle"), p);
    const Vec2 px = oracle::project(p, cfg.camera);
    const bool in_box = whole.contains(std::lround(px.x()), std::lround(px.y()));
    EXPECT_EQ(contact_permitted(p, mug, whole, cfg.camera, "handle", Holder::kRobot), in_box && on_handle);
    EXPECT_EQ(contact_permitted(p, mug, whole, cfg.camera, "handle", Holder::kHuman), in_box && !on_handle);
    EXPECT_EQ(contact_permitted(p, mug, whole, cfg.camera, std::nullopt, Holder::kNone), in_box);
  }
}
