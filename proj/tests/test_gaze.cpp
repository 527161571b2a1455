#include <gtest/gtest.h>

#include <numbers>

#include "handover/error.hpp"
#include "handover/gaze.hpp"
#include "oracles.hpp"
#include "random_setups.hpp"

using namespace handover;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

using testsupport::random_monitor_setup;

}  // namespace

TEST(Gaze, IntersectionMatchesCramer) {
  Rng rng(1);
  std::uniform_real_distribution<double> px(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    auto [m, h] = random_monitor_setup(rng);
    const Vec3 target = m.point_at(px(rng) * 640, px(rng) * 480);
    const Vec3 d = (target - h.position).normalized();
    const MonitorHit hit = intersect_monitor(m, h, d);
    const Vec3 ref = oracle::monitor_hit(m, h.position, d);
    EXPECT_NEAR(hit.lambda, ref.x(), 1e-6);
    EXPECT_NEAR(hit.mu, ref.y(), 1e-6);
    EXPECT_NEAR(hit.sigma, ref.z(), 1e-9);
    EXPECT_LT((m.point_at(hit.lambda, hit.mu) - (h.position + hit.sigma * d)).norm(), 1e-9);
  }
}

TEST(Gaze, EnsembleDirection) {
  Rng rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0), a(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 vh = Vec3(u(rng), u(rng), -1.0).normalized(), vg = Vec3(u(rng), u(rng), -1.0).normalized();
    const double alpha = a(rng);
    EXPECT_LT((ensemble_direction(vh, vg, alpha) - oracle::ensemble(vh, vg, alpha)).norm(), 1e-12);
  }
  const Vec3 v = Vec3(0.1, 0.2, -1).normalized();
  EXPECT_EQ(ensemble_direction(v, -v, 1.0), v);
  EXPECT_EQ(code_of([&] { ensemble_direction(v, -v, 0.5); }), ErrorCode::kDegenerateDirection);
  EXPECT_EQ(code_of([&] { ensemble_direction(v, v, 1.5); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { ensemble_direction(2.0 * v, v, 0.5); }), ErrorCode::kInvalidArgument);
}

TEST(Gaze, IntersectionErrors) {
  const MonitorPlane m = default_monitor();
  const HeadPose h = default_head(m);
  EXPECT_EQ(code_of([&] { intersect_monitor(m, h, Vec3::UnitX()); }), ErrorCode::kNoIntersection);
  EXPECT_EQ(code_of([&] { intersect_monitor(m, h, Vec3::UnitZ()); }), ErrorCode::kBehindViewer);
  EXPECT_EQ(code_of([&] { intersect_monitor(m, HeadPose{h.position, false}, -Vec3::UnitZ()); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { simulate_gaze(Vec2(700, 10), m, h, 0.0, 5, 0); }), ErrorCode::kTargetOutsideMonitor);
  EXPECT_EQ(code_of([&] { track_gaze({}, m, h, 0.3, 0.3); }), ErrorCode::kEmptyInput);
}

TEST(Gaze, EmaMatchesRecursion) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 600.0);
  std::vector<Vec2> pts;
  for (int i = 0; i < 50; ++i) pts.emplace_back(u(rng), u(rng));
  for (double beta : {0.1, 0.3, 0.9, 1.0}) {
    EXPECT_LT((ema_stream(pts, beta) - oracle::ema(pts, beta)).norm(), 1e-9);
    EmaFilter f(beta);
    Vec2 last;
    for (const auto& p : pts) last = f.push(p);
    EXPECT_EQ(last, ema_stream(pts, beta));
  }
  EXPECT_EQ(ema_stream({Vec2(3, 4)}, 0.3), Vec2(3, 4));
  EXPECT_EQ(code_of([] { EmaFilter f(0.0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { ema_stream({}, 0.3); }), ErrorCode::kEmptyInput);
}

TEST(Gaze, ZeroNoiseRoundTrip) {
  Rng rng(4);
  std::uniform_real_distribution<double> px(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    auto [m, h] = random_monitor_setup(rng);
    const Vec2 target(px(rng) * 640, px(rng) * 480);
    const auto frames = simulate_gaze(target, m, h, 0.0, 10, i);
    EXPECT_LT((track_gaze(frames, m, h, 0.3, 0.3) - target).norm(), 1e-6);
  }
}

TEST(Gaze, NoisyGazeStaysNearTarget) {
  const MonitorPlane m = default_monitor();
  const HeadPose h = default_head(m);
  const auto frames = simulate_gaze(Vec2(300, 200), m, h, 1.0, 60, 9);
  // One degree at 0.6 m is about 26 px; smoothing keeps the estimate well inside that.
  EXPECT_LT((track_gaze(frames, m, h, 0.3, 0.3) - Vec2(300, 200)).norm(), 26.0);
}

TEST(Gaze, ImageMonitorFlip) {
  const MonitorPlane m = default_monitor();
  EXPECT_EQ(monitor_to_image(Vec2(10, 0), m), Vec2(10, 479));
  EXPECT_EQ(image_to_monitor(monitor_to_image(Vec2(12.5, 77.25), m), m), Vec2(12.5, 77.25));
}

TEST(Heatmap, NormalisedGaussian) {
  const Heatmap hm = build_heatmap(Vec2(200.3, 150.8), 640, 480, 57.0);
  double total = 0.0;
  const auto ref = oracle::gaussian(640, 480, hm.center, 57.0, total);
  double sum = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    sum += hm.grid[i];
    EXPECT_NEAR(hm.grid[i], ref[i] / total, 1e-15);
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_FALSE(hm.center_outside);
  EXPECT_EQ(hm.peak(), hm.at(200, 151));
}

TEST(Heatmap, SymmetricAboutIntegerCentre) {
  const Heatmap hm = build_heatmap(Vec2(320, 240), 641, 481, 57.0);
  for (int dv = 0; dv <= 240; dv += 7)
    for (int du = 0; du <= 320; du += 5) {
      const double a = hm.at(320 + du, 240 + dv);
      EXPECT_EQ(a, hm.at(320 - du, 240 + dv));
      EXPECT_EQ(a, hm.at(320 + du, 240 - dv));
      EXPECT_EQ(a, hm.at(320 - du, 240 - dv));
    }
}

TEST(Heatmap, FarCentreStillNormalised) {
  const Heatmap hm = build_heatmap(Vec2(-2000, 100), 640, 480, 57.0);
  EXPECT_TRUE(hm.center_outside);
  double sum = 0.0;
  for (double g : hm.grid) sum += g;
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_EQ(code_of([] { build_heatmap(Vec2(1, 1), 10, 10, 0.0); }), ErrorCode::kInvalidArgument);
}

TEST(GazeLog, RoundTrip) {
  const MonitorPlane m = default_monitor();
  const auto frames = simulate_gaze(Vec2(100, 300), m, default_head(m), 2.0, 12, 3);
  const auto back = parse_gaze_log(format_gaze_log(frames));
  ASSERT_EQ(back.size(), frames.size());
  for (size_t i = 0; i < frames.size(); ++i) {
    EXPECT_EQ(back[i].timestamp, frames[i].timestamp);
    EXPECT_EQ(back[i].head_dir, frames[i].head_dir);
    EXPECT_EQ(back[i].eye_dir, frames[i].eye_dir);
  }
  EXPECT_EQ(code_of([] { parse_gaze_log("0 1 2 3\n"); }), ErrorCode::kParse);
}
