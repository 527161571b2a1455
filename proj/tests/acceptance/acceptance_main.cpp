// Acceptance run: one PASS/FAIL line per criterion, with the measured values.
// Exit status is the number of failed criteria.
//
//   handover_acceptance [--quick] [--report FILE]
//
// --quick shrinks the statistical suites for a smoke run; the verdicts are
// only meaningful at full size.

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "handover/evaluation.hpp"
#include "handover/session_io.hpp"
#include "oracles.hpp"
#include "random_setups.hpp"

using namespace handover;

namespace {

// Tolerances and sizes.
constexpr int kGazeConfigs = 1000;
constexpr double kGazeResidual = 1e-9;     // metres
constexpr double kGazeRoundTrip = 1e-6;    // pixels
constexpr double kGazeSeconds = 5.0;
constexpr double kHeatmapSigma = 57.0;
constexpr double kHeatmapNorm = 1e-6;
constexpr int kSelectionTrials = 200;
constexpr double kSelectionSeconds = 120.0;
constexpr double kFusedOverGaze = 0.05;
constexpr double kFusedOverLanguage = 0.20;
constexpr double kFusedFloor = 0.90;
constexpr int kGapTrials = 100;
constexpr double kGapRate = 0.90;
constexpr int kGraspScenes = 50;
constexpr double kAvoidRate = 0.85;
constexpr double kRoomClearance = 0.04;  // metres from both contacts
constexpr double kScoreExact = 1e-12;
constexpr double kScoreInvariance = 1e-9;
constexpr int kJacobianConfigs = 100;
constexpr double kJacobianError = 1e-5;
constexpr double kJacobianStep = 1e-6;
constexpr int kMotionTargets = 50;
constexpr double kMotionRate = 0.95;
constexpr int kTimingRuns = 10;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool g_quick = false;
int scaled(int n, int quick) { return g_quick ? quick : n; }

// ------------------------------------------------------------------ 1

Outcome gaze_geometry() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  std::uniform_real_distribution<double> px(0.0, 1.0);
  double worst_residual = 0.0, worst_round_trip = 0.0, worst_cramer = 0.0;
  for (int i = 0; i < kGazeConfigs; ++i) {
    const auto [m, h] = testsupport::random_monitor_setup(rng);
    const Vec2 target(px(rng) * m.width_px, px(rng) * m.height_px);
    const Vec3 d = (m.point_at(target.x(), target.y()) - h.position).normalized();
    const MonitorHit hit = intersect_monitor(m, h, d);
    worst_residual = std::max(worst_residual, (m.point_at(hit.lambda, hit.mu) - (h.position + hit.sigma * d)).norm());
    const Vec3 ref = oracle::monitor_hit(m, h.position, d);
    worst_cramer = std::max(worst_cramer, (Vec2(hit.lambda, hit.mu) - ref.head<2>()).norm());
    const auto frames = simulate_gaze(target, m, h, 0.0, 10, static_cast<std::uint64_t>(i));
    worst_round_trip = std::max(worst_round_trip, (track_gaze(frames, m, h, 0.3, 0.3) - target).norm());
  }
  const double secs = seconds_since(t0);
  return {worst_residual < kGazeResidual && worst_round_trip < kGazeRoundTrip && secs < kGazeSeconds,
          fmt("%d configs, residual %.2e m, round trip %.2e px, vs Cramer %.2e px, %.2f s", kGazeConfigs,
              worst_residual, worst_round_trip, worst_cramer, secs)};
}

// ------------------------------------------------------------------ 2

Outcome heatmap() {
  const MonitorPlane m = default_monitor();
  const int w = m.width_px, h = m.height_px;
  double norm_err = 0.0;

  const Heatmap centred = build_heatmap(Vec2(320, 240), w, h, kHeatmapSigma);
  double sum = 0.0;
  int arg = 0;
  for (size_t i = 0; i < centred.grid.size(); ++i) {
    sum += centred.grid[i];
    if (centred.grid[i] > centred.grid[arg]) arg = static_cast<int>(i);
  }
  norm_err = std::max(norm_err, std::abs(sum - 1.0));
  const bool argmax_ok = arg % w == 320 && arg / w == 240;

  // Half-pixel centre of the full grid: reflections map the grid onto itself.
  const Heatmap mid = build_heatmap(Vec2((w - 1) / 2.0, (h - 1) / 2.0), w, h, kHeatmapSigma);
  sum = 0.0;
  bool symmetric = true;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      sum += mid.at(u, v);
      symmetric = symmetric && mid.at(u, v) == mid.at(w - 1 - u, v) && mid.at(u, v) == mid.at(u, h - 1 - v);
    }
  norm_err = std::max(norm_err, std::abs(sum - 1.0));

  // Against the unnormalised reference grid.
  double total = 0.0;
  const auto ref = oracle::gaussian(w, h, Vec2(200.25, 120.75), kHeatmapSigma, total);
  const Heatmap off = build_heatmap(Vec2(200.25, 120.75), w, h, kHeatmapSigma);
  double ref_err = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) ref_err = std::max(ref_err, std::abs(off.grid[i] - ref[i] / total));

  return {norm_err < kHeatmapNorm && argmax_ok && symmetric && ref_err < 1e-12,
          fmt("sigma %.0f px, |sum-1| %.1e, argmax (%d,%d), reflection %s, vs reference %.1e", kHeatmapSigma, norm_err,
              arg % w, arg / w, symmetric ? "exact" : "BROKEN", ref_err)};
}

// ------------------------------------------------------------------ 3

Outcome language() {
  struct Row {
    const char* sentence;
    const char* object;
    const char* part;
    Holder holder;
  };
  const Row rows[] = {
      {"Give me the wooden hammer.", "wooden hammer", nullptr, Holder::kNone},
      {"Hand over the cup to me.", "cup", nullptr, Holder::kNone},
      {"Pass the toy plane over.", "toy plane", nullptr, Holder::kNone},
      {"I want the orange", "orange", nullptr, Holder::kNone},
      {"Hand me the mustard bottle by grabbing the tip.", "mustard bottle", "tip", Holder::kRobot},
      {"Grab the screwdriver's shaft.", "screwdriver", "shaft", Holder::kRobot},
      {"Deliver me the frying pan so I can hold the handle.", "frying pan", "handle", Holder::kHuman},
      {"I want to hold the apple by the stem.", "apple", "stem", Holder::kHuman},
      {"Give me the knife by its handle.", "knife", "handle", Holder::kHuman},
  };
  int ok = 0;
  std::string misses;
  for (const auto& r : rows) {
    try {
      const ParsedCommand c = parse(r.sentence);
      const bool part_ok = r.part ? c.part == std::string(r.part) : !c.part;
      if (c.object_phrase == r.object && part_ok && c.holder == r.holder) {
        ++ok;
        continue;
      }
      misses += fmt(" [%s -> %s/%s/%s]", r.sentence, c.object_phrase.c_str(), c.part.value_or("-").c_str(),
                    to_string(c.holder).c_str());
    } catch (const Error& e) {
      misses += fmt(" [%s -> %s]", r.sentence, e.what());
    }
  }
  return {ok == 9, fmt("%d/9 rows%s", ok, misses.c_str())};
}

// ------------------------------------------------------------------ 4

Outcome selection() {
  SelectionSuiteOptions o;
  o.trials = scaled(kSelectionTrials, 30);
  const auto t0 = std::chrono::steady_clock::now();
  const SelectionReport r = run_selection_suite(o);
  const double secs = seconds_since(t0);
  const double g = r.find(Arm::kGaze)->accuracy(), l = r.find(Arm::kLanguage)->accuracy(),
               b = r.find(Arm::kBoth)->accuracy();
  return {b >= g + kFusedOverGaze && b >= l + kFusedOverLanguage && b >= kFusedFloor && secs < kSelectionSeconds,
          fmt("%d trials (%d skipped): gaze %.1f%%, language %.1f%%, both %.1f%%; heatmap SR %.1f%% IoU %.3f MSE "
              "%.1f px^2; %.1f s",
              r.find(Arm::kBoth)->trials, r.skipped, 100 * g, 100 * l, 100 * b, 100 * r.gaze.success_rate,
              r.gaze.eval_iou, r.gaze.mse_px, secs)};
}

// ------------------------------------------------------------------ 5

Outcome gap() {
  GapSuiteOptions o;
  o.trials = scaled(kGapTrials, 20);
  const GapReport r = run_gap_suite(o);
  bool ok = r.monotone;
  std::string d;
  for (const auto& p : r.at_threshold) {
    ok = ok && p.rate() >= kGapRate;
    d += fmt("%s %.2f cm %.0f%%; ", to_string(p.size).c_str(), 100 * p.gap, 100 * p.rate());
  }
  d += "min working gap";
  for (const auto& [c, g] : r.min_working_gap)
    d += g ? fmt(" %s %.2f cm", to_string(c).c_str(), 100 * *g) : fmt(" %s none", to_string(c).c_str());
  d += r.monotone ? ", monotone" : ", NOT monotone";
  return {ok && r.at_threshold.size() == 3, fmt("%d trials per point: ", o.trials) + d};
}

// ------------------------------------------------------------------ 6

// Contacts checked without the library's own predicate: pinhole projection
// into the region and part membership from the reference SDFs.
bool oracle_permitted(const GraspTrial& t, const Scene& scene, const CameraModel& cam) {
  const SceneObject& o = scene.at(t.chosen_id);
  if (t.chosen_id != t.object_id || !t.region) return false;
  for (const Vec3& c : t.contacts) {
    const Vec2 px = oracle::project(c, cam);
    if (!t.region->contains(static_cast<int>(std::lround(px.x())), static_cast<int>(std::lround(px.y()))))
      return false;
    if (t.part && t.holder != Holder::kNone) {
      const bool on = oracle::in_part(o, *o.find_part(*t.part), c);
      if (on != (t.holder == Holder::kRobot)) return false;
    }
  }
  return true;
}

// Lenient variant: some user-facing point of the standard part stays clear of
// both contacts.
bool leaves_room(const GraspTrial& t, const Scene& scene) {
  const SceneObject& o = scene.at(t.chosen_id);
  const ObjectPart* sp = o.standard_part();
  std::vector<Vec3> part;
  for (const Vec3& p : oracle::surface_samples(o, 300, 17))
    if (oracle::in_part(o, *sp, p)) part.push_back(p);
  if (part.empty()) return false;
  Vec3 mean = Vec3::Zero();
  for (const auto& p : part) mean += p / static_cast<double>(part.size());
  for (const auto& p : part)
    if (p.y() >= mean.y() && (p - t.contacts[0]).norm() >= kRoomClearance && (p - t.contacts[1]).norm() >= kRoomClearance)
      return true;
  return false;
}

bool oracle_on_standard(const GraspTrial& t, const Scene& scene) {
  const SceneObject& o = scene.at(t.chosen_id);
  const ObjectPart* sp = o.standard_part();
  return oracle::in_part(o, *sp, t.contacts[0]) || oracle::in_part(o, *sp, t.contacts[1]);
}

Outcome grasp_constraints() {
  GraspSuiteOptions o;
  o.scenes = scaled(kGraspScenes, 5);
  const GraspReport r = run_grasp_suite(o);
  const CameraModel& cam = o.config.camera;

  int planned = 0, oracle_ok = 0;
  std::string failures;
  for (const auto& t : r.specified) {
    if (!t.planned) {
      failures += " [" + t.object_name + ": " + t.failure.substr(0, t.failure.find(':')) + "]";
      continue;
    }
    ++planned;
    oracle_ok += oracle_permitted(t, r.scenes[t.scene], cam);
  }
  int u_planned = 0, avoid = 0, room = 0;
  for (const auto& t : r.unspecified) {
    if (!t.planned) continue;
    ++u_planned;
    avoid += !oracle_on_standard(t, r.scenes[t.scene]);
    room += leaves_room(t, r.scenes[t.scene]);
  }
  const double avoid_rate = u_planned ? static_cast<double>(avoid) / u_planned : 0.0;

  GraspSuiteOptions od = o;
  od.config.grasp.scale_by_diameter = true;
  const GraspReport rd = run_grasp_suite(od);
  int d_planned = 0, d_avoid = 0;
  for (const auto& t : rd.unspecified) {
    if (!t.planned) continue;
    ++d_planned;
    d_avoid += !oracle_on_standard(t, rd.scenes[t.scene]);
  }

  const bool ok = planned > 0 && oracle_ok == planned && r.specified_permitted() == planned && avoid_rate >= kAvoidRate;
  return {ok, fmt("specified: %d/%zu planned, %d/%d permitted (library %d);%s unspecified: %d/%d avoid the standard "
                  "part (%.1f%%, need %.0f%%); info: %d/%d leave %.0f cm of it clear, diameter-scaled score avoids "
                  "%d/%d",
                  planned, r.specified.size(), oracle_ok, planned, r.specified_permitted(),
                  failures.empty() ? "" : (" unplanned" + failures + ";").c_str(), avoid, u_planned, 100 * avoid_rate,
                  100 * kAvoidRate, room, u_planned, 100 * kRoomClearance, d_avoid, d_planned)};
}

// ------------------------------------------------------------------ 7

Outcome scoring() {
  double fixture_err = 0.0;
  fixture_err = std::max(fixture_err, std::abs(distance_measure({Vec3(0, 0, 0), Vec3(1, 0, 0)}, {Vec3(0, 1, 0)}) - 1.5));
  fixture_err = std::max(fixture_err, std::abs(distance_measure({Vec3(0, 0, 0)}, {Vec3(3, 4, 0)}, false) - 5.0));
  fixture_err = std::max(fixture_err, std::abs(distance_measure({Vec3(0.1, 0.2, 0.3)}, {Vec3(0.1, 0.2, 0.3)})));
  fixture_err = std::max(fixture_err, std::abs(angle_measure(Vec3::UnitZ(), -Vec3::UnitZ()) - 1.0));
  fixture_err = std::max(fixture_err, std::abs(angle_measure(Vec3::UnitZ(), Vec3::UnitZ()) + 1.0));
  fixture_err = std::max(fixture_err, std::abs(angle_measure(Vec3::UnitX(), Vec3::UnitY())));
  fixture_err = std::max(fixture_err, std::abs(angle_measure(Vec3(1, 1, 0).normalized(), Vec3(-1, 0, 0)) -
                                               std::numbers::sqrt2 / 2));

  Rng rng(707);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, 0.05);
  double oracle_err = 0.0, invariance_err = 0.0, sa_min = 1.0, sa_max = -1.0;
  for (int i = 0; i < 200; ++i) {
    std::vector<Vec3> pg, ph;
    for (int k = 0; k < 29; ++k) pg.emplace_back(g(rng), g(rng), g(rng));
    for (int k = 0; k < 48; ++k) ph.emplace_back(0.1 + g(rng), g(rng), g(rng));
    const Vec3 ag = Vec3(u(rng), u(rng), u(rng)).normalized(), ah = Vec3(u(rng), u(rng), u(rng)).normalized();
    oracle_err = std::max(oracle_err, std::abs(distance_measure(pg, ph) - oracle::s_d(pg, ph)));
    oracle_err = std::max(oracle_err, std::abs(angle_measure(ag, ah) - oracle::s_a(ag, ah)));
    Pose t = Pose::Identity();
    t.linear() = rotation_exp(Vec3(u(rng), u(rng), u(rng)) * 2.0);
    t.translation() = Vec3(u(rng), u(rng), u(rng));
    std::vector<Vec3> tg, th;
    for (const auto& p : pg) tg.push_back(t * p);
    for (const auto& p : ph) th.push_back(t * p);
    invariance_err = std::max(invariance_err, std::abs(distance_measure(tg, th) - distance_measure(pg, ph)));
    invariance_err = std::max(invariance_err, std::abs(angle_measure(t.linear() * ag, t.linear() * ah) - angle_measure(ag, ah)));
  }
  for (int i = 0; i < 100000; ++i) {
    const double s = angle_measure(Vec3(u(rng), u(rng), u(rng)).normalized(), Vec3(u(rng), u(rng), u(rng)).normalized());
    sa_min = std::min(sa_min, s);
    sa_max = std::max(sa_max, s);
  }
  // Nearly (anti)parallel unit vectors whose dot product rounds past 1.
  const Vec3 a = Vec3(1, 1e-8, 1e-8).normalized();
  for (const double s : {angle_measure(a, -a), angle_measure(a, a)}) {
    sa_min = std::min(sa_min, s);
    sa_max = std::max(sa_max, s);
  }
  return {fixture_err <= kScoreExact && oracle_err <= kScoreExact && invariance_err <= kScoreInvariance &&
              sa_min >= -1.0 && sa_max <= 1.0,
          fmt("fixtures %.1e, vs reference %.1e, rigid invariance %.1e, S_a in [%.6f, %.6f]", fixture_err, oracle_err,
              invariance_err, sa_min, sa_max)};
}

// ------------------------------------------------------------------ 8

Outcome kinematics() {
  const ArmModel arm = default_arm();
  Rng rng(808);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  double worst = 0.0, fk_err = 0.0;
  const Pose base = make_pose(Vec3(0, -0.40, 0), Eigen::Quaterniond(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ())));
  for (int i = 0; i < kJacobianConfigs; ++i) {
    Vec6 q;
    for (int k = 0; k < 6; ++k) q[k] = u(rng);
    worst = std::max(worst, (jacobian(arm, q) - oracle::fd_jacobian(arm, q, kJacobianStep)).cwiseAbs().maxCoeff());
    fk_err = std::max(fk_err, (fk(arm, q).matrix() - oracle::ur5e_fk(base, q, 0.15).matrix()).cwiseAbs().maxCoeff());
  }
  return {worst < kJacobianError,
          fmt("%d configs, max |J - J_fd| %.2e (h = %.0e); fk vs DH table %.1e", kJacobianConfigs, worst,
              kJacobianStep, fk_err)};
}

// ------------------------------------------------------------------ 9

Outcome motion() {
  MotionSuiteOptions o;
  o.targets = scaled(kMotionTargets, 10);
  const MotionReport r = run_motion_suite(o);
  double rise = 0.0;
  int chatter = 0;
  for (const auto& t : r.trials) {
    rise = std::max(rise, t.max_energy_rise);
    if (t.converged) chatter = std::max(chatter, t.max_sign_changes);
  }
  const double rate = r.trials.empty() ? 0.0 : static_cast<double>(r.converged()) / r.trials.size();
  return {r.trials.size() == static_cast<size_t>(o.targets) && rate >= kMotionRate && r.energy_ok() && r.limits_ok(),
          fmt("%d/%zu converged (%.0f%%), max energy rise %.2e <= %.2e, limits %s, converged runs reverse a joint "
              "velocity at most %d times",
              r.converged(), r.trials.size(), 100 * rate, rise, r.energy_tolerance, r.limits_ok() ? "held" : "VIOLATED",
              chatter)};
}

// ------------------------------------------------------------------ 10

Outcome end_to_end() {
  const PipelineConfig cfg;
  bool ok = true;
  std::string d;
  for (const Fixture& f : {mug_fixture(cfg), flashlight_fixture(cfg)}) {
    const Session s = run_pipeline(f.scene, f.gaze, f.utterance, cfg);
    bool region_ok = false;
    if (s.grasp && s.selection) {
      GraspTrial t;
      t.object_id = f.target_id;
      t.chosen_id = s.selection->chosen.object_id;
      t.region = s.selection->part_region;
      t.part = s.command->part;
      t.holder = s.command->holder;
      t.contacts = s.grasp->best.contacts;
      region_ok = oracle_permitted(t, s.scene, cfg.camera);
    }
    const std::string text = to_json(s).dump(1);
    const Session replayed = replay(parse_session(text));
    const bool stable = stage_record(replayed) == stage_record(s) && to_json(replayed, false).dump(1) ==
                                                                         to_json(parse_session(text), false).dump(1);
    const bool fixture_ok = s.status == SessionStatus::kExecuted && s.selection &&
                            s.selection->chosen.object_id == f.target_id && region_ok && stable;
    ok = ok && fixture_ok;
    d += fmt("%s: %s, selected %s, grasp %s, replay %s; ", f.name.c_str(), to_string(s.status).c_str(),
             s.selection ? s.selection->chosen.object_id.c_str() : "-", region_ok ? "in region" : "OUT OF REGION",
             stable ? "byte-identical" : "DIFFERS");
  }
  d.resize(d.size() - 2);
  return {ok, d};
}

// ------------------------------------------------------------------ 11

Outcome timing() {
  const TimingReport r = run_timing_suite(scaled(kTimingRuns, 3), 5, PipelineConfig{});
  std::string d = fmt("%d runs (%d executed), mean s:", r.runs, r.executed);
  for (const auto& s : r.stages) d += fmt(" %s %.3f", to_string(s.stage).c_str(), s.mean);
  d += ", dominant " + to_string(r.dominant);
  return {r.dominant == Stage::kGrasp && r.executed > 0, d};
}

}  // namespace

int main(int argc, char** argv) {
  std::string report_path;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--quick")) {
      g_quick = true;
    } else if (!std::strcmp(argv[i], "--report") && i + 1 < argc) {
      report_path = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--quick] [--report FILE]\n", argv[0]);
      return 64;
    }
  }

  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"gaze geometry", gaze_geometry},
      {"heatmap", heatmap},
      {"language", language},
      {"selection dominance", selection},
      {"gap thresholds", gap},
      {"grasp constraints", grasp_constraints},
      {"grasp scoring", scoring},
      {"kinematics", kinematics},
      {"motion", motion},
      {"end-to-end", end_to_end},
      {"timing", timing},
  };

  std::ostringstream out;
  int failed = 0, n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    const std::string line =
        fmt("%s %2d %-20s %s (%.1f s)", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str(), seconds_since(t0));
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    out << line << '\n';
  }
  const std::string summary = fmt("%d/%d criteria passed%s", n - failed, n, g_quick ? " (quick sizes)" : "");
  std::printf("%s\n", summary.c_str());
  out << summary << '\n';
  if (!report_path.empty()) std::ofstream(report_path) << out.str();
  return failed;
}
