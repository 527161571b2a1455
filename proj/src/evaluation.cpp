#include "handover/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "handover/error.hpp"

namespace handover {

namespace {

constexpr double kPi = std::numbers::pi;

Pose yawed(double x, double y, double yaw) {
  return make_pose(Vec3(x, y, 0.0), Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ())));
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[std::uniform_int_distribution<size_t>(0, v.size() - 1)(rng)];
}

std::string pick_color(const ObjectTemplate& t, Rng& rng) { return t.colors.empty() ? std::string() : pick(t.colors, rng); }

long label_pixels(const RenderOutput& r, const std::string& id) {
  const int label = r.label_of(id);
  if (label == 0) return 0;
  return std::count(r.labels.begin(), r.labels.end(), label);
}

Heatmap heatmap_for(const std::vector<GazeFrame>& gaze, const PipelineConfig& c) {
  const Vec2 uv = monitor_to_image(track_gaze(gaze, c.monitor, c.head, c.alpha, c.beta), c.monitor);
  return build_heatmap(uv, c.camera.width, c.camera.height, c.sigma_px);
}

std::string gaze_only_choice(const Heatmap& heat, const RenderOutput& render) {
  std::string best;
  double best_mass = -1.0;
  for (const auto& [id, box] : render.boxes) {  // map order keeps the smaller id on ties
    const double m = box_mass(heat, box);
    if (m > best_mass) {
      best_mass = m;
      best = id;
    }
  }
  return best;
}

std::string language_only_choice(const std::vector<Candidate>& cands) {
  const Candidate* best = nullptr;
  for (const auto& c : cands)
    if (!best || c.confidence > best->confidence || (c.confidence == best->confidence && c.object_id < best->object_id))
      best = &c;
  return best ? best->object_id : std::string();
}

std::vector<const ObjectTemplate*> templates_of(SizeClass size) {
  std::vector<const ObjectTemplate*> out;
  for (const auto& t : default_catalog())
    if (instantiate(t, "probe", Pose::Identity()).size_class == size) out.push_back(&t);
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Vec2 label_centroid(const RenderOutput& render, const std::string& object_id) {
  const int label = render.label_of(object_id);
  double su = 0.0, sv = 0.0;
  long n = 0;
  for (int v = 0; v < render.height; ++v)
    for (int u = 0; u < render.width; ++u)
      if (label != 0 && render.label(u, v) == label) {
        su += u;
        sv += v;
        ++n;
      }
  if (n == 0) throw Error(ErrorCode::kUnknownObject, "object '" + object_id + "' is not visible");
  return {su / n, sv / n};
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<size_t>(threads, n));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

Fixture mug_fixture(const PipelineConfig& config) {
  Fixture f;
  f.name = "mug-handle";
  f.scene.id = "fixture-mug";
  bool ok = try_place(f.scene, catalog_entry("mug"), "mug-0", 0.0, 0.0, 0.0, "white", 0.005);
  ok = ok && try_place(f.scene, catalog_entry("cup"), "cup-0", 0.13, 0.08, 0.0, "blue", 0.005);
  ok = ok && try_place(f.scene, catalog_entry("banana"), "banana-0", -0.12, 0.06, 0.3, "yellow", 0.005);
  ok = ok && try_place(f.scene, catalog_entry("pear"), "pear-0", -0.12, -0.13, 0.0, "green", 0.005);
  if (!ok) throw Error(ErrorCode::kSceneOverflow, "mug fixture does not fit on the table");
  f.utterance = "Hand me the mug and I want to hold the handle";
  f.target_id = "mug-0";
  const RenderOutput r = render(f.scene, config.camera);
  f.gaze = gaze_at_pixel(label_centroid(r, f.target_id), config);
  return f;
}

Fixture flashlight_fixture(const PipelineConfig& config) {
  Fixture f;
  f.name = "two-flashlights";
  f.scene.id = "fixture-flashlights";
  bool ok = try_place(f.scene, catalog_entry("flashlight"), "flashlight-0", -0.08, 0.0, kPi / 2, "red", 0.005);
  ok = ok && try_place(f.scene, catalog_entry("flashlight"), "flashlight-1", 0.08, 0.0, kPi / 2, "blue", 0.005);
  ok = ok && try_place(f.scene, catalog_entry("cup"), "cup-0", 0.0, 0.17, 0.0, "green", 0.005);
  if (!ok) throw Error(ErrorCode::kSceneOverflow, "flashlight fixture does not fit on the table");
  f.utterance = "give me the flashlight";
  f.target_id = "flashlight-0";
  const RenderOutput r = render(f.scene, config.camera);
  f.gaze = gaze_at_pixel(label_centroid(r, f.target_id), config);
  return f;
}

bool place_identical_pair(Scene& scene, const ObjectTemplate& tmpl, double gap, double yaw, const std::string& color,
                          const Vec2& centre) {
  auto make = [&](double d, SceneObject& a, SceneObject& b) {
    a = instantiate(tmpl, "pair-a", yawed(centre.x() - d, centre.y(), yaw), color);
    b = instantiate(tmpl, "pair-b", yawed(centre.x() + d, centre.y(), yaw), color);
  };
  SceneObject a, b;
  double lo = 0.0, hi = 2.0 * instantiate(tmpl, "probe", Pose::Identity()).bounding_sphere().second + gap + 0.01;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    make(mid, a, b);
    (surface_gap(a, b) < gap ? lo : hi) = mid;
  }
  make(hi, a, b);
  if (!fits_on_table(a, scene.table) || !fits_on_table(b, scene.table)) return false;
  for (const auto& o : scene.objects)
    if (surface_gap(o, a) <= 0.0 || surface_gap(o, b) <= 0.0) return false;
  scene.objects.push_back(a);
  scene.objects.push_back(b);
  return true;
}

std::string to_string(Arm a) {
  switch (a) {
    case Arm::kGaze: return "gaze";
    case Arm::kLanguage: return "language";
    case Arm::kBoth: return "both";
  }
  return "both";
}

Arm arm_from_string(const std::string& s) {
  if (s == "gaze") return Arm::kGaze;
  if (s == "language") return Arm::kLanguage;
  if (s == "both") return Arm::kBoth;
  throw Error(ErrorCode::kInvalidArgument, "unknown arm '" + s + "' (gaze, language, both)");
}

const ArmResult* SelectionReport::find(Arm a) const {
  for (const auto& r : arms)
    if (r.arm == a) return &r;
  return nullptr;
}

SelectionReport run_selection_suite(const SelectionSuiteOptions& opt) {
  if (opt.trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be at least 1");
  struct Outcome {
    bool valid = false;
    std::map<Arm, bool> correct;
    GazeEvalReport gaze;
  };
  std::vector<Outcome> out(static_cast<size_t>(opt.trials));
  const auto& catalog = default_catalog();

  parallel_for(out.size(), [&](size_t i) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const std::uint64_t s = trial_seed(trial_seed(opt.seed, i), static_cast<std::uint64_t>(attempt));
      Rng rng(s);
      Scene scene;
      try {
        scene = generate_scene(s, opt.distractors, catalog);
      } catch (const Error&) {
        continue;
      }
      const ObjectTemplate& tmpl = pick(catalog, rng);
      const std::string color = pick_color(tmpl, rng);
      std::uniform_real_distribution<double> coord(-0.2, 0.2), yaw(-kPi, kPi);
      int placed = 0;
      for (int k = 0; k < 400 && placed < 2; ++k)
        if (try_place(scene, tmpl, placed == 0 ? "pair-a" : "pair-b", coord(rng), coord(rng), yaw(rng), color, 0.005,
                      0.01))
          ++placed;
      if (placed < 2) continue;
      const std::string target = std::bernoulli_distribution(0.5)(rng) ? "pair-a" : "pair-b";
      const RenderOutput r = render(scene, opt.config.camera);
      if (label_pixels(r, target) < 30) continue;

      const auto gaze = gaze_at_pixel(label_centroid(r, target), opt.config, opt.frames, opt.noise_deg, rng());
      const Heatmap heat = heatmap_for(gaze, opt.config);
      const ParsedCommand cmd = parse("give me the " + tmpl.name);
      const auto cands = detect_candidates(cmd.object_phrase, r, scene, opt.config.detector, rng());
      Outcome o;
      o.valid = true;
      o.correct[Arm::kGaze] = gaze_only_choice(heat, r) == target;
      o.correct[Arm::kLanguage] = language_only_choice(cands) == target;
      o.correct[Arm::kBoth] = !cands.empty() && select_object(score_candidates(heat, cands)).candidate.object_id == target;

      GazeEvalSample sample{heat, {}, 0};
      for (const auto& [id, box] : r.boxes) {
        if (id == target) sample.truth = sample.boxes.size();
        sample.boxes.push_back(box);
      }
      o.gaze = evaluate_gaze({sample});
      out[i] = std::move(o);
      return;
    }
  });

  SelectionReport rep;
  for (Arm a : opt.arms) rep.arms.push_back({a, 0, 0});
  int successes = 0, failures = 0;
  double iou = 0.0, sq = 0.0;
  for (const auto& o : out) {
    if (!o.valid) {
      ++rep.skipped;
      continue;
    }
    for (auto& a : rep.arms) {
      ++a.trials;
      a.correct += o.correct.at(a.arm);
    }
    if (o.gaze.success_rate > 0.5)
      ++successes;
    else {
      ++failures;
      sq += o.gaze.mse_px;
    }
    iou += o.gaze.eval_iou;
  }
  const int n = successes + failures;
  rep.gaze.samples = static_cast<size_t>(n);
  rep.gaze.success_rate = n ? static_cast<double>(successes) / n : 0.0;
  rep.gaze.eval_iou = n ? iou / n : 0.0;
  rep.gaze.mse_px = failures ? sq / failures : 0.0;
  return rep;
}

GapReport run_gap_suite(const GapSuiteOptions& opt) {
  const std::vector<SizeClass> classes{SizeClass::kSmall, SizeClass::kMedium, SizeClass::kLarge};
  auto run_point = [&](SizeClass size, double gap, std::uint64_t base) {
    const auto pool = templates_of(size);
    if (pool.empty()) throw Error(ErrorCode::kInvalidArgument, "catalog has no " + to_string(size) + " objects");
    std::vector<int> hit(static_cast<size_t>(opt.trials), -1);
    parallel_for(hit.size(), [&](size_t i) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        Rng rng(trial_seed(trial_seed(base, i), static_cast<std::uint64_t>(attempt)));
        const ObjectTemplate& tmpl = *pick(pool, rng);
        Scene scene;
        scene.id = "gap";
        std::uniform_real_distribution<double> yaw(-kPi, kPi), jitter(-0.03, 0.03);
        if (!place_identical_pair(scene, tmpl, gap, yaw(rng), pick_color(tmpl, rng), Vec2(jitter(rng), jitter(rng))))
          continue;
        const std::string target = std::bernoulli_distribution(0.5)(rng) ? "pair-a" : "pair-b";
        const RenderOutput r = render(scene, opt.config.camera);
        if (label_pixels(r, target) < 4) continue;
        const auto gaze = gaze_at_pixel(label_centroid(r, target), opt.config, opt.frames, opt.noise_deg, rng());
        const Heatmap heat = heatmap_for(gaze, opt.config);
        const auto cands = detect_candidates(parse("give me the " + tmpl.name).object_phrase, r, scene,
                                             opt.config.detector, rng());
        hit[i] = !cands.empty() && select_object(score_candidates(heat, cands)).candidate.object_id == target;
        return;
      }
    });
    GapPoint p{size, gap, 0, 0};
    for (int h : hit)
      if (h >= 0) {
        ++p.trials;
        p.correct += h;
      }
    return p;
  };

  GapReport rep;
  std::uint64_t k = 0;
  for (SizeClass c : classes) {
    std::vector<GapPoint> pts;
    for (double g : opt.ladder) pts.push_back(run_point(c, g, trial_seed(opt.seed, k++)));
    std::optional<double> min_gap;
    for (auto it = pts.rbegin(); it != pts.rend() && it->rate() >= opt.required_rate; ++it) min_gap = it->gap;
    rep.min_working_gap[c] = min_gap;
    rep.ladder.insert(rep.ladder.end(), pts.begin(), pts.end());
    if (opt.thresholds.count(c)) rep.at_threshold.push_back(run_point(c, opt.thresholds.at(c), trial_seed(opt.seed, 100 + k++)));
  }
  std::vector<double> gaps;
  for (SizeClass c : classes)
    if (rep.min_working_gap[c]) gaps.push_back(*rep.min_working_gap[c]);
  rep.monotone = gaps.size() == classes.size() &&
                 (std::is_sorted(gaps.begin(), gaps.end()) || std::is_sorted(gaps.rbegin(), gaps.rend()));
  return rep;
}

int GraspReport::specified_planned() const {
  return static_cast<int>(std::count_if(specified.begin(), specified.end(), [](const auto& t) { return t.planned; }));
}
int GraspReport::specified_permitted() const {
  return static_cast<int>(
      std::count_if(specified.begin(), specified.end(), [](const auto& t) { return t.planned && t.permitted; }));
}
int GraspReport::unspecified_planned() const {
  return static_cast<int>(std::count_if(unspecified.begin(), unspecified.end(), [](const auto& t) { return t.planned; }));
}
int GraspReport::unspecified_avoiding() const {
  return static_cast<int>(
      std::count_if(unspecified.begin(), unspecified.end(), [](const auto& t) { return t.planned && !t.on_standard; }));
}

namespace {

const char* const kRobotTemplates[] = {"Hand me the {o} by grabbing the {p}.", "Pass me the {o} by holding the {p}.",
                                       "Grab the {o}'s {p}."};
const char* const kHumanTemplates[] = {"Give me the {o} so I can hold the {p}.", "I want to hold the {o} by the {p}.",
                                       "Give me the {o} by its {p}."};

std::string fill(std::string t, const std::string& object, const std::string& part) {
  t.replace(t.find("{o}"), 3, object);
  if (const auto at = t.find("{p}"); at != std::string::npos) t.replace(at, 3, part);
  return t;
}

GraspTrial grasp_trial(const Scene& scene, const SceneObject& object, const std::optional<std::string>& part,
                       Holder holder, const std::string& utterance, const PipelineConfig& config) {
  GraspTrial t;
  t.object_id = object.id;
  t.object_name = object.name;
  t.part = part;
  t.holder = holder;
  t.utterance = utterance;
  PipelineConfig c = config;
  c.plan_motion = false;
  const RenderOutput r = render(scene, c.camera);
  const Session s = run_pipeline(scene, gaze_at_pixel(label_centroid(r, object.id), c), utterance, c);
  if (!s.grasp) {
    t.failure = s.failure ? s.failure->code + " at " + to_string(s.failure->stage) + ": " + s.failure->reason : "unknown";
    return t;
  }
  t.planned = true;
  t.chosen_id = s.selection->chosen.object_id;
  t.region = s.selection->part_region;
  t.contacts = s.grasp->best.contacts;
  t.stability = s.grasp->best.stability;
  const SceneObject& chosen = scene.at(t.chosen_id);
  const PixelRegion region = t.region.value_or(PixelRegion{s.selection->chosen.box, std::nullopt});
  t.permitted = true;
  for (const auto& p : t.contacts)
    t.permitted = t.permitted && contact_permitted(p, chosen, region, c.camera, s.command->part, s.command->holder);
  if (const ObjectPart* sp = chosen.standard_part())
    for (const auto& p : t.contacts) t.on_standard = t.on_standard || part_contains(chosen, *sp, p);
  return t;
}

}  // namespace

GraspReport run_grasp_suite(const GraspSuiteOptions& opt) {
  GraspReport rep;
  const size_t per = static_cast<size_t>(opt.objects_per_scene);
  rep.scenes.resize(static_cast<size_t>(opt.scenes));
  std::vector<GraspTrial> spec(rep.scenes.size() * per), unspec(rep.scenes.size() * per);
  std::vector<bool> used(spec.size(), false);

  parallel_for(rep.scenes.size(), [&](size_t si) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const std::uint64_t seed = trial_seed(trial_seed(opt.seed, si), static_cast<std::uint64_t>(attempt));
      Rng rng(seed);
      Scene scene;
      try {
        scene = generate_scene(seed, opt.scene_objects, default_catalog());
      } catch (const Error&) {
        continue;
      }
      const RenderOutput r = render(scene, opt.config.camera);
      std::vector<const SceneObject*> pool;
      for (const auto& o : scene.objects)
        if (o.standard_part() && label_pixels(r, o.id) >= 200) pool.push_back(&o);
      if (pool.size() < per) continue;
      std::shuffle(pool.begin(), pool.end(), rng);
      rep.scenes[si] = scene;
      for (size_t k = 0; k < per; ++k) {
        const SceneObject& o = *pool[k];
        const ObjectPart& part = pick(o.parts, rng);
        const bool robot = std::bernoulli_distribution(0.5)(rng);
        const std::string tmpl = robot ? pick(std::vector<std::string>(std::begin(kRobotTemplates), std::end(kRobotTemplates)), rng)
                                       : pick(std::vector<std::string>(std::begin(kHumanTemplates), std::end(kHumanTemplates)), rng);
        spec[si * per + k] = grasp_trial(scene, o, part.name, robot ? Holder::kRobot : Holder::kHuman,
                                         fill(tmpl, o.name, part.name), opt.config);
        unspec[si * per + k] = grasp_trial(scene, o, std::nullopt, Holder::kNone, "Give me the " + o.name + ".", opt.config);
        spec[si * per + k].scene = unspec[si * per + k].scene = si;
        used[si * per + k] = true;
      }
      return;
    }
  });
  for (size_t i = 0; i < spec.size(); ++i)
    if (used[i]) {
      rep.specified.push_back(std::move(spec[i]));
      rep.unspecified.push_back(std::move(unspec[i]));
    }
  return rep;
}

double CatalogReport::unconstrained_rate() const {
  if (rows.empty()) return 0.0;
  return static_cast<double>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.unconstrained_ok; })) /
         rows.size();
}

double CatalogReport::constrained_rate() const {
  int n = 0, ok = 0;
  for (const auto& r : rows)
    if (!r.constrained_part.empty()) {
      ++n;
      ok += r.constrained_ok;
    }
  return n ? static_cast<double>(ok) / n : 0.0;
}

CatalogReport run_catalog_suite(int seeds, std::uint64_t seed, const PipelineConfig& config) {
  const auto& catalog = default_catalog();
  CatalogReport rep;
  rep.rows.resize(catalog.size() * static_cast<size_t>(seeds));
  PipelineConfig c = config;
  c.plan_motion = false;
  parallel_for(rep.rows.size(), [&](size_t i) {
    const ObjectTemplate& t = catalog[i / seeds];
    const std::uint64_t s = trial_seed(seed, i);
    Rng rng(s);
    CatalogRow row;
    row.name = t.name;
    row.seed = s;
    Scene scene;
    scene.id = "catalog";
    try_place(scene, t, "o-0", 0.0, 0.0, std::uniform_real_distribution<double>(-kPi, kPi)(rng), pick_color(t, rng),
              0.005);
    PipelineConfig cc = c;
    cc.grasp.seed = s;
    const auto gaze = gaze_at_pixel(label_centroid(render(scene, cc.camera), "o-0"), cc);
    const Session a = run_pipeline(scene, gaze, "Give me the " + t.name + ".", cc);
    row.unconstrained_ok = a.grasp.has_value();
    if (a.grasp) row.unconstrained_stability = a.grasp->best.stability;
    if (!t.parts.empty()) {
      const int k = static_cast<int>(i % static_cast<size_t>(seeds));
      const ObjectPart& part = t.parts[static_cast<size_t>(k) % t.parts.size()];
      row.constrained_part = part.name;
      const std::string utt = k % 2 == 0 ? fill(kRobotTemplates[0], t.name, part.name) : fill(kHumanTemplates[0], t.name, part.name);
      const Session b = run_pipeline(scene, gaze, utt, cc);
      row.constrained_ok = b.grasp.has_value();
      if (b.grasp) row.constrained_stability = b.grasp->best.stability;
    }
    rep.rows[i] = row;
  });
  return rep;
}

std::vector<Pose> random_targets(int count, std::uint64_t seed) {
  const ArmModel arm = default_arm();
  Rng rng(seed);
  std::uniform_real_distribution<double> xy(-0.2, 0.2), z(0.05, 0.35), yaw(-kPi, kPi), tilt(0.0, kPi / 4);
  Mat3 down;
  down << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  std::vector<Pose> out;
  while (static_cast<int>(out.size()) < count) {
    Pose p = Pose::Identity();
    p.translation() = Vec3(xy(rng), xy(rng), z(rng));
    const double axis_angle = yaw(rng);
    const Mat3 tilt_rot = Eigen::AngleAxisd(tilt(rng), Vec3(std::cos(axis_angle), std::sin(axis_angle), 0.0)).toRotationMatrix();
    p.linear() = tilt_rot * Eigen::AngleAxisd(yaw(rng), Vec3::UnitZ()).toRotationMatrix() * down;
    if (reachable(arm, p)) out.push_back(p);
  }
  return out;
}

int MotionReport::converged() const {
  return static_cast<int>(std::count_if(trials.begin(), trials.end(), [](const auto& t) { return t.converged; }));
}
bool MotionReport::energy_ok() const {
  return std::all_of(trials.begin(), trials.end(), [&](const auto& t) { return t.max_energy_rise <= energy_tolerance; });
}
bool MotionReport::limits_ok() const {
  return std::all_of(trials.begin(), trials.end(), [](const auto& t) { return t.within_limits && t.velocity_ok; });
}

MotionReport run_motion_suite(const MotionSuiteOptions& opt) {
  const ArmModel arm = default_arm();
  MotionReport rep;
  rep.energy_tolerance = opt.energy_k * opt.params.dt * opt.params.dt;
  const auto targets = random_targets(opt.targets, opt.seed);
  rep.trials.resize(targets.size());
  parallel_for(targets.size(), [&](size_t i) {
    MotionTrial t;
    t.target = targets[i];
    const JointTrajectory traj = integrate(arm, default_home(), targets[i], opt.params);
    t.converged = traj.converged;
    t.steps = static_cast<int>(traj.samples.size());
    t.final_pos_error = traj.final_pos_error;
    t.max_energy_rise = -std::numeric_limits<double>::infinity();
    for (size_t k = 1; k < traj.energy.size(); ++k) t.max_energy_rise = std::max(t.max_energy_rise, traj.energy[k] - traj.energy[k - 1]);
    std::array<int, 6> changes{};
    std::array<int, 6> last_sign{};
    for (const auto& s : traj.samples) {
      t.within_limits = t.within_limits && arm.within_limits(s.q);
      for (int j = 0; j < 6; ++j) {
        t.velocity_ok = t.velocity_ok && std::abs(s.q_dot[j]) <= arm.velocity_limit + 1e-12;
        const int sign = s.q_dot[j] > 1e-6 ? 1 : (s.q_dot[j] < -1e-6 ? -1 : 0);
        if (sign != 0) {
          if (last_sign[j] != 0 && sign != last_sign[j]) ++changes[j];
          last_sign[j] = sign;
        }
      }
    }
    t.max_sign_changes = *std::max_element(changes.begin(), changes.end());
    rep.trials[i] = t;
  });
  return rep;
}

TimingReport run_timing_suite(int runs, std::uint64_t seed, const PipelineConfig& config) {
  std::map<Stage, std::vector<double>> samples;
  TimingReport rep;
  rep.runs = runs;
  for (int i = 0; i < runs; ++i) {
    for (int attempt = 0; attempt < 20; ++attempt) {
      const std::uint64_t s = trial_seed(trial_seed(seed, static_cast<std::uint64_t>(i)), static_cast<std::uint64_t>(attempt));
      Rng rng(s);
      Scene scene;
      try {
        scene = generate_scene(s, 8, default_catalog());
      } catch (const Error&) {
        continue;
      }
      const RenderOutput r = render(scene, config.camera);
      std::vector<const SceneObject*> pool;
      for (const auto& o : scene.objects)
        if (label_pixels(r, o.id) >= 200) pool.push_back(&o);
      if (pool.empty()) continue;
      const SceneObject& target = *pick(pool, rng);
      // Timed serially so stages do not compete for cores.
      const Session sess = run_pipeline(scene, gaze_at_pixel(label_centroid(r, target.id), config, 30, 1.0, rng()),
                                        "Give me the " + target.name + ".", config);
      rep.executed += sess.status == SessionStatus::kExecuted;
      for (const auto& [stage, secs] : sess.timings) samples[stage].push_back(secs);
      break;
    }
  }
  double worst = -1.0;
  for (auto& [stage, v] : samples) {
    std::sort(v.begin(), v.end());
    StageStats st;
    st.stage = stage;
    st.samples = static_cast<int>(v.size());
    for (double x : v) st.mean += x / v.size();
    st.median = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
    st.max = v.back();
    if (st.mean > worst) {
      worst = st.mean;
      rep.dominant = stage;
    }
    rep.stages.push_back(st);
  }
  return rep;
}

nlohmann::json to_json(const SelectionReport& r) {
  nlohmann::json arms = nlohmann::json::array();
  for (const auto& a : r.arms)
    arms.push_back({{"arm", to_string(a.arm)}, {"trials", a.trials}, {"correct", a.correct}, {"accuracy", a.accuracy()}});
  nlohmann::json j{{"arms", arms},
                   {"skipped", r.skipped},
                   {"gaze", {{"samples", r.gaze.samples},
                             {"success_rate", r.gaze.success_rate},
                             {"eval_iou", r.gaze.eval_iou},
                             {"mse_px", r.gaze.mse_px}}}};
  const ArmResult *both = r.find(Arm::kBoth), *gaze = r.find(Arm::kGaze), *lang = r.find(Arm::kLanguage);
  if (both && gaze) j["both_minus_gaze"] = both->accuracy() - gaze->accuracy();
  if (both && lang) j["both_minus_language"] = both->accuracy() - lang->accuracy();
  return j;
}

nlohmann::json to_json(const GapReport& r) {
  auto point = [](const GapPoint& p) {
    return nlohmann::json{{"size", to_string(p.size)}, {"gap", p.gap}, {"trials", p.trials}, {"correct", p.correct}, {"rate", p.rate()}};
  };
  nlohmann::json ladder = nlohmann::json::array(), thr = nlohmann::json::array(), mins = nlohmann::json::object();
  for (const auto& p : r.ladder) ladder.push_back(point(p));
  for (const auto& p : r.at_threshold) thr.push_back(point(p));
  for (const auto& [c, g] : r.min_working_gap) mins[to_string(c)] = g ? nlohmann::json(*g) : nlohmann::json(nullptr);
  return {{"ladder", ladder}, {"at_threshold", thr}, {"min_working_gap", mins}, {"monotone", r.monotone}};
}

nlohmann::json to_json(const GraspReport& r) {
  auto trial = [](const GraspTrial& t) {
    nlohmann::json j{{"scene", t.scene}, {"object_id", t.object_id}, {"object", t.object_name}, {"holder", to_string(t.holder)},
                     {"utterance", t.utterance}, {"planned", t.planned}};
    if (t.part) j["part"] = *t.part;
    if (t.planned) {
      j["chosen_id"] = t.chosen_id;
      j["permitted"] = t.permitted;
      j["on_standard"] = t.on_standard;
      j["stability"] = t.stability;
    } else {
      j["failure"] = t.failure;
    }
    return j;
  };
  nlohmann::json spec = nlohmann::json::array(), unspec = nlohmann::json::array();
  for (const auto& t : r.specified) spec.push_back(trial(t));
  for (const auto& t : r.unspecified) unspec.push_back(trial(t));
  return {{"specified", {{"trials", r.specified.size()}, {"planned", r.specified_planned()},
                         {"permitted", r.specified_permitted()}, {"records", spec}}},
          {"unspecified", {{"trials", r.unspecified.size()}, {"planned", r.unspecified_planned()},
                           {"avoiding_standard", r.unspecified_avoiding()}, {"records", unspec}}}};
}

nlohmann::json to_json(const CatalogReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"object", row.name}, {"seed", row.seed}, {"unconstrained", row.unconstrained_ok},
                    {"constrained_part", row.constrained_part}, {"constrained", row.constrained_ok}});
  return {{"rows", rows}, {"unconstrained_rate", r.unconstrained_rate()}, {"constrained_rate", r.constrained_rate()}};
}

nlohmann::json to_json(const MotionReport& r) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials)
    trials.push_back({{"target", pose_to_json(t.target)}, {"converged", t.converged}, {"steps", t.steps},
                      {"final_pos_error", t.final_pos_error}, {"max_energy_rise", t.max_energy_rise},
                      {"within_limits", t.within_limits}, {"velocity_ok", t.velocity_ok},
                      {"max_sign_changes", t.max_sign_changes}});
  return {{"targets", r.trials.size()}, {"converged", r.converged()}, {"energy_tolerance", r.energy_tolerance},
          {"energy_ok", r.energy_ok()}, {"limits_ok", r.limits_ok()}, {"trials", trials}};
}

nlohmann::json to_json(const TimingReport& r) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : r.stages)
    stages.push_back({{"stage", to_string(s.stage)}, {"samples", s.samples}, {"mean_s", s.mean}, {"median_s", s.median}, {"max_s", s.max}});
  return {{"runs", r.runs}, {"executed", r.executed}, {"dominant", to_string(r.dominant)}, {"stages", stages}};
}

std::string format_table(const SelectionReport& r) {
  std::string out = "arm        trials  correct  accuracy\n";
  for (const auto& a : r.arms) {
    char line[128];
    std::snprintf(line, sizeof line, "%-9s  %6d  %7d  %8.3f\n", to_string(a.arm).c_str(), a.trials, a.correct, a.accuracy());
    out += line;
  }
  out += "gaze-only heatmap: SR " + fmt("%.3f", r.gaze.success_rate) + "  IoU " + fmt("%.3f", r.gaze.eval_iou) +
         "  MSE " + fmt("%.2f", r.gaze.mse_px) + " px^2\n";
  const ArmResult *both = r.find(Arm::kBoth), *gaze = r.find(Arm::kGaze), *lang = r.find(Arm::kLanguage);
  if (both && gaze) out += "both - gaze:     " + fmt("%+.3f", both->accuracy() - gaze->accuracy()) + "\n";
  if (both && lang) out += "both - language: " + fmt("%+.3f", both->accuracy() - lang->accuracy()) + "\n";
  return out;
}

std::string format_table(const GapReport& r) {
  std::string out = "size    gap_cm  trials  rate\n";
  auto row = [&](const GapPoint& p, const char* tag) {
    char line[128];
    std::snprintf(line, sizeof line, "%-6s  %6.2f  %6d  %.3f%s\n", to_string(p.size).c_str(), p.gap * 100, p.trials, p.rate(), tag);
    out += line;
  };
  for (const auto& p : r.ladder) row(p, "");
  for (const auto& p : r.at_threshold) row(p, "  (threshold)");
  for (const auto& [c, g] : r.min_working_gap)
    out += "min working gap " + to_string(c) + ": " + (g ? fmt("%.2f cm", *g * 100) : std::string("none")) + "\n";
  out += std::string("monotone: ") + (r.monotone ? "yes" : "no") + "\n";
  return out;
}

std::string format_table(const GraspReport& r) {
  std::string out;
  out += "preference given:  " + std::to_string(r.specified_planned()) + "/" + std::to_string(r.specified.size()) +
         " planned, " + std::to_string(r.specified_permitted()) + " with both contacts permitted\n";
  out += "no preference:     " + std::to_string(r.unspecified_planned()) + "/" + std::to_string(r.unspecified.size()) +
         " planned, " + std::to_string(r.unspecified_avoiding()) + " clear of the standard grasp part\n";
  return out;
}

std::string format_table(const CatalogReport& r) {
  std::string out = "object          seed                  plain  part        with-part\n";
  for (const auto& row : r.rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%-14s  %20llu  %-5s  %-10s  %s\n", row.name.c_str(),
                  static_cast<unsigned long long>(row.seed), row.unconstrained_ok ? "ok" : "FAIL",
                  row.constrained_part.empty() ? "-" : row.constrained_part.c_str(),
                  row.constrained_part.empty() ? "-" : (row.constrained_ok ? "ok" : "FAIL"));
    out += line;
  }
  out += "success without part: " + fmt("%.3f", r.unconstrained_rate()) + ", with part: " + fmt("%.3f", r.constrained_rate()) + "\n";
  return out;
}

std::string format_table(const MotionReport& r) {
  int worst_sign = 0, max_steps = 0;
  double worst_rise = -1e300;
  for (const auto& t : r.trials) {
    worst_sign = std::max(worst_sign, t.max_sign_changes);
    worst_rise = std::max(worst_rise, t.max_energy_rise);
    max_steps = std::max(max_steps, t.steps);
  }
  std::string out = "converged " + std::to_string(r.converged()) + "/" + std::to_string(r.trials.size()) + "\n";
  out += "max energy rise per step " + fmt("%.3e", worst_rise) + " (tolerance " + fmt("%.3e", r.energy_tolerance) + ")\n";
  out += "longest trajectory " + std::to_string(max_steps) + " samples, max velocity sign changes " + std::to_string(worst_sign) + "\n";
  out += std::string("joint and velocity limits respected: ") + (r.limits_ok() ? "yes" : "no") + "\n";
  return out;
}

std::string format_table(const TimingReport& r) {
  std::string out = "stage    samples  mean_s    median_s  max_s\n";
  for (const auto& s : r.stages) {
    char line[128];
    std::snprintf(line, sizeof line, "%-7s  %7d  %8.4f  %8.4f  %8.4f\n", to_string(s.stage).c_str(), s.samples, s.mean, s.median, s.max);
    out += line;
  }
  out += "dominant stage: " + to_string(r.dominant) + " (" + std::to_string(r.executed) + "/" + std::to_string(r.runs) + " executed)\n";
  return out;
}

}  // namespace handover
