#include "handover/grasp_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "handover/error.hpp"

namespace handover {

void GripperModel::validate() const {
  if (!(max_width > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gripper max_width must be positive");
  if (contact_template.empty()) throw Error(ErrorCode::kInvalidArgument, "gripper contact template is empty");
}

std::vector<Vec3> GripperModel::contact_cloud(double width) const {
  std::vector<Vec3> out;
  out.reserve(contact_template.size());
  const double s = width / max_width;
  for (const auto& p : contact_template) out.emplace_back(p.x(), p.y() * s, p.z());
  return out;
}

GripperModel default_gripper() {
  GripperModel g;
  for (double side : {-1.0, 1.0})
    for (double x : {-g.pad_half_width, 0.0, g.pad_half_width})
      for (double z : {-g.finger_depth, -g.finger_depth * 2 / 3, -g.finger_depth / 3, 0.0})
        g.contact_template.emplace_back(x, side * g.max_width / 2, z);
  for (int i = 0; i <= 4; ++i) g.contact_template.emplace_back(0.0, (i / 2.0 - 1.0) * g.max_width / 2, -g.finger_depth);
  return g;
}

namespace {

struct Volume {
  Vec3 lo, hi;  // gripper-frame box
};

std::vector<Vec3> volume_points(const Volume& v, int nx, int ny, int nz) {
  std::vector<Vec3> pts;
  auto lerp = [](double a, double b, int i, int n) { return n == 1 ? 0.5 * (a + b) : a + (b - a) * i / (n - 1); };
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k)
        pts.emplace_back(lerp(v.lo.x(), v.hi.x(), i, nx), lerp(v.lo.y(), v.hi.y(), j, ny), lerp(v.lo.z(), v.hi.z(), k, nz));
  return pts;
}

// Finger pads and palm, sampled in the gripper frame for an opening `w`.
std::vector<Vec3> body_samples(const GripperModel& g, double w) {
  std::vector<Vec3> pts;
  const double inner = w / 2 + 0.001, outer = w / 2 + g.finger_thickness;
  for (double side : {-1.0, 1.0}) {
    Volume f{Vec3(-g.pad_half_width, side > 0 ? inner : -outer, -g.finger_depth),
             Vec3(g.pad_half_width, side > 0 ? outer : -inner, g.tip_margin)};
    auto p = volume_points(f, 3, 2, 6);
    pts.insert(pts.end(), p.begin(), p.end());
  }
  Volume palm{Vec3(-g.pad_half_width, -outer, -g.finger_depth - g.palm_thickness),
              Vec3(g.pad_half_width, outer, -g.finger_depth - 0.001)};
  auto p = volume_points(palm, 3, 7, 2);
  pts.insert(pts.end(), p.begin(), p.end());
  return pts;
}

bool collides(const Pose& pose, const std::vector<Vec3>& samples, const GraspSamplingOptions& opt,
              const std::vector<std::pair<Vec3, double>>& spheres, double reach) {
  const Vec3 c = pose.translation();
  std::vector<size_t> near;
  for (size_t i = 0; i < opt.obstacles.size(); ++i)
    if ((spheres[i].first - c).norm() < spheres[i].second + reach) near.push_back(i);
  for (const auto& s : samples) {
    const Vec3 p = pose * s;
    if (opt.check_table && p.z() < opt.table_z + 1e-4) return true;
    for (size_t i : near)
      if (signed_distance(opt.obstacles[i], p) < 0.0) return true;
  }
  return false;
}

}  // namespace

std::vector<GraspCandidate> sample_grasps(const PointCloud& input, const GripperModel& gripper, int count,
                                          std::uint64_t seed, const GraspSamplingOptions& opt) {
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "grasp count must be >= 1");
  if (input.size() < 20) throw Error(ErrorCode::kNoGrasp, "cloud too small for grasp sampling");
  PointCloud cloud = input;
  if (!cloud.has_normals()) estimate_normals(cloud);

  const Vec3 mean = centroid(cloud);
  Mat3 cov = Mat3::Zero();
  for (const auto& p : cloud.points) cov += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov / static_cast<double>(cloud.size()));
  if (es.eigenvalues()(1) < 1e-10) throw Error(ErrorCode::kNoGrasp, "degenerate cloud: points do not span a surface");

  const size_t n = cloud.size();
  std::vector<size_t> seeds;
  for (size_t i = 0; i < n; ++i)
    if (opt.allowed.empty() || opt.allowed[i]) seeds.push_back(i);
  Rng rng(seed);
  std::shuffle(seeds.begin(), seeds.end(), rng);
  const size_t attempts = std::min(seeds.size(), static_cast<size_t>(count) * 40);

  std::vector<std::pair<Vec3, double>> spheres;
  for (const auto& o : opt.obstacles) spheres.emplace_back(o.pose.translation(), bounding_radius(o.primitive));
  const double reach = gripper.max_width / 2 + gripper.finger_thickness + gripper.finger_depth + gripper.palm_thickness +
                       gripper.pad_half_width;

  std::vector<GraspCandidate> out;
  const double tube2 = opt.tube_radius * opt.tube_radius;
  for (size_t a = 0; a < attempts && static_cast<int>(out.size()) < count; ++a) {
    const size_t i = seeds[a];
    const Vec3 d = -cloud.normals[i].normalized();
    const Vec3& origin = cloud.points[i];
    double s_min = std::numeric_limits<double>::infinity(), s_max = -s_min;
    size_t j_min = i, j_max = i;
    for (size_t j = 0; j < n; ++j) {
      const Vec3 r = cloud.points[j] - origin;
      const double s = r.dot(d);
      if ((r - s * d).squaredNorm() > tube2) continue;
      if (s < s_min) s_min = s, j_min = j;
      if (s > s_max) s_max = s, j_max = j;
    }
    const double width = s_max - s_min;
    if (width < 0.002 || width > gripper.max_width) continue;
    const Vec3& n1 = cloud.normals[j_min];
    const Vec3& n2 = cloud.normals[j_max];
    if (!(n1.dot(d) < -opt.min_alignment && n2.dot(d) > opt.min_alignment)) continue;
    if (!opt.allowed.empty() && !(opt.allowed[j_min] && opt.allowed[j_max])) continue;

    bool duplicate = false;
    for (const auto& g : out)
      if ((g.contacts[0] - cloud.points[j_min]).norm() < 0.003 && (g.contacts[1] - cloud.points[j_max]).norm() < 0.003)
        duplicate = true;
    if (duplicate) continue;

    const Vec3 center = origin + d * (0.5 * (s_min + s_max));
    Vec3 e0 = -Vec3::UnitZ() - (-Vec3::UnitZ()).dot(d) * d;
    if (e0.norm() < 1e-6) e0 = d.unitOrthogonal();
    e0.normalize();
    const Vec3 e1 = d.cross(e0);
    const auto samples = body_samples(gripper, width);

    // Try approach angles in order of tilt away from straight down.
    std::vector<double> angles;
    const int m = std::max(1, opt.approach_angles);
    for (int k = 0; k < m; ++k) angles.push_back(2.0 * std::numbers::pi * k / m);
    std::stable_sort(angles.begin(), angles.end(), [](double x, double y) { return std::cos(x) > std::cos(y); });
    for (double th : angles) {
      const Vec3 approach = std::cos(th) * e0 + std::sin(th) * e1;
      Pose pose = Pose::Identity();
      pose.linear().col(1) = d;
      pose.linear().col(2) = approach;
      pose.linear().col(0) = d.cross(approach);
      pose.translation() = center;
      if (collides(pose, samples, opt, spheres, reach)) continue;
      GraspCandidate g;
      g.pose = pose;
      g.width = width;
      g.approach = approach;
      g.contacts = {cloud.points[j_min], cloud.points[j_max]};
      g.normals = {n1, n2};
      g.stability = std::clamp(0.5 * (std::abs(n1.dot(d)) + std::abs(n2.dot(d))), 0.0, 1.0);
      out.push_back(g);
      break;
    }
  }
  if (out.empty()) throw Error(ErrorCode::kNoGrasp, "no feasible antipodal grasp found");
  return out;
}

std::vector<HandPose> predict_hands(const PointCloud& object_cloud, const SceneObject& object, int count,
                                    std::uint64_t seed) {
  PointCloud cloud = object_cloud;
  if (!cloud.has_normals()) estimate_normals(cloud);
  const ObjectPart* part = object.standard_part();
  const Vec3 user = Vec3::UnitY();

  std::vector<size_t> pool, facing;
  if (part) {
    for (size_t i = 0; i < cloud.size(); ++i)
      if (part_contains(object, *part, cloud.points[i])) pool.push_back(i);
  }
  if (pool.empty()) {
    // Body fallback: points closest to the centroid.
    const Vec3 c = centroid(cloud);
    std::vector<size_t> idx(cloud.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
      return (cloud.points[a] - c).squaredNorm() < (cloud.points[b] - c).squaredNorm();
    });
    idx.resize(std::max<size_t>(1, idx.size() / 3));
    pool = idx;
    part = nullptr;
  }
  for (size_t i : pool)
    if (cloud.normals[i].dot(user) > 0.2) facing.push_back(i);
  if (!facing.empty()) pool = facing;

  Rng rng(seed);
  std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
  std::normal_distribution<double> jitter(0.0, 0.1);
  std::vector<HandPose> hands;
  for (int h = 0; h < std::max(count, 1); ++h) {
    const size_t i = pool[pick(rng)];
    HandPose hp;
    hp.anchor = cloud.points[i];
    if (part) hp.anchored_part = part->name;
    const Vec3 outward = (cloud.normals[i] + Vec3(jitter(rng), 0.8 + jitter(rng), 0.3 + jitter(rng))).normalized();
    hp.approach = -outward;
    const Vec3 palm = hp.anchor + 0.025 * outward;
    const Vec3 up = std::abs(outward.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    const Vec3 t1 = outward.cross(up).normalized();
    const Vec3 t2 = outward.cross(t1);
    hp.cloud.push_back(palm);
    for (int k = 0; k < 8; ++k) {
      const double a = 2.0 * std::numbers::pi * k / 8;
      hp.cloud.push_back(palm + 0.02 * (std::cos(a) * t1 + std::sin(a) * t2));
    }
    for (int k = 0; k < 9; ++k) {
      const double a = 2.0 * std::numbers::pi * k / 9;
      hp.cloud.push_back(palm + 0.04 * (std::cos(a) * t1 + std::sin(a) * t2));
    }
    for (int f = 0; f < 5; ++f) {
      const double a = std::numbers::pi * (-0.6 + 0.3 * f);
      const Vec3 radial = std::cos(a) * t2 + std::sin(a) * t1;
      const Vec3 root = palm + 0.04 * radial;
      for (int j = 1; j <= 6; ++j) hp.cloud.push_back(root + hp.approach * (0.012 * j) - radial * (0.004 * j));
    }
    hands.push_back(std::move(hp));
  }
  return hands;
}

double distance_measure(const std::vector<Vec3>& g, const std::vector<Vec3>& h, bool squared) {
  if (g.empty() || h.empty()) throw Error(ErrorCode::kEmptyInput, "distance measure needs non-empty clouds");
  double s = 0.0;
  for (const auto& x : g)
    for (const auto& y : h) s += squared ? (x - y).squaredNorm() : (x - y).norm();
  return s / (static_cast<double>(g.size()) * static_cast<double>(h.size()));
}

double angle_measure(const Vec3& a_g, const Vec3& a_h) {
  if (std::abs(a_g.norm() - 1.0) > 1e-6 || std::abs(a_h.norm() - 1.0) > 1e-6)
    throw Error(ErrorCode::kInvalidArgument, "approach vectors must be unit length");
  return std::clamp(-a_g.dot(a_h), -1.0, 1.0);
}

std::vector<Vec3> gripper_cloud(const GraspCandidate& grasp, const GripperModel& gripper) {
  std::vector<Vec3> out;
  for (const auto& p : gripper.contact_cloud(grasp.width)) out.push_back(grasp.pose * p);
  return out;
}

std::vector<std::pair<GraspCandidate, double>> cograsp_score(const std::vector<GraspCandidate>& grasps,
                                                             const std::vector<HandPose>& hands,
                                                             const GripperModel& gripper, double scale, bool squared) {
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cograsp scale must be positive");
  std::vector<std::pair<GraspCandidate, double>> out;
  for (const auto& g : grasps) {
    const auto pc_g = gripper_cloud(g, gripper);
    double worst = std::numeric_limits<double>::infinity();
    GraspCandidate scored = g;
    for (const auto& h : hands) {
      const double sd = distance_measure(pc_g, h.cloud, squared);
      const double sa = angle_measure(g.approach, h.approach);
      const double c = sd / (scale * scale) + sa;
      if (c < worst) {
        worst = c;
        scored.s_d = sd;
        scored.s_a = sa;
      }
    }
    scored.cograsp_score = worst;
    out.emplace_back(std::move(scored), worst);
  }
  return out;
}

bool contact_permitted(const Vec3& p, const SceneObject& object, const PixelRegion& region, const CameraModel& camera,
                       const std::optional<std::string>& part, Holder holder) {
  const Vec2 px = project(p, camera);
  if (!region.contains(static_cast<int>(std::lround(px.x())), static_cast<int>(std::lround(px.y())))) return false;
  if (!part || holder == Holder::kNone) return true;
  const ObjectPart* op = object.find_part(*part);
  if (!op) return false;
  const bool on_part = part_contains(object, *op, p);
  return holder == Holder::kRobot ? on_part : !on_part;
}

GraspPlan plan_grasp(const RenderOutput& render, const CameraModel& camera, const SelectionResult& selection,
                     const ParsedCommand& command, const Scene& scene, const GripperModel& gripper,
                     const GraspPlanOptions& options) {
  gripper.validate();
  const SceneObject& object = scene.at(selection.chosen.object_id);
  const PixelRegion region = selection.part_region.value_or(PixelRegion{selection.chosen.box, std::nullopt});
  const Holder holder = command.part ? command.holder : Holder::kNone;

  GraspPlan plan;
  const PointCloud observed = extract_point_cloud(selection.chosen.box, render, camera, object.id);
  const PointCloud cleaned = remove_outliers(observed, options.outlier_k, options.outlier_std_ratio);
  plan.observed_points = cleaned.size();
  const PointCloud completed = complete_cloud(cleaned, scene, object.id, options.completion_samples, options.seed);

  GraspSamplingOptions sampling;
  sampling.allowed.resize(completed.size());
  for (size_t i = 0; i < completed.size(); ++i) {
    sampling.allowed[i] = contact_permitted(completed.points[i], object, region, camera, command.part, holder);
    plan.permitted_points += sampling.allowed[i];
  }
  if (plan.permitted_points == 0) {
    if (holder != Holder::kNone)
      throw Error(ErrorCode::kPartCloudEmpty, "no object points inside the permitted part region");
    throw Error(ErrorCode::kNoGrasp, "object cloud is empty");
  }
  for (const auto& o : scene.objects) {
    auto prims = o.world_primitives();
    sampling.obstacles.insert(sampling.obstacles.end(), prims.begin(), prims.end());
  }

  std::vector<GraspCandidate> grasps;
  for (auto& g : sample_grasps(completed, gripper, options.grasp_count, options.seed, sampling))
    if (g.stability >= options.min_stability) grasps.push_back(g);
  if (grasps.empty()) throw Error(ErrorCode::kNoGrasp, "no grasp reaches the stability threshold");

  if (holder != Holder::kNone) {
    size_t best = 0;
    for (size_t i = 1; i < grasps.size(); ++i)
      if (grasps[i].stability > grasps[best].stability) best = i;
    plan.best = grasps[best];
    plan.candidates = std::move(grasps);
    return plan;
  }

  plan.used_cograsp = true;
  plan.hands = predict_hands(completed, object, options.hand_count, options.seed);
  const double scale = options.scale_by_diameter ? 2.0 * object.bounding_sphere().second : options.cograsp_scale;
  auto scored = cograsp_score(grasps, plan.hands, gripper, scale, options.squared_distance);
  size_t best = 0;
  for (size_t i = 1; i < scored.size(); ++i)
    if (scored[i].second > scored[best].second) best = i;
  plan.best = scored[best].first;
  for (auto& s : scored) plan.candidates.push_back(std::move(s.first));
  return plan;
}

namespace {
nlohmann::json vec(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }
Vec3 vec_from(const nlohmann::json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }
}  // namespace

nlohmann::json to_json(const GraspCandidate& g) {
  nlohmann::json j{{"pose", pose_to_json(g.pose)},
                   {"width", g.width},
                   {"approach", vec(g.approach)},
                   {"contacts", {vec(g.contacts[0]), vec(g.contacts[1])}},
                   {"normals", {vec(g.normals[0]), vec(g.normals[1])}},
                   {"stability", g.stability},
                   {"s_d", g.s_d},
                   {"s_a", g.s_a}};
  j["cograsp_score"] = g.cograsp_score ? nlohmann::json(*g.cograsp_score) : nlohmann::json(nullptr);
  return j;
}

GraspCandidate grasp_from_json(const nlohmann::json& j) {
  GraspCandidate g;
  g.pose = pose_from_json(j.at("pose"));
  g.width = j.at("width");
  g.approach = vec_from(j.at("approach"));
  g.contacts = {vec_from(j.at("contacts").at(0)), vec_from(j.at("contacts").at(1))};
  g.normals = {vec_from(j.at("normals").at(0)), vec_from(j.at("normals").at(1))};
  g.stability = j.at("stability");
  g.s_d = j.value("s_d", 0.0);
  g.s_a = j.value("s_a", 0.0);
  if (j.contains("cograsp_score") && !j["cograsp_score"].is_null()) g.cograsp_score = j["cograsp_score"].get<double>();
  return g;
}

nlohmann::json grasp_debug_dump(const GraspPlan& plan) {
  nlohmann::json cands = nlohmann::json::array();
  long chosen = -1;
  for (size_t i = 0; i < plan.candidates.size(); ++i) {
    cands.push_back(to_json(plan.candidates[i]));
    if (plan.candidates[i].contacts == plan.best.contacts && plan.candidates[i].pose.matrix() == plan.best.pose.matrix())
      chosen = static_cast<long>(i);
  }
  nlohmann::json hands = nlohmann::json::array();
  for (const auto& h : plan.hands) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : h.cloud) pts.push_back(vec(p));
    hands.push_back({{"anchor", vec(h.anchor)},
                     {"approach", vec(h.approach)},
                     {"part", h.anchored_part ? nlohmann::json(*h.anchored_part) : nlohmann::json(nullptr)},
                     {"cloud", pts}});
  }
  return {{"best", to_json(plan.best)},
          {"candidates", cands},
          {"hands", hands},
          {"chosen", chosen},
          {"used_cograsp", plan.used_cograsp},
          {"observed_points", plan.observed_points},
          {"permitted_points", plan.permitted_points}};
}

std::vector<size_t> ranked_candidates(const GraspPlan& plan) {
  std::vector<size_t> order(plan.candidates.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto key = [&](size_t i) {
    const auto& c = plan.candidates[i];
    return plan.used_cograsp ? c.cograsp_score.value_or(-1e300) : c.stability;
  };
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return key(a) > key(b); });
  return order;
}

GraspPlan grasp_plan_from_json(const nlohmann::json& j) {
  GraspPlan plan;
  plan.best = grasp_from_json(j.at("best"));
  for (const auto& c : j.at("candidates")) plan.candidates.push_back(grasp_from_json(c));
  for (const auto& h : j.value("hands", nlohmann::json::array())) {
    HandPose hp;
    hp.anchor = vec_from(h.at("anchor"));
    hp.approach = vec_from(h.at("approach"));
    if (h.contains("part") && !h["part"].is_null()) hp.anchored_part = h["part"].get<std::string>();
    for (const auto& p : h.at("cloud")) hp.cloud.push_back(vec_from(p));
    plan.hands.push_back(std::move(hp));
  }
  plan.used_cograsp = j.value("used_cograsp", false);
  plan.observed_points = j.value("observed_points", size_t{0});
  plan.permitted_points = j.value("permitted_points", size_t{0});
  return plan;
}

}  // namespace handover
