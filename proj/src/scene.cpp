#include "handover/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "handover/error.hpp"

namespace handover {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kSceneOverflow: return "scene-overflow";
    case ErrorCode::kUnknownObject: return "unknown-object";
    case ErrorCode::kDegenerateDirection: return "degenerate-direction";
    case ErrorCode::kNoIntersection: return "no-intersection";
    case ErrorCode::kBehindViewer: return "behind-viewer";
    case ErrorCode::kTargetOutsideMonitor: return "target-outside-monitor";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kNoObject: return "no-object";
    case ErrorCode::kNoCandidate: return "no-candidate";
    case ErrorCode::kPartNotFound: return "part-not-found";
    case ErrorCode::kNoGrasp: return "no-grasp";
    case ErrorCode::kPartCloudEmpty: return "part-cloud-empty";
    case ErrorCode::kOutOfLimits: return "out-of-limits";
    case ErrorCode::kUnreachable: return "unreachable";
    case ErrorCode::kNotConverged: return "not-converged";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

std::string to_string(SizeClass c) {
  switch (c) {
    case SizeClass::kSmall: return "small";
    case SizeClass::kMedium: return "medium";
    case SizeClass::kLarge: return "large";
  }
  return "medium";
}

SizeClass size_class_from_string(const std::string& s) {
  if (s == "small") return SizeClass::kSmall;
  if (s == "medium") return SizeClass::kMedium;
  if (s == "large") return SizeClass::kLarge;
  throw Error(ErrorCode::kParse, "unknown size class '" + s + "'");
}

SizeClass classify_width(double w) {
  constexpr double kSmallMax = 0.01, kMediumMin = 0.02, kMediumMax = 0.04, kLargeMin = 0.08;
  if (w < kSmallMax) return SizeClass::kSmall;
  if (w < kMediumMin) return (w - kSmallMax) <= (kMediumMin - w) ? SizeClass::kSmall : SizeClass::kMedium;
  if (w <= kMediumMax) return SizeClass::kMedium;
  if (w <= kLargeMin) return (w - kMediumMax) <= (kLargeMin - w) ? SizeClass::kMedium : SizeClass::kLarge;
  return SizeClass::kLarge;
}

std::vector<WorldPrimitive> SceneObject::world_primitives() const {
  std::vector<WorldPrimitive> out;
  for (const auto& p : flatten(shape)) out.push_back({p.primitive, pose * p.offset});
  return out;
}

const ObjectPart* SceneObject::find_part(const std::string& part_name) const {
  for (const auto& p : parts)
    if (p.name == part_name) return &p;
  return nullptr;
}

const ObjectPart* SceneObject::standard_part() const {
  const ObjectPart* first = nullptr;
  for (const auto& p : parts) {
    if (!p.standard_grasp) continue;
    if (p.primary) return &p;
    if (!first) first = &p;
  }
  return first;
}

double SceneObject::footprint_width() const {
  // Extent of the shape along horizontal directions in the object frame.
  double best = 0.0;
  const auto prims = flatten(shape);
  for (int k = 0; k < 180; ++k) {
    const double a = std::numbers::pi * k / 180.0;
    const Vec3 d(std::cos(a), std::sin(a), 0.0);
    double hi = -std::numeric_limits<double>::infinity(), lo = std::numeric_limits<double>::infinity();
    for (const auto& p : prims) {
      const WorldPrimitive wp{p.primitive, p.offset};
      hi = std::max(hi, d.dot(support(wp, d)));
      lo = std::min(lo, d.dot(support(wp, -d)));
    }
    best = std::max(best, hi - lo);
  }
  return best;
}

std::pair<Vec3, double> SceneObject::bounding_sphere() const {
  const auto prims = world_primitives();
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& p : prims) {
    for (int i = 0; i < 3; ++i) {
      const Vec3 e = Vec3::Unit(i);
      hi[i] = std::max(hi[i], support(p, e)[i]);
      lo[i] = std::min(lo[i], support(p, -e)[i]);
    }
  }
  const Vec3 c = 0.5 * (lo + hi);
  double r = 0.0;
  for (const auto& p : prims) r = std::max(r, (p.pose.translation() - c).norm() + bounding_radius(p.primitive));
  return {c, r};
}

const SceneObject* Scene::find(const std::string& object_id) const {
  for (const auto& o : objects)
    if (o.id == object_id) return &o;
  return nullptr;
}

const SceneObject& Scene::at(const std::string& object_id) const {
  if (const auto* o = find(object_id)) return *o;
  throw Error(ErrorCode::kUnknownObject, "unknown object id '" + object_id + "'");
}

SceneObject instantiate(const ObjectTemplate& tmpl, const std::string& id, const Pose& pose,
                        const std::string& color) {
  SceneObject o;
  o.id = id;
  o.name = tmpl.name;
  o.synonyms = tmpl.synonyms;
  if (!color.empty()) o.attributes.push_back(color);
  o.shape = tmpl.shape;
  o.pose = pose;
  o.parts = tmpl.parts;
  o.size_class = classify_width(o.footprint_width());
  return o;
}

void validate(const SceneObject& o) {
  auto fail = [&](const std::string& why) { throw Error(ErrorCode::kInvalidArgument, "object '" + o.id + "': " + why); };
  if (o.name.empty()) fail("name must be non-empty");
  const auto prims = flatten(o.shape);
  if (prims.empty()) fail("composite shape needs at least one primitive");
  for (const auto& p : prims)
    if (!is_valid(p.primitive)) fail("primitive with non-positive dimensions");
  if (classify_width(o.footprint_width()) != o.size_class) fail("size class inconsistent with footprint width");
  int primaries = 0;
  for (const auto& part : o.parts) {
    if (part.primitives.empty()) fail("part '" + part.name + "' has an empty region");
    for (int idx : part.primitives)
      if (idx < 0 || idx >= static_cast<int>(prims.size())) fail("part '" + part.name + "' indexes a missing primitive");
    if (part.standard_grasp && part.primary) ++primaries;
  }
  if (primaries > 1) fail("more than one primary standard-grasp part");
}

bool fits_on_table(const SceneObject& object, const Table& table, double margin) {
  for (const auto& p : object.world_primitives()) {
    if (support(p, Vec3::UnitX()).x() > table.width / 2 - margin) return false;
    if (support(p, -Vec3::UnitX()).x() < -table.width / 2 + margin) return false;
    if (support(p, Vec3::UnitY()).y() > table.depth / 2 - margin) return false;
    if (support(p, -Vec3::UnitY()).y() < -table.depth / 2 + margin) return false;
  }
  return true;
}

double surface_gap(const SceneObject& a, const SceneObject& b) {
  double best = std::numeric_limits<double>::infinity();
  const auto pa = a.world_primitives();
  const auto pb = b.world_primitives();
  for (const auto& x : pa)
    for (const auto& y : pb) best = std::min(best, convex_distance(x, y));
  return best;
}

void validate(const Scene& scene) {
  for (const auto& o : scene.objects) {
    validate(o);
    if (!fits_on_table(o, scene.table))
      throw Error(ErrorCode::kInvalidArgument, "object '" + o.id + "' footprint leaves the table");
  }
  for (size_t i = 0; i < scene.objects.size(); ++i)
    for (size_t j = i + 1; j < scene.objects.size(); ++j) {
      if (scene.objects[i].id == scene.objects[j].id)
        throw Error(ErrorCode::kInvalidArgument, "duplicate object id '" + scene.objects[i].id + "'");
      if (surface_gap(scene.objects[i], scene.objects[j]) <= 0.0)
        throw Error(ErrorCode::kInvalidArgument,
                    "objects '" + scene.objects[i].id + "' and '" + scene.objects[j].id + "' interpenetrate");
    }
}

int nearest_primitive(const SceneObject& object, const Vec3& world_point) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  const auto prims = object.world_primitives();
  for (size_t i = 0; i < prims.size(); ++i) {
    const double d = std::abs(signed_distance(prims[i], world_point));
    if (d < best_d - 1e-12) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

double surface_distance(const SceneObject& object, const Vec3& world_point) {
  double sd = std::numeric_limits<double>::infinity();
  for (const auto& p : object.world_primitives()) sd = std::min(sd, signed_distance(p, world_point));
  return std::abs(sd);
}

bool part_contains(const SceneObject& object, const ObjectPart& part, const Vec3& world_point) {
  const int idx = nearest_primitive(object, world_point);
  if (std::find(part.primitives.begin(), part.primitives.end(), idx) == part.primitives.end()) return false;
  if (part.clip && !part.clip->contains(object.pose.inverse() * world_point)) return false;
  return true;
}

bool try_place(Scene& scene, const ObjectTemplate& tmpl, const std::string& id, double x, double y, double yaw,
               const std::string& color, double min_gap, double edge_margin) {
  const Pose pose = make_pose(Vec3(x, y, 0.0), Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ())));
  SceneObject candidate = instantiate(tmpl, id, pose, color);
  if (!fits_on_table(candidate, scene.table, edge_margin)) return false;
  for (const auto& other : scene.objects)
    if (surface_gap(candidate, other) < min_gap) return false;
  scene.objects.push_back(std::move(candidate));
  return true;
}

Scene generate_scene(std::uint64_t seed, int object_count, const std::vector<ObjectTemplate>& catalog,
                     const SceneGenOptions& options) {
  if (object_count < 1) throw Error(ErrorCode::kInvalidArgument, "object_count must be >=1");
  if (catalog.empty()) throw Error(ErrorCode::kInvalidArgument, "catalog must be non-empty");
  Scene scene;
  scene.seed = seed;
  scene.id = "scene-" + std::to_string(seed);
  Rng rng(seed);
  std::uniform_int_distribution<size_t> pick(0, catalog.size() - 1);
  std::uniform_real_distribution<double> ux(-scene.table.width / 2, scene.table.width / 2);
  std::uniform_real_distribution<double> uy(-scene.table.depth / 2, scene.table.depth / 2);
  std::uniform_real_distribution<double> yaw(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < object_count; ++i) {
    const ObjectTemplate& tmpl = catalog[pick(rng)];
    std::string color;
    if (!tmpl.colors.empty()) color = tmpl.colors[std::uniform_int_distribution<size_t>(0, tmpl.colors.size() - 1)(rng)];
    bool placed = false;
    for (int attempt = 0; attempt < options.max_attempts_per_object && !placed; ++attempt) {
      const double x = ux(rng), y = uy(rng), a = yaw(rng);
      placed = try_place(scene, tmpl, "obj-" + std::to_string(i), x, y, a, color, std::max(options.min_gap, 1e-9),
                         options.edge_margin);
    }
    if (!placed)
      throw Error(ErrorCode::kSceneOverflow, "scene overflow: could not place object " + std::to_string(i) + " ('" +
                                                 tmpl.name + "') after " +
                                                 std::to_string(options.max_attempts_per_object) + " attempts");
  }
  return scene;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json pose_to_json(const Pose& pose) {
  const Eigen::Quaterniond q(pose.linear());
  const Vec3 t = pose.translation();
  const Mat3& r = pose.linear();
  // The matrix rows make the encoding exact; the quaternion is for readers.
  return {{"position", {t.x(), t.y(), t.z()}},
          {"orientation", {q.w(), q.x(), q.y(), q.z()}},
          {"rotation", {r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2)}}};
}

Pose pose_from_json(const nlohmann::json& j) {
  const auto& p = j.at("position");
  if (j.contains("rotation")) {
    const auto& r = j.at("rotation");
    if (r.size() != 9) throw Error(ErrorCode::kParse, "pose rotation needs 9 entries");
    Pose pose = Pose::Identity();
    for (int i = 0; i < 9; ++i) pose.linear()(i / 3, i % 3) = r.at(i).get<double>();
    pose.translation() = Vec3(p.at(0), p.at(1), p.at(2));
    return pose;
  }
  const auto& q = j.at("orientation");
  return make_pose(Vec3(p.at(0), p.at(1), p.at(2)),
                   Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                      q.at(3).get<double>()));
}

namespace {

nlohmann::json primitive_to_json(const Primitive& p) {
  if (const auto* b = std::get_if<Box>(&p))
    return {{"type", "box"}, {"half_extents", {b->half_extents.x(), b->half_extents.y(), b->half_extents.z()}}};
  if (const auto* c = std::get_if<Cylinder>(&p))
    return {{"type", "cylinder"}, {"radius", c->radius}, {"half_height", c->half_height}};
  const auto& s = std::get<Sphere>(p);
  return {{"type", "sphere"}, {"radius", s.radius}};
}

Primitive primitive_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type");
  if (type == "box") {
    const auto& h = j.at("half_extents");
    return Box{Vec3(h.at(0), h.at(1), h.at(2))};
  }
  if (type == "cylinder") return Cylinder{j.at("radius"), j.at("half_height")};
  if (type == "sphere") return Sphere{j.at("radius")};
  throw Error(ErrorCode::kParse, "unknown primitive type '" + type + "'");
}

}  // namespace

nlohmann::json to_json(const Shape& shape) {
  if (const auto* c = std::get_if<Composite>(&shape)) {
    nlohmann::json prims = nlohmann::json::array();
    for (const auto& p : c->primitives) {
      auto j = primitive_to_json(p.primitive);
      j["offset"] = pose_to_json(p.offset);
      prims.push_back(j);
    }
    return {{"type", "composite"}, {"primitives", prims}};
  }
  return std::visit(
      [](const auto& p) -> nlohmann::json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Composite>) {
          return {};
        } else {
          return primitive_to_json(Primitive{p});
        }
      },
      shape);
}

Shape shape_from_json(const nlohmann::json& j) {
  if (j.at("type") == "composite") {
    Composite c;
    for (const auto& p : j.at("primitives"))
      c.primitives.push_back({primitive_from_json(p), p.contains("offset") ? pose_from_json(p.at("offset")) : Pose::Identity()});
    return c;
  }
  return std::visit([](const auto& p) -> Shape { return p; }, primitive_from_json(j));
}

nlohmann::json to_json(const SceneObject& o) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : o.parts) {
    nlohmann::json jp{{"name", p.name}, {"primitives", p.primitives}, {"standard_grasp", p.standard_grasp},
                      {"primary", p.primary}};
    if (p.clip) jp["clip"] = {{"normal", {p.clip->normal.x(), p.clip->normal.y(), p.clip->normal.z()}}, {"offset", p.clip->offset}};
    parts.push_back(jp);
  }
  return {{"id", o.id},
          {"name", o.name},
          {"synonyms", o.synonyms},
          {"attributes", o.attributes},
          {"size_class", to_string(o.size_class)},
          {"pose", pose_to_json(o.pose)},
          {"shape", to_json(o.shape)},
          {"parts", parts}};
}

SceneObject object_from_json(const nlohmann::json& j) {
  SceneObject o;
  o.id = j.at("id");
  o.name = j.at("name");
  o.synonyms = j.value("synonyms", std::vector<std::string>{});
  o.attributes = j.value("attributes", std::vector<std::string>{});
  o.size_class = size_class_from_string(j.at("size_class"));
  o.pose = pose_from_json(j.at("pose"));
  o.shape = shape_from_json(j.at("shape"));
  for (const auto& jp : j.value("parts", nlohmann::json::array())) {
    ObjectPart p;
    p.name = jp.at("name");
    p.primitives = jp.at("primitives").get<std::vector<int>>();
    p.standard_grasp = jp.value("standard_grasp", false);
    p.primary = jp.value("primary", false);
    if (jp.contains("clip")) {
      const auto& n = jp["clip"].at("normal");
      p.clip = HalfSpace{Vec3(n.at(0), n.at(1), n.at(2)), jp["clip"].at("offset")};
    }
    o.parts.push_back(std::move(p));
  }
  return o;
}

nlohmann::json to_json(const Scene& s) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : s.objects) objects.push_back(to_json(o));
  return {{"format_version", kSceneFormatVersion},
          {"id", s.id},
          {"seed", s.seed},
          {"table", {{"width", s.table.width}, {"depth", s.table.depth}, {"height", s.table.height}}},
          {"objects", objects}};
}

Scene scene_from_json(const nlohmann::json& j) {
  const int version = j.value("format_version", -1);
  if (version != kSceneFormatVersion)
    throw Error(ErrorCode::kVersionMismatch, "scene format_version " + std::to_string(version) + " unsupported (expected " +
                                                 std::to_string(kSceneFormatVersion) + ")");
  Scene s;
  s.id = j.at("id");
  s.seed = j.at("seed");
  s.table = Table{j.at("table").at("width"), j.at("table").at("depth"), j.at("table").at("height")};
  for (const auto& jo : j.at("objects")) s.objects.push_back(object_from_json(jo));
  return s;
}

void save_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << to_json(scene).dump(2) << '\n';
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
  return scene_from_json(j);
}

}  // namespace handover
