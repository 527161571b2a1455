#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "handover/geometry.hpp"

namespace handover {

inline constexpr int kSceneFormatVersion = 1;

/// Table slab: top face at world z = 0, centred on the world origin; the
/// slab occupies z in [-height, 0].
struct Table {
  double width = 0.5;
  double depth = 0.5;
  double height = 0.04;
};

enum class SizeClass { kSmall, kMedium, kLarge };

std::string to_string(SizeClass c);
SizeClass size_class_from_string(const std::string& s);

/// Size band nearest to a footprint width: small < 1 cm, medium 2-4 cm,
/// large > 8 cm. Widths in the unnamed gaps go to the nearer band.
SizeClass classify_width(double width_m);

/// Half-space n . p <= offset in the object frame.
struct HalfSpace {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  bool contains(const Vec3& p, double tol = 1e-9) const { return normal.dot(p) <= offset + tol; }
};

struct ObjectPart {
  std::string name;
  std::vector<int> primitives;  // indices into flatten(shape)
  std::optional<HalfSpace> clip;
  bool standard_grasp = false;
  bool primary = false;
};

struct SceneObject {
  std::string id;
  std::string name;
  std::vector<std::string> synonyms;
  std::vector<std::string> attributes;  // e.g. colour words used by the detector
  Shape shape;
  Pose pose = Pose::Identity();  // object frame -> world; local z=0 rests on the table
  std::vector<ObjectPart> parts;
  SizeClass size_class = SizeClass::kMedium;

  std::vector<WorldPrimitive> world_primitives() const;
  const ObjectPart* find_part(const std::string& part_name) const;
  /// Primary standard-grasp part, falling back to the first standard part.
  const ObjectPart* standard_part() const;
  /// Largest horizontal footprint extent, pose-independent.
  double footprint_width() const;
  /// World-frame bounding sphere.
  std::pair<Vec3, double> bounding_sphere() const;
};

struct Scene {
  std::string id;
  std::uint64_t seed = 0;
  Table table;
  std::vector<SceneObject> objects;

  const SceneObject* find(const std::string& object_id) const;
  const SceneObject& at(const std::string& object_id) const;  // throws kUnknownObject
};

/// Template entry in the object catalog; generate_scene instantiates these.
struct ObjectTemplate {
  std::string name;
  std::vector<std::string> synonyms;
  std::vector<std::string> colors;  // one is drawn per instance
  Shape shape;
  std::vector<ObjectPart> parts;
};

const std::vector<ObjectTemplate>& default_catalog();
const ObjectTemplate& catalog_entry(const std::string& name);

SceneObject instantiate(const ObjectTemplate& tmpl, const std::string& id, const Pose& pose,
                        const std::string& color = {});

/// Throws Error(kInvalidArgument) describing the first violated invariant.
void validate(const SceneObject& object);
void validate(const Scene& scene);

/// Closest surface-to-surface distance between two objects (0 if touching).
double surface_gap(const SceneObject& a, const SceneObject& b);

/// True when the world point belongs to the given part: the nearest primitive
/// of the object is one of the part's primitives and the clip holds.
bool part_contains(const SceneObject& object, const ObjectPart& part, const Vec3& world_point);

/// Index of the object primitive whose surface is nearest to the point.
int nearest_primitive(const SceneObject& object, const Vec3& world_point);

/// Distance from a point to the surface of the object (union of primitives).
double surface_distance(const SceneObject& object, const Vec3& world_point);

struct SceneGenOptions {
  int max_attempts_per_object = 400;
  double edge_margin = 0.01;  // keep footprints this far inside the table
  double min_gap = 0.005;     // required surface gap between objects
};

/// Deterministic rejection-sampled tabletop. Throws kInvalidArgument for bad
/// preconditions and kSceneOverflow when placement fails.
Scene generate_scene(std::uint64_t seed, int object_count, const std::vector<ObjectTemplate>& catalog,
                     const SceneGenOptions& options = {});

/// Places `tmpl` at (x, y) with the given yaw if it fits; returns false
/// otherwise. Used by the generator and by fixtures.
bool try_place(Scene& scene, const ObjectTemplate& tmpl, const std::string& id, double x, double y, double yaw,
               const std::string& color, double min_gap, double edge_margin = 0.0);

bool fits_on_table(const SceneObject& object, const Table& table, double margin = 0.0);

// JSON encoding (format_version field on the scene document).
nlohmann::json pose_to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Shape& shape);
Shape shape_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SceneObject& object);
SceneObject object_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& j);

void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

}  // namespace handover
