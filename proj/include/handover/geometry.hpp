#pragma once

#include <Eigen/Geometry>

#include <optional>
#include <random>
#include <variant>
#include <vector>

namespace handover {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Pose = Eigen::Isometry3d;
using Rng = std::mt19937_64;

/// Axis-aligned box centred on its local origin.
struct Box {
  Vec3 half_extents = Vec3::Zero();
};

/// Solid capped cylinder centred on its local origin, axis along local +z.
struct Cylinder {
  double radius = 0.0;
  double half_height = 0.0;
};

struct Sphere {
  double radius = 0.0;
};

using Primitive = std::variant<Box, Cylinder, Sphere>;

struct PlacedPrimitive {
  Primitive primitive;
  Pose offset = Pose::Identity();
};

struct Composite {
  std::vector<PlacedPrimitive> primitives;
};

using Shape = std::variant<Box, Cylinder, Sphere, Composite>;

/// A primitive expressed in the world frame.
struct WorldPrimitive {
  Primitive primitive;
  Pose pose = Pose::Identity();  // primitive frame -> world
};

struct RayHit {
  double t = 0.0;
  Vec3 normal = Vec3::Zero();  // outward, same frame as the ray
};

/// Expands a shape into its primitives (a singleton for simple shapes).
std::vector<PlacedPrimitive> flatten(const Shape& shape);

bool is_valid(const Primitive& p);

// Local-frame queries.
Vec3 support(const Primitive& p, const Vec3& direction);
double signed_distance(const Primitive& p, const Vec3& local_point);
Vec3 outward_normal(const Primitive& p, const Vec3& local_point);
std::optional<RayHit> intersect_ray(const Primitive& p, const Vec3& origin, const Vec3& direction);
double surface_area(const Primitive& p);
double bounding_radius(const Primitive& p);

/// Uniform sample on the primitive surface; writes the outward normal.
Vec3 sample_surface(const Primitive& p, Rng& rng, Vec3& normal);

// World-frame wrappers.
Vec3 support(const WorldPrimitive& p, const Vec3& direction);
double signed_distance(const WorldPrimitive& p, const Vec3& point);
std::optional<RayHit> intersect_ray(const WorldPrimitive& p, const Vec3& origin, const Vec3& direction);

/// Euclidean distance between two convex primitives via GJK; zero when they
/// touch or overlap.
double convex_distance(const WorldPrimitive& a, const WorldPrimitive& b);

/// Rotation vector (axis * angle) of a rotation matrix; angle in [0, pi].
Vec3 rotation_log(const Mat3& r);
Mat3 rotation_exp(const Vec3& w);

Pose make_pose(const Vec3& position, const Eigen::Quaterniond& orientation);

}  // namespace handover
