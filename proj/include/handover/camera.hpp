#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "handover/geometry.hpp"
#include "handover/scene.hpp"

namespace handover {

/// Pinhole camera, OpenCV convention (x right, y down, z forward). Pixel
/// centres sit at integer coordinates. `pose` maps camera to world.
struct CameraModel {
  double fx = 615.0, fy = 615.0;
  double cx = 320.0, cy = 240.0;
  int width = 640, height = 480;
  Pose pose = Pose::Identity();

  void validate() const;  // throws kInvalidArgument
};

/// Camera at `eye` looking at `target`, world +z up.
CameraModel look_at_camera(const Vec3& eye, const Vec3& target, int width = 640, int height = 480, double f = 615.0);

/// Robot-side overhead view of the default table.
CameraModel default_camera();

/// Inclusive pixel rectangle. Empty when u1 < u0 or v1 < v0.
struct PixelBox {
  int u0 = 0, v0 = 0, u1 = -1, v1 = -1;

  bool empty() const { return u1 < u0 || v1 < v0; }
  long area() const { return empty() ? 0 : static_cast<long>(u1 - u0 + 1) * (v1 - v0 + 1); }
  bool contains(int u, int v) const { return u >= u0 && u <= u1 && v >= v0 && v <= v1; }
  PixelBox intersect(const PixelBox& o) const;
  void expand(int u, int v);
  bool operator==(const PixelBox&) const = default;
};

/// Rectangle, optionally minus a rectangular hole.
struct PixelRegion {
  PixelBox outer;
  std::optional<PixelBox> hole;

  bool contains(int u, int v) const { return outer.contains(u, v) && !(hole && hole->contains(u, v)); }
  long area() const;
};

/// Pixel mask stored cropped to its bounding box.
struct PixelMask {
  PixelBox box;
  std::vector<std::uint8_t> bits;  // row-major over box

  bool at(int u, int v) const;
  long count() const;
};

struct RenderOutput {
  int width = 0, height = 0;
  std::vector<int> labels;    // 0 = background, otherwise index into `object_ids` + 1
  std::vector<float> depth;   // z-depth in metres, 0 where nothing was hit
  std::vector<std::string> object_ids;
  std::map<std::string, PixelBox> boxes;
  std::map<std::pair<std::string, std::string>, PixelMask> part_masks;

  int label(int u, int v) const { return labels[static_cast<size_t>(v) * width + u]; }
  float depth_at(int u, int v) const { return depth[static_cast<size_t>(v) * width + u]; }
  /// Label value for an object id, 0 when the id is unknown.
  int label_of(const std::string& object_id) const;
};

/// Ray casts every pixel centre against the table top and every object.
RenderOutput render(const Scene& scene, const CameraModel& camera);

/// Pixel (u, v) of a world point. Throws kBehindViewer for points with z <= 0
/// in the camera frame.
Vec2 project(const Vec3& world_point, const CameraModel& camera);

/// World point at the given pixel and z-depth. Throws kInvalidArgument for
/// non-positive depth.
Vec3 deproject(const Vec2& pixel, double depth, const CameraModel& camera);

/// 16-byte header ("HODEPTH\0", uint32 width, uint32 height, little-endian)
/// followed by row-major float32 depth.
void write_depth(const std::string& path, const RenderOutput& render);
std::vector<float> read_depth(const std::string& path, int& width, int& height);

}  // namespace handover
