#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "handover/camera.hpp"
#include "handover/geometry.hpp"
#include "handover/scene.hpp"

namespace handover {

enum class CloudSource { kObserved, kCompleted };

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // outward unit normals; empty when unknown
  CloudSource source = CloudSource::kObserved;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }
};

/// Deprojects every pixel of `region` whose label equals `label` and whose
/// depth is valid.
PointCloud extract_point_cloud(const PixelRegion& region, const RenderOutput& render, const CameraModel& camera,
                               int label);
PointCloud extract_point_cloud(const PixelBox& box, const RenderOutput& render, const CameraModel& camera,
                               const std::string& object_id);

/// Statistical outlier removal over brute-force k nearest neighbours.
PointCloud remove_outliers(const PointCloud& cloud, int k = 8, double std_ratio = 2.0);

/// Oracle completion: uniform samples over the object's union surface with
/// analytic normals. Throws kUnknownObject / kInvalidArgument.
PointCloud complete_cloud(const PointCloud& observed, const Scene& scene, const std::string& object_id, int samples,
                          std::uint64_t seed = 0);

/// PCA normals over k neighbours, oriented away from the cloud centroid.
void estimate_normals(PointCloud& cloud, int k = 12);

Vec3 centroid(const PointCloud& cloud);

}  // namespace handover
