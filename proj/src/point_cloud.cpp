#include "handover/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "handover/error.hpp"

namespace handover {

PointCloud extract_point_cloud(const PixelRegion& region, const RenderOutput& render, const CameraModel& camera,
                               int label) {
  PointCloud cloud;
  cloud.source = CloudSource::kObserved;
  const PixelBox b = region.outer.intersect({0, 0, render.width - 1, render.height - 1});
  if (b.empty()) return cloud;
  for (int v = b.v0; v <= b.v1; ++v)
    for (int u = b.u0; u <= b.u1; ++u) {
      if (!region.contains(u, v) || render.label(u, v) != label) continue;
      const float z = render.depth_at(u, v);
      if (!(z > 0.0f)) continue;
      cloud.points.push_back(deproject(Vec2(u, v), z, camera));
    }
  return cloud;
}

PointCloud extract_point_cloud(const PixelBox& box, const RenderOutput& render, const CameraModel& camera,
                               const std::string& object_id) {
  return extract_point_cloud(PixelRegion{box, std::nullopt}, render, camera, render.label_of(object_id));
}

namespace {

std::vector<size_t> knn(const std::vector<Vec3>& pts, size_t i, int k) {
  std::vector<std::pair<double, size_t>> d;
  d.reserve(pts.size());
  for (size_t j = 0; j < pts.size(); ++j)
    if (j != i) d.emplace_back((pts[j] - pts[i]).squaredNorm(), j);
  const size_t kk = std::min<size_t>(k, d.size());
  std::partial_sort(d.begin(), d.begin() + kk, d.end());
  std::vector<size_t> out(kk);
  for (size_t m = 0; m < kk; ++m) out[m] = d[m].second;
  return out;
}

}  // namespace

PointCloud remove_outliers(const PointCloud& cloud, int k, double std_ratio) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "remove_outliers needs k >= 1");
  if (cloud.size() < static_cast<size_t>(k) + 1) return cloud;
  const size_t n = cloud.size();
  std::vector<double> mean_d(n);
  for (size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const auto nb = knn(cloud.points, i, k);
    for (size_t j : nb) s += (cloud.points[j] - cloud.points[i]).norm();
    mean_d[i] = s / nb.size();
  }
  const double mu = std::accumulate(mean_d.begin(), mean_d.end(), 0.0) / n;
  double var = 0.0;
  for (double m : mean_d) var += (m - mu) * (m - mu);
  const double sd = std::sqrt(var / n);
  const double limit = mu + std_ratio * sd;

  PointCloud out;
  out.source = cloud.source;
  for (size_t i = 0; i < n; ++i) {
    if (mean_d[i] > limit) continue;
    out.points.push_back(cloud.points[i]);
    if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
  }
  return out;
}

PointCloud complete_cloud(const PointCloud& observed, const Scene& scene, const std::string& object_id, int samples,
                          std::uint64_t seed) {
  (void)observed;  // the oracle ignores the partial view; kept for interface parity with learned completers
  const SceneObject& object = scene.at(object_id);
  if (samples <= 0) throw Error(ErrorCode::kInvalidArgument, "complete_cloud needs samples >= 1");
  const auto prims = object.world_primitives();
  std::vector<double> area;
  for (const auto& p : prims) area.push_back(surface_area(p.primitive));
  std::discrete_distribution<size_t> pick(area.begin(), area.end());
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);

  PointCloud out;
  out.source = CloudSource::kCompleted;
  const long max_attempts = 50L * samples;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < samples; ++attempt) {
    const size_t i = pick(rng);
    Vec3 n_local;
    const Vec3 p_local = sample_surface(prims[i].primitive, rng, n_local);
    const Vec3 p = prims[i].pose * p_local;
    // Keep only the union's outer surface.
    bool buried = false;
    for (size_t j = 0; j < prims.size() && !buried; ++j)
      if (j != i && signed_distance(prims[j], p) < -1e-9) buried = true;
    if (buried) continue;
    out.points.push_back(p);
    out.normals.push_back(prims[i].pose.linear() * n_local);
  }
  return out;
}

Vec3 centroid(const PointCloud& cloud) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : cloud.points) c += p;
  return cloud.empty() ? c : Vec3(c / static_cast<double>(cloud.size()));
}

void estimate_normals(PointCloud& cloud, int k) {
  const Vec3 c = centroid(cloud);
  cloud.normals.assign(cloud.size(), Vec3::UnitZ());
  for (size_t i = 0; i < cloud.size(); ++i) {
    const auto nb = knn(cloud.points, i, k);
    Vec3 mean = cloud.points[i];
    for (size_t j : nb) mean += cloud.points[j];
    mean /= static_cast<double>(nb.size() + 1);
    Mat3 cov = (cloud.points[i] - mean) * (cloud.points[i] - mean).transpose();
    for (size_t j : nb) cov += (cloud.points[j] - mean) * (cloud.points[j] - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    Vec3 n = es.eigenvectors().col(0);
    if (n.dot(cloud.points[i] - c) < 0.0) n = -n;
    cloud.normals[i] = n;
  }
}

}  // namespace handover
