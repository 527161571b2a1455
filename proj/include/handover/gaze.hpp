#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "handover/geometry.hpp"

namespace handover {

/// Display plane: pixel (lambda, mu) sits at origin + lambda * v1 + mu * v2,
/// origin at the bottom-left corner, v1 along the width, v2 up the height.
struct MonitorPlane {
  Vec3 origin = Vec3::Zero();
  Vec3 v1 = Vec3(0.0004, 0.0, 0.0);
  Vec3 v2 = Vec3(0.0, 0.0004, 0.0);
  int width_px = 640;
  int height_px = 480;

  void validate() const;
  Vec3 point_at(double lambda, double mu) const { return origin + lambda * v1 + mu * v2; }
};

struct HeadPose {
  Vec3 position = Vec3::Zero();
  bool calibrated = false;
};

struct GazeFrame {
  double timestamp = 0.0;
  Vec3 head_dir = -Vec3::UnitZ();  // V_h
  Vec3 eye_dir = -Vec3::UnitZ();   // V_g
};

struct MonitorHit {
  double lambda = 0.0;
  double mu = 0.0;
  double sigma = 0.0;  // travel distance along the gaze ray
};

struct Heatmap {
  int width = 0, height = 0;
  std::vector<double> grid;  // row-major, image rows top to bottom
  Vec2 center = Vec2::Zero();  // image coordinates (u, v)
  double sigma_px = 57.0;
  bool center_outside = false;

  double at(int u, int v) const { return grid[static_cast<size_t>(v) * width + u]; }
  double peak() const;
};

/// 640x480 display at 0.4 mm per pixel, viewer 0.6 m in front of its centre.
MonitorPlane default_monitor();
HeadPose default_head(const MonitorPlane& monitor);

/// V_u = normalize(alpha * V_h + (1 - alpha) * V_g).
Vec3 ensemble_direction(const Vec3& head_dir, const Vec3& eye_dir, double alpha);

/// Solves origin + lambda v1 + mu v2 = B_u + sigma V_u.
MonitorHit intersect_monitor(const MonitorPlane& monitor, const HeadPose& head, const Vec3& gaze_dir);

/// G'_1 = G_1, G'_{k+1} = beta G_{k+1} + (1 - beta) G'_k; returns the last value.
Vec2 ema_stream(const std::vector<Vec2>& points, double beta);

/// Running form of ema_stream.
class EmaFilter {
 public:
  explicit EmaFilter(double beta);
  Vec2 push(const Vec2& p);
  bool empty() const { return count_ == 0; }
  Vec2 value() const { return value_; }
  void reset() { count_ = 0; }

 private:
  double beta_;
  Vec2 value_ = Vec2::Zero();
  long count_ = 0;
};

/// Monitor (lambda, mu) to image (u, v) and back; rows run top to bottom.
Vec2 monitor_to_image(const Vec2& lambda_mu, const MonitorPlane& monitor);
Vec2 image_to_monitor(const Vec2& uv, const MonitorPlane& monitor);

/// Isotropic Gaussian, zero covariance, normalised to sum 1 over the grid.
Heatmap build_heatmap(const Vec2& center_uv, int width_px, int height_px, double sigma_px);

/// Synthetic frames fixating `target_px` (monitor coordinates). Each of V_h
/// and V_g is rotated by a random angle with RMS `noise_deg`. 30 Hz stamps.
std::vector<GazeFrame> simulate_gaze(const Vec2& target_px, const MonitorPlane& monitor, const HeadPose& head,
                                     double noise_deg, int n, std::uint64_t seed);

/// Ensemble -> intersect -> EMA over a frame stream; returns monitor (lambda, mu).
Vec2 track_gaze(const std::vector<GazeFrame>& frames, const MonitorPlane& monitor, const HeadPose& head, double alpha,
                double beta);

/// Newline-delimited "t hx hy hz gx gy gz".
std::string format_gaze_log(const std::vector<GazeFrame>& frames);
std::vector<GazeFrame> parse_gaze_log(const std::string& text);
void save_gaze_log(const std::vector<GazeFrame>& frames, const std::string& path);
std::vector<GazeFrame> load_gaze_log(const std::string& path);

}  // namespace handover
