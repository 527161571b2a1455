#include "handover/gaze.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/LU>

#include "handover/error.hpp"

namespace handover {

void MonitorPlane::validate() const {
  if (v1.norm() <= 0.0 || v2.norm() <= 0.0) throw Error(ErrorCode::kInvalidArgument, "monitor basis vectors must be non-zero");
  if (std::abs(v1.dot(v2)) > 1e-9) throw Error(ErrorCode::kInvalidArgument, "monitor basis vectors must be orthogonal");
  if (width_px <= 0 || height_px <= 0) throw Error(ErrorCode::kInvalidArgument, "monitor size must be positive");
}

double Heatmap::peak() const { return grid.empty() ? 0.0 : *std::max_element(grid.begin(), grid.end()); }

MonitorPlane default_monitor() { return MonitorPlane{}; }

HeadPose default_head(const MonitorPlane& m) {
  const Vec3 centre = m.point_at(m.width_px / 2.0, m.height_px / 2.0);
  const Vec3 normal = m.v1.cross(m.v2).normalized();
  return HeadPose{centre + 0.6 * normal, true};
}

namespace {
void require_unit(const Vec3& v, const char* what) {
  if (!v.allFinite() || std::abs(v.norm() - 1.0) > 1e-6)
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be a unit vector");
}
}  // namespace

Vec3 ensemble_direction(const Vec3& head_dir, const Vec3& eye_dir, double alpha) {
  require_unit(head_dir, "V_h");
  require_unit(eye_dir, "V_g");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  if (alpha == 1.0) return head_dir;
  if (alpha == 0.0) return eye_dir;
  const Vec3 v = alpha * head_dir + (1.0 - alpha) * eye_dir;
  const double n = v.norm();
  if (n < 1e-12) throw Error(ErrorCode::kDegenerateDirection, "head and eye directions cancel out");
  return v / n;
}

MonitorHit intersect_monitor(const MonitorPlane& monitor, const HeadPose& head, const Vec3& gaze_dir) {
  if (!head.calibrated) throw Error(ErrorCode::kInvalidArgument, "head pose is not calibrated");
  Mat3 a;
  a.col(0) = monitor.v1;
  a.col(1) = monitor.v2;
  a.col(2) = -gaze_dir;
  // Compare against the scale of the columns so tiny m/px bases are not flagged.
  const double scale = monitor.v1.norm() * monitor.v2.norm() * gaze_dir.norm();
  const double det = a.determinant();
  if (!(std::abs(det) > 1e-12 * scale)) throw Error(ErrorCode::kNoIntersection, "gaze ray is parallel to the monitor");
  const Vec3 x = a.fullPivLu().solve(head.position - monitor.origin);
  if (!(x.z() > 0.0)) throw Error(ErrorCode::kBehindViewer, "monitor lies behind the viewer");
  return {x.x(), x.y(), x.z()};
}

Vec2 ema_stream(const std::vector<Vec2>& points, double beta) {
  if (points.empty()) throw Error(ErrorCode::kEmptyInput, "EMA needs at least one point");
  EmaFilter f(beta);
  for (const auto& p : points) f.push(p);
  return f.value();
}

EmaFilter::EmaFilter(double beta) : beta_(beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "beta must lie in (0, 1]");
}

Vec2 EmaFilter::push(const Vec2& p) {
  value_ = count_++ == 0 ? p : Vec2(beta_ * p + (1.0 - beta_) * value_);
  return value_;
}

Vec2 monitor_to_image(const Vec2& lm, const MonitorPlane& m) { return {lm.x(), (m.height_px - 1) - lm.y()}; }
Vec2 image_to_monitor(const Vec2& uv, const MonitorPlane& m) { return {uv.x(), (m.height_px - 1) - uv.y()}; }

Heatmap build_heatmap(const Vec2& center, int width, int height, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "heatmap sigma must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidArgument, "heatmap size must be positive");
  Heatmap h;
  h.width = width;
  h.height = height;
  h.center = center;
  h.sigma_px = sigma;
  h.center_outside = !(center.x() >= 0.0 && center.x() <= width - 1 && center.y() >= 0.0 && center.y() <= height - 1);
  // Work relative to the nearest pixel so far-off centres do not underflow.
  const double nu = std::clamp(std::round(center.x()), 0.0, width - 1.0);
  const double nv = std::clamp(std::round(center.y()), 0.0, height - 1.0);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const double base_u = (nu - center.x()) * (nu - center.x());
  const double base_v = (nv - center.y()) * (nv - center.y());
  std::vector<double> gx(width), gy(height);
  for (int u = 0; u < width; ++u) gx[u] = std::exp(-((u - center.x()) * (u - center.x()) - base_u) * inv);
  for (int v = 0; v < height; ++v) gy[v] = std::exp(-((v - center.y()) * (v - center.y()) - base_v) * inv);
  h.grid.resize(static_cast<size_t>(width) * height);
  double total = 0.0;
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u) total += (h.grid[static_cast<size_t>(v) * width + u] = gy[v] * gx[u]);
  for (double& g : h.grid) g /= total;
  return h;
}

namespace {

Vec3 perturb(const Vec3& dir, double noise_rad, Rng& rng) {
  if (noise_rad <= 0.0) return dir;
  // Tangent-plane Gaussian; per-axis std noise/sqrt(2) gives RMS angle noise.
  Vec3 a = std::abs(dir.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 t1 = dir.cross(a).normalized();
  const Vec3 t2 = dir.cross(t1);
  std::normal_distribution<double> n(0.0, noise_rad / std::numbers::sqrt2);
  const double x = n(rng), y = n(rng);
  const double ang = std::hypot(x, y);
  if (ang < 1e-300) return dir;
  const Vec3 axis = ((x * t1 + y * t2) / ang).cross(dir).normalized();
  return (Eigen::AngleAxisd(-ang, axis) * dir).normalized();
}

}  // namespace

std::vector<GazeFrame> simulate_gaze(const Vec2& target, const MonitorPlane& monitor, const HeadPose& head,
                                     double noise_deg, int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "simulate_gaze needs n >= 1");
  if (!(target.x() >= 0.0 && target.x() <= monitor.width_px && target.y() >= 0.0 && target.y() <= monitor.height_px))
    throw Error(ErrorCode::kTargetOutsideMonitor, "gaze target lies outside the monitor");
  const Vec3 dir = (monitor.point_at(target.x(), target.y()) - head.position).normalized();
  Rng rng(seed);
  const double noise = noise_deg * std::numbers::pi / 180.0;
  std::vector<GazeFrame> frames(n);
  for (int i = 0; i < n; ++i) {
    frames[i].timestamp = i / 30.0;
    frames[i].head_dir = perturb(dir, noise, rng);
    frames[i].eye_dir = perturb(dir, noise, rng);
  }
  return frames;
}

Vec2 track_gaze(const std::vector<GazeFrame>& frames, const MonitorPlane& monitor, const HeadPose& head, double alpha,
                double beta) {
  if (frames.empty()) throw Error(ErrorCode::kEmptyInput, "no gaze frames");
  EmaFilter ema(beta);
  for (const auto& f : frames) {
    const MonitorHit hit = intersect_monitor(monitor, head, ensemble_direction(f.head_dir, f.eye_dir, alpha));
    ema.push({hit.lambda, hit.mu});
  }
  return ema.value();
}

std::string format_gaze_log(const std::vector<GazeFrame>& frames) {
  std::string out;
  char line[512];
  for (const auto& f : frames) {
    std::snprintf(line, sizeof line, "%.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", f.timestamp, f.head_dir.x(),
                  f.head_dir.y(), f.head_dir.z(), f.eye_dir.x(), f.eye_dir.y(), f.eye_dir.z());
    out += line;
  }
  return out;
}

std::vector<GazeFrame> parse_gaze_log(const std::string& text) {
  std::vector<GazeFrame> frames;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream ls(line);
    GazeFrame f;
    double v[7];
    for (double& x : v)
      if (!(ls >> x)) throw Error(ErrorCode::kParse, "gaze log line " + std::to_string(lineno) + ": expected 7 numbers");
    f.timestamp = v[0];
    f.head_dir = Vec3(v[1], v[2], v[3]);
    f.eye_dir = Vec3(v[4], v[5], v[6]);
    frames.push_back(f);
  }
  return frames;
}

void save_gaze_log(const std::vector<GazeFrame>& frames, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << format_gaze_log(frames);
}

std::vector<GazeFrame> load_gaze_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_gaze_log(ss.str());
}

}  // namespace handover
