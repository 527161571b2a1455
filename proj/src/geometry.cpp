#include "handover/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace handover {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRayEps = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sign_or_one(double x) { return x < 0.0 ? -1.0 : 1.0; }

std::optional<RayHit> ray_box(const Box& b, const Vec3& o, const Vec3& d) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int near_axis = -1;
  for (int i = 0; i < 3; ++i) {
    const double h = b.half_extents[i];
    if (std::abs(d[i]) < 1e-300) {
      if (std::abs(o[i]) > h) return std::nullopt;
      continue;
    }
    double t1 = (-h - o[i]) / d[i];
    double t2 = (h - o[i]) / d[i];
    if (t1 > t2) std::swap(t1, t2);
    if (t1 > t_near) {
      t_near = t1;
      near_axis = i;
    }
    t_far = std::min(t_far, t2);
    if (t_near > t_far) return std::nullopt;
  }
  if (near_axis < 0 || t_near <= kRayEps) return std::nullopt;
  RayHit hit;
  hit.t = t_near;
  hit.normal[near_axis] = -sign_or_one(d[near_axis]);
  return hit;
}

std::optional<RayHit> ray_sphere(const Sphere& s, const Vec3& o, const Vec3& d) {
  const double a = d.squaredNorm();
  const double b = o.dot(d);
  const double c = o.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - a * c;
  if (disc < 0.0 || a <= 0.0) return std::nullopt;
  const double t = (-b - std::sqrt(disc)) / a;
  if (t <= kRayEps) return std::nullopt;
  RayHit hit;
  hit.t = t;
  hit.normal = (o + t * d) / s.radius;
  return hit;
}

std::optional<RayHit> ray_cylinder(const Cylinder& cyl, const Vec3& o, const Vec3& d) {
  std::optional<RayHit> best;
  auto consider = [&](double t, const Vec3& n) {
    if (t <= kRayEps) return;
    if (!best || t < best->t) best = RayHit{t, n};
  };
  const double r2 = cyl.radius * cyl.radius;
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-300) {
    const double b = o.x() * d.x() + o.y() * d.y();
    const double c = o.x() * o.x() + o.y() * o.y() - r2;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / a;
      const Vec3 p = o + t * d;
      if (std::abs(p.z()) <= cyl.half_height) consider(t, Vec3(p.x(), p.y(), 0.0) / cyl.radius);
    }
  }
  if (std::abs(d.z()) > 1e-300) {
    for (double side : {-1.0, 1.0}) {
      const double t = (side * cyl.half_height - o.z()) / d.z();
      const Vec3 p = o + t * d;
      // Only the cap facing the ray can be an entry point.
      if (side * d.z() < 0.0 && p.x() * p.x() + p.y() * p.y() <= r2) consider(t, Vec3(0.0, 0.0, side));
    }
  }
  return best;
}

Vec3 sample_unit_sphere(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.squaredNorm() < 1e-24);
  return v.normalized();
}

// Closest point to the origin of the convex hull of up to four points.
// Enumerates every face of the simplex; returns the minimum-norm candidate
// whose barycentric coordinates are non-negative and the supporting subset.
struct SimplexResult {
  Vec3 point;
  std::vector<Vec3> support;
};

SimplexResult closest_on_simplex(const std::vector<Vec3>& pts) {
  const int n = static_cast<int>(pts.size());
  SimplexResult best{pts.front(), {pts.front()}};
  double best_norm = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<Vec3> sub;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) sub.push_back(pts[i]);
    const int k = static_cast<int>(sub.size());
    Eigen::VectorXd lambda(k);
    if (k == 1) {
      lambda(0) = 1.0;
    } else {
      Eigen::MatrixXd e(3, k - 1);
      for (int i = 1; i < k; ++i) e.col(i - 1) = sub[i] - sub[0];
      const Eigen::MatrixXd gram = e.transpose() * e;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
      if (lu.rank() < k - 1) continue;
      const Eigen::VectorXd mu = lu.solve(-e.transpose() * sub[0]);
      lambda(0) = 1.0 - mu.sum();
      lambda.tail(k - 1) = mu;
    }
    if ((lambda.array() < -1e-12).any()) continue;
    Vec3 p = Vec3::Zero();
    for (int i = 0; i < k; ++i) p += lambda(i) * sub[i];
    const double nrm = p.squaredNorm();
    if (nrm < best_norm - 1e-30) {
      best_norm = nrm;
      std::vector<Vec3> kept;
      for (int i = 0; i < k; ++i)
        if (lambda(i) > 1e-12) kept.push_back(sub[i]);
      if (kept.empty()) kept.push_back(sub[0]);
      best = {p, kept};
    }
  }
  return best;
}

}  // namespace

std::vector<PlacedPrimitive> flatten(const Shape& shape) {
  return std::visit(Overloaded{
                        [](const Composite& c) { return c.primitives; },
                        [](const auto& p) { return std::vector<PlacedPrimitive>{{Primitive{p}, Pose::Identity()}}; },
                    },
                    shape);
}

bool is_valid(const Primitive& p) {
  return std::visit(Overloaded{
                        [](const Box& b) { return (b.half_extents.array() > 0.0).all(); },
                        [](const Cylinder& c) { return c.radius > 0.0 && c.half_height > 0.0; },
                        [](const Sphere& s) { return s.radius > 0.0; },
                    },
                    p);
}

Vec3 support(const Primitive& p, const Vec3& dir) {
  return std::visit(
      Overloaded{
          [&](const Box& b) {
            return Vec3(sign_or_one(dir.x()) * b.half_extents.x(), sign_or_one(dir.y()) * b.half_extents.y(),
                        sign_or_one(dir.z()) * b.half_extents.z());
          },
          [&](const Cylinder& c) {
            const double rho = std::hypot(dir.x(), dir.y());
            Vec3 s(0.0, 0.0, sign_or_one(dir.z()) * c.half_height);
            if (rho > 1e-300) {
              s.x() = c.radius * dir.x() / rho;
              s.y() = c.radius * dir.y() / rho;
            } else {
              s.x() = c.radius;
            }
            return s;
          },
          [&](const Sphere& s) {
            const double n = dir.norm();
            return n > 1e-300 ? Vec3(s.radius * dir / n) : Vec3(s.radius, 0.0, 0.0);
          },
      },
      p);
}

double signed_distance(const Primitive& p, const Vec3& q) {
  return std::visit(Overloaded{
                        [&](const Box& b) {
                          const Vec3 d = q.cwiseAbs() - b.half_extents;
                          return d.cwiseMax(0.0).norm() + std::min(d.maxCoeff(), 0.0);
                        },
                        [&](const Cylinder& c) {
                          const Vec2 d(std::hypot(q.x(), q.y()) - c.radius, std::abs(q.z()) - c.half_height);
                          return d.cwiseMax(0.0).norm() + std::min(d.maxCoeff(), 0.0);
                        },
                        [&](const Sphere& s) { return q.norm() - s.radius; },
                    },
                    p);
}

Vec3 outward_normal(const Primitive& p, const Vec3& q) {
  return std::visit(
      Overloaded{
          [&](const Box& b) -> Vec3 {
            const Vec3 d = q.cwiseAbs() - b.half_extents;
            if (d.maxCoeff() > 0.0) {
              const Vec3 clamped = q.cwiseMax(-b.half_extents).cwiseMin(b.half_extents);
              return (q - clamped).normalized();
            }
            int axis = 0;
            d.maxCoeff(&axis);
            Vec3 n = Vec3::Zero();
            n[axis] = sign_or_one(q[axis]);
            return n;
          },
          [&](const Cylinder& c) -> Vec3 {
            const double rho = std::hypot(q.x(), q.y());
            const double dr = rho - c.radius;
            const double dz = std::abs(q.z()) - c.half_height;
            const Vec3 radial = rho > 1e-300 ? Vec3(q.x() / rho, q.y() / rho, 0.0) : Vec3(1.0, 0.0, 0.0);
            const Vec3 axial(0.0, 0.0, sign_or_one(q.z()));
            if (dr > 0.0 && dz > 0.0) return (dr * radial + dz * axial).normalized();
            return dr > dz ? radial : axial;
          },
          [&](const Sphere&) -> Vec3 {
            const double n = q.norm();
            return n > 1e-300 ? Vec3(q / n) : Vec3(0.0, 0.0, 1.0);
          },
      },
      p);
}

std::optional<RayHit> intersect_ray(const Primitive& p, const Vec3& o, const Vec3& d) {
  return std::visit(Overloaded{
                        [&](const Box& b) { return ray_box(b, o, d); },
                        [&](const Cylinder& c) { return ray_cylinder(c, o, d); },
                        [&](const Sphere& s) { return ray_sphere(s, o, d); },
                    },
                    p);
}

double surface_area(const Primitive& p) {
  return std::visit(Overloaded{
                        [](const Box& b) {
                          const Vec3& h = b.half_extents;
                          return 8.0 * (h.x() * h.y() + h.y() * h.z() + h.x() * h.z());
                        },
                        [](const Cylinder& c) {
                          return 2.0 * kPi * c.radius * (2.0 * c.half_height) + 2.0 * kPi * c.radius * c.radius;
                        },
                        [](const Sphere& s) { return 4.0 * kPi * s.radius * s.radius; },
                    },
                    p);
}

double bounding_radius(const Primitive& p) {
  return std::visit(Overloaded{
                        [](const Box& b) { return b.half_extents.norm(); },
                        [](const Cylinder& c) { return std::hypot(c.radius, c.half_height); },
                        [](const Sphere& s) { return s.radius; },
                    },
                    p);
}

Vec3 sample_surface(const Primitive& p, Rng& rng, Vec3& normal) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return std::visit(
      Overloaded{
          [&](const Box& b) -> Vec3 {
            const Vec3& h = b.half_extents;
            const std::array<double, 3> face_area{h.y() * h.z(), h.x() * h.z(), h.x() * h.y()};
            const double total = face_area[0] + face_area[1] + face_area[2];
            double pick = u(rng) * total;
            int axis = 0;
            while (axis < 2 && pick > face_area[axis]) pick -= face_area[axis++];
            const double side = u(rng) < 0.5 ? -1.0 : 1.0;
            Vec3 q;
            for (int i = 0; i < 3; ++i) q[i] = (2.0 * u(rng) - 1.0) * h[i];
            q[axis] = side * h[axis];
            normal = Vec3::Zero();
            normal[axis] = side;
            return q;
          },
          [&](const Cylinder& c) -> Vec3 {
            const double side_area = 2.0 * kPi * c.radius * 2.0 * c.half_height;
            const double cap_area = kPi * c.radius * c.radius;
            const double pick = u(rng) * (side_area + 2.0 * cap_area);
            const double phi = 2.0 * kPi * u(rng);
            if (pick < side_area) {
              normal = Vec3(std::cos(phi), std::sin(phi), 0.0);
              return Vec3(c.radius * std::cos(phi), c.radius * std::sin(phi), (2.0 * u(rng) - 1.0) * c.half_height);
            }
            const double side = pick < side_area + cap_area ? -1.0 : 1.0;
            const double rho = c.radius * std::sqrt(u(rng));
            normal = Vec3(0.0, 0.0, side);
            return Vec3(rho * std::cos(phi), rho * std::sin(phi), side * c.half_height);
          },
          [&](const Sphere& s) -> Vec3 {
            normal = sample_unit_sphere(rng);
            return s.radius * normal;
          },
      },
      p);
}

Vec3 support(const WorldPrimitive& p, const Vec3& direction) {
  return p.pose * support(p.primitive, p.pose.linear().transpose() * direction);
}

double signed_distance(const WorldPrimitive& p, const Vec3& point) {
  return signed_distance(p.primitive, p.pose.inverse() * point);
}

std::optional<RayHit> intersect_ray(const WorldPrimitive& p, const Vec3& origin, const Vec3& direction) {
  const Pose inv = p.pose.inverse();
  auto hit = intersect_ray(p.primitive, inv * origin, inv.linear() * direction);
  if (hit) hit->normal = p.pose.linear() * hit->normal;
  return hit;
}

double convex_distance(const WorldPrimitive& a, const WorldPrimitive& b) {
  auto minkowski_support = [&](const Vec3& d) -> Vec3 { return support(a, d) - support(b, -d); };

  Vec3 v = minkowski_support(Vec3::UnitX());
  std::vector<Vec3> simplex{v};
  for (int iter = 0; iter < 256; ++iter) {
    const double vn = v.norm();
    if (vn < 1e-12) return 0.0;
    const Vec3 w = minkowski_support(-v);
    // Duality gap: vn - v.w/vn bounds the distance error from above.
    if (vn - v.dot(w) / vn <= 1e-10) return vn;
    bool duplicate = false;
    for (const Vec3& s : simplex) duplicate = duplicate || (s - w).squaredNorm() < 1e-28;
    if (duplicate) return vn;
    simplex.push_back(w);
    const SimplexResult r = closest_on_simplex(simplex);
    if (r.support.size() == 4 || r.point.norm() < 1e-12) return 0.0;
    if (r.point.norm() >= vn) return std::min(vn, r.point.norm());
    v = r.point;
    simplex = r.support;
  }
  return v.norm();
}

Vec3 rotation_log(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.axis() * aa.angle();
}

Mat3 rotation_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

Pose make_pose(const Vec3& position, const Eigen::Quaterniond& orientation) {
  Pose pose = Pose::Identity();
  pose.linear() = orientation.normalized().toRotationMatrix();
  pose.translation() = position;
  return pose;
}

}  // namespace handover
