#include "handover/camera.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "handover/error.hpp"

namespace handover {

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorCode::kInvalidArgument, "camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidArgument, "camera image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
    throw Error(ErrorCode::kInvalidArgument, "principal point outside the image");
}

CameraModel look_at_camera(const Vec3& eye, const Vec3& target, int width, int height, double f) {
  CameraModel cam;
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = f;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(Vec3::UnitZ());
  if (x.norm() < 1e-9) x = Vec3::UnitX();
  x.normalize();
  const Vec3 y = z.cross(x);
  cam.pose = Pose::Identity();
  cam.pose.linear().col(0) = x;
  cam.pose.linear().col(1) = y;
  cam.pose.linear().col(2) = z;
  cam.pose.translation() = eye;
  return cam;
}

CameraModel default_camera() { return look_at_camera(Vec3(0.0, -0.45, 0.6), Vec3::Zero()); }

PixelBox PixelBox::intersect(const PixelBox& o) const {
  return {std::max(u0, o.u0), std::max(v0, o.v0), std::min(u1, o.u1), std::min(v1, o.v1)};
}

void PixelBox::expand(int u, int v) {
  if (empty()) {
    *this = {u, v, u, v};
    return;
  }
  u0 = std::min(u0, u);
  v0 = std::min(v0, v);
  u1 = std::max(u1, u);
  v1 = std::max(v1, v);
}

long PixelRegion::area() const {
  long a = outer.area();
  if (hole) a -= outer.intersect(*hole).area();
  return a;
}

bool PixelMask::at(int u, int v) const {
  if (!box.contains(u, v)) return false;
  const int w = box.u1 - box.u0 + 1;
  return bits[static_cast<size_t>(v - box.v0) * w + (u - box.u0)] != 0;
}

long PixelMask::count() const { return std::count(bits.begin(), bits.end(), std::uint8_t{1}); }

int RenderOutput::label_of(const std::string& object_id) const {
  for (size_t i = 0; i < object_ids.size(); ++i)
    if (object_ids[i] == object_id) return static_cast<int>(i) + 1;
  return 0;
}

namespace {

struct ObjectCache {
  const SceneObject* object;
  std::vector<WorldPrimitive> prims;
  Vec3 center;
  double radius;
  PixelBox screen;  // conservative projection of the bounding sphere
};

bool part_holds(const ObjectPart& part, const SceneObject& object, int prim, const Vec3& p) {
  if (std::find(part.primitives.begin(), part.primitives.end(), prim) == part.primitives.end()) return false;
  return !part.clip || part.clip->contains(object.pose.inverse() * p);
}

PixelBox sphere_screen_box(const Vec3& center, double radius, const CameraModel& cam) {
  const Vec3 c = cam.pose.inverse() * center;
  const PixelBox all{0, 0, cam.width - 1, cam.height - 1};
  if (c.z() - radius <= 1e-6) return all;
  // Bound the projection by the sphere's silhouette cone.
  const double zmin = c.z() - radius;
  const double u_lo = cam.cx + cam.fx * std::min((c.x() - radius) / zmin, (c.x() - radius) / (c.z() + radius));
  const double u_hi = cam.cx + cam.fx * std::max((c.x() + radius) / zmin, (c.x() + radius) / (c.z() + radius));
  const double v_lo = cam.cy + cam.fy * std::min((c.y() - radius) / zmin, (c.y() - radius) / (c.z() + radius));
  const double v_hi = cam.cy + cam.fy * std::max((c.y() + radius) / zmin, (c.y() + radius) / (c.z() + radius));
  PixelBox b{static_cast<int>(std::floor(u_lo)) - 1, static_cast<int>(std::floor(v_lo)) - 1,
             static_cast<int>(std::ceil(u_hi)) + 1, static_cast<int>(std::ceil(v_hi)) + 1};
  return b.intersect(all);
}

}  // namespace

RenderOutput render(const Scene& scene, const CameraModel& camera) {
  camera.validate();
  RenderOutput out;
  out.width = camera.width;
  out.height = camera.height;
  const size_t n = static_cast<size_t>(camera.width) * camera.height;
  out.labels.assign(n, 0);
  out.depth.assign(n, 0.0f);

  std::vector<ObjectCache> cache;
  for (const auto& o : scene.objects) {
    out.object_ids.push_back(o.id);
    auto [c, r] = o.bounding_sphere();
    cache.push_back({&o, o.world_primitives(), c, r, sphere_screen_box(c, r, camera)});
  }

  std::vector<int> hit_prim(n, -1);
  std::vector<Vec3> hit_point(n, Vec3::Zero());
  const Vec3 eye = camera.pose.translation();
  const Mat3 rot = camera.pose.linear();
  const Table& table = scene.table;

  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      // Camera-frame direction with unit z, so the ray parameter is z-depth.
      const Vec3 d = rot * Vec3((u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, 1.0);
      double best = std::numeric_limits<double>::infinity();
      int label = 0, prim = -1;
      if (d.z() < 0.0 && eye.z() > 0.0) {
        const double t = -eye.z() / d.z();
        const Vec3 p = eye + t * d;
        if (std::abs(p.x()) <= table.width / 2 && std::abs(p.y()) <= table.depth / 2) best = t;
      }
      for (size_t k = 0; k < cache.size(); ++k) {
        const auto& oc = cache[k];
        if (!oc.screen.contains(u, v)) continue;
        const Vec3 oc_rel = eye - oc.center;
        const double b = oc_rel.dot(d), a = d.squaredNorm();
        if (b * b - a * (oc_rel.squaredNorm() - oc.radius * oc.radius) < 0.0) continue;
        for (size_t i = 0; i < oc.prims.size(); ++i) {
          const auto hit = intersect_ray(oc.prims[i], eye, d);
          if (hit && hit->t < best) {
            best = hit->t;
            label = static_cast<int>(k) + 1;
            prim = static_cast<int>(i);
          }
        }
      }
      const size_t idx = static_cast<size_t>(v) * camera.width + u;
      if (std::isfinite(best)) out.depth[idx] = static_cast<float>(best);
      out.labels[idx] = label;
      if (label > 0) {
        hit_prim[idx] = prim;
        hit_point[idx] = eye + best * d;
        out.boxes[scene.objects[label - 1].id].expand(u, v);
      }
    }
  }

  for (size_t k = 0; k < scene.objects.size(); ++k) {
    const SceneObject& o = scene.objects[k];
    const auto box_it = out.boxes.find(o.id);
    if (box_it == out.boxes.end()) continue;
    const PixelBox& ob = box_it->second;
    for (const auto& part : o.parts) {
      PixelBox pb;
      std::vector<std::pair<int, int>> pixels;
      for (int v = ob.v0; v <= ob.v1; ++v)
        for (int u = ob.u0; u <= ob.u1; ++u) {
          const size_t idx = static_cast<size_t>(v) * camera.width + u;
          if (out.labels[idx] != static_cast<int>(k) + 1) continue;
          if (!part_holds(part, o, hit_prim[idx], hit_point[idx])) continue;
          pixels.emplace_back(u, v);
          pb.expand(u, v);
        }
      if (pixels.empty()) continue;
      PixelMask mask;
      mask.box = pb;
      const int w = pb.u1 - pb.u0 + 1;
      mask.bits.assign(static_cast<size_t>(pb.area()), 0);
      for (auto [u, v] : pixels) mask.bits[static_cast<size_t>(v - pb.v0) * w + (u - pb.u0)] = 1;
      out.part_masks[{o.id, part.name}] = std::move(mask);
    }
  }
  return out;
}

Vec2 project(const Vec3& world_point, const CameraModel& camera) {
  const Vec3 c = camera.pose.inverse() * world_point;
  if (c.z() <= 0.0) throw Error(ErrorCode::kBehindViewer, "point is behind the camera");
  return {camera.cx + camera.fx * c.x() / c.z(), camera.cy + camera.fy * c.y() / c.z()};
}

Vec3 deproject(const Vec2& pixel, double depth, const CameraModel& camera) {
  if (!(depth > 0.0)) throw Error(ErrorCode::kInvalidArgument, "deproject needs a positive depth");
  const Vec3 c((pixel.x() - camera.cx) / camera.fx * depth, (pixel.y() - camera.cy) / camera.fy * depth, depth);
  return camera.pose * c;
}

namespace {
constexpr char kDepthMagic[8] = {'H', 'O', 'D', 'E', 'P', 'T', 'H', '\0'};

void put_u32(std::ostream& out, std::uint32_t x) {
  const unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                              static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4] = {};
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace

void write_depth(const std::string& path, const RenderOutput& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(kDepthMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(r.width));
  put_u32(out, static_cast<std::uint32_t>(r.height));
  for (float f : r.depth) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
}

std::vector<float> read_depth(const std::string& path, int& width, int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  char magic[8] = {};
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kDepthMagic, 8) != 0) throw Error(ErrorCode::kParse, path + ": bad depth header");
  width = static_cast<int>(get_u32(in));
  height = static_cast<int>(get_u32(in));
  std::vector<float> depth(static_cast<size_t>(width) * height);
  for (float& f : depth) {
    const std::uint32_t bits = get_u32(in);
    std::memcpy(&f, &bits, 4);
  }
  if (!in) throw Error(ErrorCode::kParse, path + ": truncated depth data");
  return depth;
}

}  // namespace handover
