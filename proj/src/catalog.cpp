// Household-object templates built from primitives. Every template's local
// frame has its origin at the centre of the footprint with z = 0 on the
// table surface; x runs along the longest axis.
#include <cmath>
#include <numbers>

#include "handover/error.hpp"
#include "handover/scene.hpp"

namespace handover {
namespace {

constexpr double kPi = std::numbers::pi;

PlacedPrimitive at(Primitive p, const Vec3& position, double yaw = 0.0, bool lying_along_x = false) {
  Mat3 r = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  if (lying_along_x) r = r * Eigen::AngleAxisd(kPi / 2, Vec3::UnitY()).toRotationMatrix();
  Pose pose = Pose::Identity();
  pose.linear() = r;
  pose.translation() = position;
  return {std::move(p), pose};
}

// Keeps points with z >= height (in the object frame).
HalfSpace above(double height) { return HalfSpace{-Vec3::UnitZ(), -height}; }
HalfSpace below(double height) { return HalfSpace{Vec3::UnitZ(), height}; }
HalfSpace beyond_x(double x) { return HalfSpace{-Vec3::UnitX(), -x}; }

ObjectPart part(std::string name, std::vector<int> prims, std::optional<HalfSpace> clip = std::nullopt,
                bool standard = false) {
  return ObjectPart{std::move(name), std::move(prims), clip, standard, standard};
}

std::vector<ObjectTemplate> build_catalog() {
  std::vector<ObjectTemplate> c;

  {  // Bowl: octagonal wall ring on a thin base disc.
    Composite s;
    s.primitives.push_back(at(Cylinder{0.064, 0.004}, Vec3(0, 0, 0.004)));
    std::vector<int> walls;
    for (int k = 0; k < 8; ++k) {
      const double th = k * kPi / 4;
      s.primitives.push_back(at(Box{Vec3(0.0295, 0.004, 0.025)}, Vec3(0.068 * std::cos(th), 0.068 * std::sin(th), 0.025),
                                th + kPi / 2));
      walls.push_back(k + 1);
    }
    std::vector<int> all = walls;
    all.insert(all.begin(), 0);
    c.push_back({"bowl", {"dish"}, {"red", "white"}, s,
                 {part("rim", walls, above(0.032)), part("base", all, below(0.032), true)}});
  }
  c.push_back({"cup", {"glass", "tumbler"}, {"blue", "red", "green"},
               Composite{{at(Cylinder{0.035, 0.045}, Vec3(0, 0, 0.045))}},
               {part("rim", {0}, above(0.07)), part("body", {0}, below(0.07), true)}});
  c.push_back({"flashlight", {"torch", "flash light"}, {"red", "blue", "yellow", "black"},
               Composite{{at(Cylinder{0.016, 0.07}, Vec3(-0.02, 0, 0.022), 0.0, true),
                          at(Cylinder{0.022, 0.02}, Vec3(0.07, 0, 0.022), 0.0, true)}},
               {part("handle", {0}, std::nullopt, true), part("head", {1})}});
  c.push_back({"banana", {}, {"yellow"},
               Composite{{at(Cylinder{0.012, 0.03}, Vec3(-0.064, 0.016, 0.018), kPi / 6, true),
                          at(Cylinder{0.018, 0.04}, Vec3(0, 0, 0.018), 0.0, true),
                          at(Cylinder{0.013, 0.03}, Vec3(0.064, 0.016, 0.018), -kPi / 6, true)}},
               {part("stem", {0}), part("middle", {1}, std::nullopt, true), part("tip", {2})}});
  c.push_back({"drill", {"power drill"}, {"yellow", "black"},
               Composite{{at(Box{Vec3(0.04, 0.035, 0.02)}, Vec3(0, 0, 0.02)),
                          at(Box{Vec3(0.02, 0.025, 0.055)}, Vec3(0, 0, 0.095)),
                          at(Box{Vec3(0.09, 0.028, 0.03)}, Vec3(0.04, 0, 0.18))}},
               {part("battery", {0}), part("handle", {1}, std::nullopt, true), part("body", {2})}});
  c.push_back({"mug", {"coffee mug"}, {"red", "white", "blue"},
               Composite{{at(Cylinder{0.04, 0.045}, Vec3(0, 0, 0.045)), at(Box{Vec3(0.012, 0.006, 0.03)}, Vec3(0.048, 0, 0.05))}},
               {part("handle", {1}, std::nullopt, true), part("rim", {0}, above(0.07)), part("body", {0}, below(0.07))}});
  c.push_back({"chef can", {"coffee can", "master chef can"}, {"blue"},
               Composite{{at(Cylinder{0.041, 0.07}, Vec3(0, 0, 0.07))}},
               {part("lid", {0}, above(0.12)), part("body", {0}, below(0.12), true)}});
  c.push_back({"screwdriver", {"screw driver"}, {"red", "yellow"},
               Composite{{at(Cylinder{0.015, 0.05}, Vec3(-0.05, 0, 0.015), 0.0, true),
                          at(Cylinder{0.004, 0.05}, Vec3(0.05, 0, 0.015), 0.0, true)}},
               {part("handle", {0}, std::nullopt, true), part("shaft", {1}), part("tip", {1}, beyond_x(0.08))}});
  c.push_back({"scissors", {"shears"}, {"red", "black"},
               Composite{{at(Box{Vec3(0.015, 0.012, 0.005)}, Vec3(-0.045, 0.013, 0.005)),
                          at(Box{Vec3(0.015, 0.012, 0.005)}, Vec3(-0.045, -0.013, 0.005)),
                          at(Box{Vec3(0.045, 0.008, 0.004)}, Vec3(0.03, 0, 0.004))}},
               {part("handles", {0, 1}, std::nullopt, true), part("blades", {2})}});
  c.push_back({"fish can", {"tuna can", "tuna fish can"}, {"silver"},
               Composite{{at(Cylinder{0.0415, 0.0165}, Vec3(0, 0, 0.0165))}},
               {part("lid", {0}, above(0.025)), part("side", {0}, below(0.025), true)}});
  c.push_back({"pear", {}, {"green", "yellow"},
               Composite{{at(Sphere{0.032}, Vec3(0, 0, 0.032)), at(Sphere{0.022}, Vec3(0, 0, 0.072))}}, {}});
  c.push_back({"strawberry", {}, {"red"}, Composite{{at(Sphere{0.017}, Vec3(0, 0, 0.017))}}, {}});
  c.push_back({"small clamp", {"small spring clamp"}, {"black", "red"},
               Composite{{at(Box{Vec3(0.012, 0.006, 0.007)}, Vec3(-0.002, 0, 0.007)),
                          at(Box{Vec3(0.003, 0.009, 0.007)}, Vec3(0.012, 0, 0.007))}},
               {}});
  c.push_back({"medium clamp", {"medium spring clamp"}, {"black", "red"},
               Composite{{at(Box{Vec3(0.014, 0.007, 0.009)}, Vec3(-0.002, 0, 0.009)),
                          at(Box{Vec3(0.004, 0.011, 0.009)}, Vec3(0.014, 0, 0.009))}},
               {}});
  c.push_back({"large clamp", {"large spring clamp"}, {"black", "red"},
               Composite{{at(Box{Vec3(0.045, 0.012, 0.012)}, Vec3(-0.005, 0, 0.012)),
                          at(Box{Vec3(0.006, 0.022, 0.012)}, Vec3(0.04, 0, 0.012))}},
               {}});
  c.push_back({"eraser", {"pencil eraser", "rubber"}, {"pink", "white"},
               Composite{{at(Box{Vec3(0.004, 0.0025, 0.0025)}, Vec3(0, 0, 0.0025))}}, {}});
  return c;
}

}  // namespace

const std::vector<ObjectTemplate>& default_catalog() {
  static const std::vector<ObjectTemplate> catalog = build_catalog();
  return catalog;
}

const ObjectTemplate& catalog_entry(const std::string& name) {
  for (const auto& t : default_catalog())
    if (t.name == name) return t;
  throw Error(ErrorCode::kUnknownObject, "no catalog template named '" + name + "'");
}

}  // namespace handover
