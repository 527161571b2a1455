#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "handover/camera.hpp"
#include "handover/command_parser.hpp"
#include "handover/object_selector.hpp"
#include "handover/point_cloud.hpp"
#include "handover/scene.hpp"

namespace handover {

/// Parallel-jaw gripper. Gripper frame: origin midway between the contacts,
/// +z along the approach, +y along the jaw (closing) axis.
struct GripperModel {
  double max_width = 0.085;
  double finger_depth = 0.04;      // contact line to palm
  double finger_thickness = 0.008;
  double pad_half_width = 0.01;
  double tip_margin = 0.003;       // finger tip beyond the contact line
  double palm_thickness = 0.02;
  std::vector<Vec3> contact_template;  // inner finger surfaces at max_width

  void validate() const;
  /// Template scaled to the given opening.
  std::vector<Vec3> contact_cloud(double width) const;
};

GripperModel default_gripper();

struct GraspCandidate {
  Pose pose = Pose::Identity();
  double width = 0.0;
  Vec3 approach = Vec3::UnitZ();
  std::array<Vec3, 2> contacts{Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 2> normals{Vec3::Zero(), Vec3::Zero()};
  double stability = 0.0;
  std::optional<double> cograsp_score;
  double s_d = 0.0, s_a = 0.0;  // terms of the worst hand
};

struct HandPose {
  std::vector<Vec3> cloud;
  Vec3 approach = -Vec3::UnitY();
  Vec3 anchor = Vec3::Zero();
  std::optional<std::string> anchored_part;
};

struct GraspSamplingOptions {
  std::vector<bool> allowed;  // per point; empty means all points may be contacts
  double tube_radius = 0.002;
  double min_alignment = 0.5;
  int approach_angles = 12;
  bool check_table = true;
  double table_z = 0.0;
  std::vector<WorldPrimitive> obstacles;  // checked against the finger and palm volumes
};

/// Seeded antipodal sampler. Throws kNoGrasp for degenerate clouds or when
/// nothing feasible is found.
std::vector<GraspCandidate> sample_grasps(const PointCloud& cloud, const GripperModel& gripper, int count,
                                          std::uint64_t seed, const GraspSamplingOptions& options = {});

/// 48-point hand proxies on the standard grasp part (or the body when the
/// object has none), approaching from the user side (+y).
std::vector<HandPose> predict_hands(const PointCloud& object_cloud, const SceneObject& object, int count,
                                    std::uint64_t seed);

/// Mean pairwise squared distance (plain distance when `squared` is false).
double distance_measure(const std::vector<Vec3>& pc_g, const std::vector<Vec3>& pc_h, bool squared = true);

/// -a_g . a_h
double angle_measure(const Vec3& a_g, const Vec3& a_h);

/// Contact template placed at the grasp pose.
std::vector<Vec3> gripper_cloud(const GraspCandidate& grasp, const GripperModel& gripper);

/// min over hands of S_d / scale^2 + S_a. Fills cograsp_score, s_d and s_a.
std::vector<std::pair<GraspCandidate, double>> cograsp_score(const std::vector<GraspCandidate>& grasps,
                                                             const std::vector<HandPose>& hands,
                                                             const GripperModel& gripper, double scale = 1.0,
                                                             bool squared = true);

struct GraspPlanOptions {
  int completion_samples = 8000;
  int grasp_count = 64;
  int hand_count = 5;
  double cograsp_scale = 1.0;
  bool scale_by_diameter = false;  // use the object's bounding-sphere diameter as the scale
  bool squared_distance = true;
  double min_stability = 0.8;
  int outlier_k = 8;
  double outlier_std_ratio = 2.0;
  std::uint64_t seed = 0;
};

struct GraspPlan {
  GraspCandidate best;
  std::vector<GraspCandidate> candidates;
  std::vector<HandPose> hands;
  size_t observed_points = 0;
  size_t permitted_points = 0;
  bool used_cograsp = false;
};

/// Part-constrained plans rank by stability; unconstrained plans by CoGrasp.
GraspPlan plan_grasp(const RenderOutput& render, const CameraModel& camera, const SelectionResult& selection,
                     const ParsedCommand& command, const Scene& scene, const GripperModel& gripper,
                     const GraspPlanOptions& options = {});

/// True when a world point may be touched under the command's part semantics.
bool contact_permitted(const Vec3& p, const SceneObject& object, const PixelRegion& region, const CameraModel& camera,
                       const std::optional<std::string>& part, Holder holder);

nlohmann::json to_json(const GraspCandidate& g);
GraspCandidate grasp_from_json(const nlohmann::json& j);
/// Every candidate, hand and score term plus the chosen index.
nlohmann::json grasp_debug_dump(const GraspPlan& plan);
GraspPlan grasp_plan_from_json(const nlohmann::json& j);

/// Candidate indices from best to worst under the plan's ranking (CoGrasp
/// score when used, stability otherwise).
std::vector<size_t> ranked_candidates(const GraspPlan& plan);

}  // namespace handover
