#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "handover/geometry.hpp"

namespace handover {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Serial arm of six revolute joints: fk(q) = links[0] Rz(q0) links[1] Rz(q1)
/// ... links[5] Rz(q5) flange.
struct ArmModel {
  std::array<Pose, 6> links;
  Pose flange = Pose::Identity();
  Vec6 lower = Vec6::Constant(-2.0 * 3.141592653589793);
  Vec6 upper = Vec6::Constant(2.0 * 3.141592653589793);
  double velocity_limit = 3.141592653589793;  // rad/s per joint
  Pose reference_pose = Pose::Identity();      // fk at q = 0

  bool within_limits(const Vec6& q, double tol = 1e-12) const;
  Vec3 shoulder() const;
  double reach() const;
};

/// UR5e-style kinematic table (standard DH) plus a tool offset along the flange z.
ArmModel ur5e_arm(const Pose& base, double tool_length = 0.15);
ArmModel default_arm();
/// Elbow-up configuration with the tool above the robot half of the table, pointing down.
Vec6 default_home();

struct RMPParams {
  double kappa = 40.0;
  double omega = 12.0;
  double soft_norm_c = 1.2;
  double dt = 0.01;
  int max_steps = 1000;
  double pos_tol = 0.005;
  double rot_tol = 0.02;   // rad
  double vel_tol = 0.02;   // task-space speed
  double svd_cutoff = 1e-4;
  bool table_repulsor = false;
  double repulsor_gain = 0.002;
  double table_z = 0.0;

  void validate() const;
  bool underdamped() const { return omega * omega < 4.0 * kappa / soft_norm_c; }
};

struct TaskState {
  Vec6 x = Vec6::Zero();      // position and rotation vector
  Vec6 x_dot = Vec6::Zero();  // linear and angular velocity
};

struct TrajectorySample {
  double t = 0.0;
  Vec6 q = Vec6::Zero();
  Vec6 q_dot = Vec6::Zero();
};

struct JointTrajectory {
  std::vector<TrajectorySample> samples;
  std::vector<double> energy;  // task-space energy per sample
  bool converged = false;
  bool singular = false;       // the pseudoinverse cut a singular value at some step
  double final_pos_error = 0.0;
  double final_rot_error = 0.0;
};

/// Throws kOutOfLimits for configurations outside the joint limits.
Pose fk(const ArmModel& arm, const Vec6& q);
/// Geometric Jacobian of the tool point: rows 0-2 linear, 3-5 angular.
Mat6 jacobian(const ArmModel& arm, const Vec6& q);
/// Numerical rank of J (singular values above `tol` times the largest).
int jacobian_rank(const Mat6& j, double tol = 1e-6);

/// Goal error [p_g - p; log(R_g R^T)].
Vec6 task_error(const Pose& current, const Pose& goal);
TaskState task_state(const Pose& pose, const Vec6& x_dot);

/// f = kappa * s - omega * x_dot with s = e / (|e| + c).
Vec6 attractor(const Vec6& error, const Vec6& x_dot, const RMPParams& params);
/// Potential whose gradient magnitude is |e| / (|e| + c).
double attractor_potential(double r, double c);

struct PullResult {
  Vec6 q_ddot;
  Mat6 metric;
  bool truncated = false;  // a singular value fell below the cutoff
};

/// q_ddot = pinv(J) f via SVD with a relative cutoff; A_q = J^T A J.
PullResult pull(const Vec6& f, const Mat6& a, const Mat6& j, double cutoff = 1e-4);

/// Coarse workspace test run before integration.
bool reachable(const ArmModel& arm, const Pose& target);

/// Semi-implicit Euler on the pulled-back attractor. Throws kOutOfLimits /
/// kUnreachable; non-convergence is flagged, not thrown.
JointTrajectory integrate(const ArmModel& arm, const Vec6& q0, const Pose& target, const RMPParams& params,
                          double t0 = 0.0);

/// Of the two jaw-symmetric versions of a grasp, the one closer to `current`.
Pose nearest_symmetric(const Pose& grasp, const Pose& current);

struct HandoverPlan {
  JointTrajectory approach;  // pre-grasp then grasp
  JointTrajectory deliver;   // grasp to the user pose
  std::vector<std::pair<double, std::string>> events;
  bool converged() const { return approach.converged && deliver.converged; }
};

HandoverPlan handover_plan(const ArmModel& arm, const Vec6& q0, const Pose& grasp, const Pose& user_pose,
                           double pregrasp_offset, const RMPParams& params);

/// Delivery pose in front of the user, tool pointing toward +y.
Pose default_user_pose();

/// Header line with the parameters, then "t q0..q5 qd0..qd5" rows.
std::string format_trajectory(const JointTrajectory& traj, const RMPParams& params);
void save_trajectory(const JointTrajectory& traj, const RMPParams& params, const std::string& path);

nlohmann::json to_json(const JointTrajectory& traj);
JointTrajectory trajectory_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RMPParams& p);
RMPParams rmp_params_from_json(const nlohmann::json& j);

}  // namespace handover
