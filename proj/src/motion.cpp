#include "handover/motion.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <Eigen/SVD>

#include "handover/error.hpp"
#include "handover/scene.hpp"

namespace handover {

namespace {

constexpr double kPi = std::numbers::pi;

Pose rot_z(double q) {
  Pose p = Pose::Identity();
  p.linear() = Eigen::AngleAxisd(q, Vec3::UnitZ()).toRotationMatrix();
  return p;
}

Pose dh(double d, double a, double alpha) {
  Pose p = Pose::Identity();
  p.translation() = Vec3(a, 0.0, d);
  p.linear() = Eigen::AngleAxisd(alpha, Vec3::UnitX()).toRotationMatrix();
  return p;
}

}  // namespace

bool ArmModel::within_limits(const Vec6& q, double tol) const {
  for (int i = 0; i < 6; ++i)
    if (!std::isfinite(q[i]) || q[i] < lower[i] - tol || q[i] > upper[i] + tol) return false;
  return true;
}

Vec3 ArmModel::shoulder() const { return (links[0] * links[1]).translation(); }

double ArmModel::reach() const {
  double r = 0.0;
  for (int i = 2; i < 6; ++i) r += links[i].translation().norm();
  return r + flange.translation().norm();
}

ArmModel ur5e_arm(const Pose& base, double tool_length) {
  const std::array<double, 6> d{0.1625, 0.0, 0.0, 0.1333, 0.0997, 0.0996};
  const std::array<double, 6> a{0.0, -0.425, -0.3922, 0.0, 0.0, 0.0};
  const std::array<double, 6> alpha{kPi / 2, 0.0, 0.0, kPi / 2, -kPi / 2, 0.0};
  ArmModel arm;
  arm.links[0] = base;
  for (int i = 1; i < 6; ++i) arm.links[i] = dh(d[i - 1], a[i - 1], alpha[i - 1]);
  Pose tool = Pose::Identity();
  tool.translation() = Vec3(0.0, 0.0, tool_length);
  arm.flange = dh(d[5], a[5], alpha[5]) * tool;
  arm.lower[2] = -kPi;
  arm.upper[2] = kPi;
  arm.reference_pose = fk(arm, Vec6::Zero());
  return arm;
}

ArmModel default_arm() {
  // Base beside the robot-side table edge, facing the user.
  Pose base = Pose::Identity();
  base.translation() = Vec3(0.0, -0.40, 0.0);
  base.linear() = Eigen::AngleAxisd(kPi / 2, Vec3::UnitZ()).toRotationMatrix();
  return ur5e_arm(base);
}

Vec6 default_home() {
  Vec6 q;
  // Tool 30 cm above (0, -0.15, 0), pointing down.
  q << 2.579214, -2.275329, 2.113258, -1.408725, -1.570796, -0.562379;
  return q;
}

void RMPParams::validate() const {
  if (!(kappa > 0 && omega > 0 && soft_norm_c > 0 && dt > 0 && max_steps > 0 && pos_tol > 0 && rot_tol > 0 &&
        vel_tol > 0 && svd_cutoff > 0))
    throw Error(ErrorCode::kInvalidArgument, "RMP parameters must be positive");
}

Pose fk(const ArmModel& arm, const Vec6& q) {
  if (!arm.within_limits(q)) throw Error(ErrorCode::kOutOfLimits, "joint configuration outside limits");
  Pose t = Pose::Identity();
  for (int i = 0; i < 6; ++i) t = t * arm.links[i] * rot_z(q[i]);
  return t * arm.flange;
}

Mat6 jacobian(const ArmModel& arm, const Vec6& q) {
  if (!arm.within_limits(q)) throw Error(ErrorCode::kOutOfLimits, "joint configuration outside limits");
  std::array<Vec3, 6> axis, origin;
  Pose t = Pose::Identity();
  for (int i = 0; i < 6; ++i) {
    t = t * arm.links[i];
    axis[i] = t.linear().col(2);
    origin[i] = t.translation();
    t = t * rot_z(q[i]);
  }
  const Vec3 p = (t * arm.flange).translation();
  Mat6 j;
  for (int i = 0; i < 6; ++i) {
    j.block<3, 1>(0, i) = axis[i].cross(p - origin[i]);
    j.block<3, 1>(3, i) = axis[i];
  }
  return j;
}

int jacobian_rank(const Mat6& j, double tol) {
  Eigen::JacobiSVD<Mat6> svd(j);
  const auto& s = svd.singularValues();
  int r = 0;
  for (int i = 0; i < 6; ++i)
    if (s[i] > tol * s[0]) ++r;
  return r;
}

Vec6 task_error(const Pose& current, const Pose& goal) {
  Vec6 e;
  e.head<3>() = goal.translation() - current.translation();
  e.tail<3>() = rotation_log(goal.linear() * current.linear().transpose());
  return e;
}

TaskState task_state(const Pose& pose, const Vec6& x_dot) {
  TaskState s;
  s.x.head<3>() = pose.translation();
  s.x.tail<3>() = rotation_log(pose.linear());
  s.x_dot = x_dot;
  return s;
}

Vec6 attractor(const Vec6& error, const Vec6& x_dot, const RMPParams& p) {
  return p.kappa * error / (error.norm() + p.soft_norm_c) - p.omega * x_dot;
}

double attractor_potential(double r, double c) { return r - c * std::log1p(r / c); }

PullResult pull(const Vec6& f, const Mat6& a, const Mat6& j, double cutoff) {
  Eigen::JacobiSVD<Mat6> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Vec6 inv = Vec6::Zero();
  PullResult r;
  for (int i = 0; i < 6; ++i) {
    if (s[i] > cutoff * std::max(s[0], 1e-300))
      inv[i] = 1.0 / s[i];
    else
      r.truncated = true;
  }
  r.q_ddot = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * f;
  r.metric = j.transpose() * a * j;
  return r;
}

bool reachable(const ArmModel& arm, const Pose& target) {
  const Vec3 p = target.translation();
  if (!p.allFinite()) return false;
  return (p - arm.shoulder()).norm() <= 0.98 * arm.reach();
}

namespace {

double energy(const Vec6& e, const Vec6& x_dot, const RMPParams& p) {
  return 0.5 * x_dot.squaredNorm() + p.kappa * attractor_potential(e.norm(), p.soft_norm_c);
}

}  // namespace

JointTrajectory integrate(const ArmModel& arm, const Vec6& q0, const Pose& target, const RMPParams& params, double t0) {
  params.validate();
  if (!arm.within_limits(q0)) throw Error(ErrorCode::kOutOfLimits, "start configuration outside joint limits");
  if (!reachable(arm, target)) throw Error(ErrorCode::kUnreachable, "target lies outside the arm workspace");

  JointTrajectory traj;
  Vec6 q = q0, qd = Vec6::Zero();
  double t = t0;
  const Mat6 identity = Mat6::Identity();
  for (int step = 0;; ++step) {
    const Pose x = fk(arm, q);
    const Mat6 j = jacobian(arm, q);
    const Vec6 x_dot = j * qd;
    const Vec6 e = task_error(x, target);
    traj.samples.push_back({t, q, qd});
    traj.energy.push_back(energy(e, x_dot, params));
    traj.final_pos_error = e.head<3>().norm();
    traj.final_rot_error = e.tail<3>().norm();
    if (traj.final_pos_error < params.pos_tol && traj.final_rot_error < params.rot_tol && x_dot.norm() < params.vel_tol) {
      traj.converged = true;
      break;
    }
    if (step >= params.max_steps) break;

    Vec6 f = attractor(e, x_dot, params);
    if (params.table_repulsor) {
      const double h = std::max(x.translation().z() - params.table_z, 1e-3);
      f[2] += params.repulsor_gain / (h * h);
    }
    const PullResult pr = pull(f, identity, j, params.svd_cutoff);
    traj.singular |= pr.truncated;
    qd += pr.q_ddot * params.dt;
    const double peak = qd.cwiseAbs().maxCoeff();
    if (peak > arm.velocity_limit) qd *= arm.velocity_limit / peak;
    q += qd * params.dt;
    for (int i = 0; i < 6; ++i) {
      if (q[i] < arm.lower[i]) q[i] = arm.lower[i], qd[i] = 0.0;
      if (q[i] > arm.upper[i]) q[i] = arm.upper[i], qd[i] = 0.0;
    }
    t += params.dt;
  }
  return traj;
}

Pose nearest_symmetric(const Pose& grasp, const Pose& current) {
  Pose flipped = grasp;
  flipped.linear() = grasp.linear() * Eigen::AngleAxisd(kPi, Vec3::UnitZ()).toRotationMatrix();
  const double a = rotation_log(grasp.linear() * current.linear().transpose()).norm();
  const double b = rotation_log(flipped.linear() * current.linear().transpose()).norm();
  return b < a ? flipped : grasp;
}

HandoverPlan handover_plan(const ArmModel& arm, const Vec6& q0, const Pose& grasp, const Pose& user_pose,
                           double pregrasp_offset, const RMPParams& params) {
  if (!reachable(arm, grasp) || !reachable(arm, user_pose))
    throw Error(ErrorCode::kUnreachable, "handover targets lie outside the arm workspace");
  HandoverPlan plan;
  const Pose g = nearest_symmetric(grasp, fk(arm, q0));
  if (pregrasp_offset > 0.0) {
    Pose pre = g;
    pre.translation() -= pregrasp_offset * g.linear().col(2);
    plan.approach = integrate(arm, q0, pre, params);
    const auto& last = plan.approach.samples.back();
    JointTrajectory second = integrate(arm, last.q, g, params, last.t + params.dt);
    plan.approach.samples.insert(plan.approach.samples.end(), second.samples.begin(), second.samples.end());
    plan.approach.energy.insert(plan.approach.energy.end(), second.energy.begin(), second.energy.end());
    plan.approach.converged = plan.approach.converged && second.converged;
    plan.approach.singular |= second.singular;
    plan.approach.final_pos_error = second.final_pos_error;
    plan.approach.final_rot_error = second.final_rot_error;
  } else {
    plan.approach = integrate(arm, q0, g, params);
  }
  const auto& grasped = plan.approach.samples.back();
  plan.events.emplace_back(grasped.t, "gripper_close");
  const Pose u = nearest_symmetric(user_pose, fk(arm, grasped.q));
  plan.deliver = integrate(arm, grasped.q, u, params, grasped.t + params.dt);
  plan.events.emplace_back(plan.deliver.samples.back().t, "gripper_open");
  return plan;
}

Pose default_user_pose() {
  // Tool z toward the user (+y), jaw axis horizontal.
  Mat3 r;
  r.col(2) = Vec3::UnitY();
  r.col(1) = Vec3::UnitX();
  r.col(0) = r.col(1).cross(r.col(2));
  Pose p = Pose::Identity();
  p.linear() = r;
  p.translation() = Vec3(0.0, 0.05, 0.30);
  return p;
}

std::string format_trajectory(const JointTrajectory& traj, const RMPParams& p) {
  std::string out;
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "# kappa=%.17g omega=%.17g soft_norm_c=%.17g dt=%.17g max_steps=%d pos_tol=%.17g converged=%d\n",
                p.kappa, p.omega, p.soft_norm_c, p.dt, p.max_steps, p.pos_tol, traj.converged ? 1 : 0);
  out += buf;
  for (const auto& s : traj.samples) {
    int n = std::snprintf(buf, sizeof buf, "%.17g", s.t);
    for (int i = 0; i < 6; ++i) n += std::snprintf(buf + n, sizeof buf - n, " %.17g", s.q[i]);
    for (int i = 0; i < 6; ++i) n += std::snprintf(buf + n, sizeof buf - n, " %.17g", s.q_dot[i]);
    out += buf;
    out += '\n';
  }
  return out;
}

void save_trajectory(const JointTrajectory& traj, const RMPParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << format_trajectory(traj, params);
}

nlohmann::json to_json(const JointTrajectory& traj) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : traj.samples) {
    nlohmann::json r = nlohmann::json::array({s.t});
    for (int i = 0; i < 6; ++i) r.push_back(s.q[i]);
    for (int i = 0; i < 6; ++i) r.push_back(s.q_dot[i]);
    rows.push_back(r);
  }
  return {{"samples", rows},
          {"converged", traj.converged},
          {"singular", traj.singular},
          {"final_pos_error", traj.final_pos_error},
          {"final_rot_error", traj.final_rot_error}};
}

JointTrajectory trajectory_from_json(const nlohmann::json& j) {
  JointTrajectory traj;
  for (const auto& r : j.at("samples")) {
    TrajectorySample s;
    s.t = r.at(0);
    for (int i = 0; i < 6; ++i) s.q[i] = r.at(1 + i);
    for (int i = 0; i < 6; ++i) s.q_dot[i] = r.at(7 + i);
    traj.samples.push_back(s);
  }
  traj.converged = j.value("converged", false);
  traj.singular = j.value("singular", false);
  traj.final_pos_error = j.value("final_pos_error", 0.0);
  traj.final_rot_error = j.value("final_rot_error", 0.0);
  return traj;
}

nlohmann::json to_json(const RMPParams& p) {
  return {{"kappa", p.kappa},         {"omega", p.omega},         {"soft_norm_c", p.soft_norm_c},
          {"dt", p.dt},               {"max_steps", p.max_steps}, {"pos_tol", p.pos_tol},
          {"rot_tol", p.rot_tol},     {"vel_tol", p.vel_tol},     {"svd_cutoff", p.svd_cutoff},
          {"table_repulsor", p.table_repulsor}, {"repulsor_gain", p.repulsor_gain}, {"table_z", p.table_z}};
}

RMPParams rmp_params_from_json(const nlohmann::json& j) {
  RMPParams p;
  p.kappa = j.value("kappa", p.kappa);
  p.omega = j.value("omega", p.omega);
  p.soft_norm_c = j.value("soft_norm_c", p.soft_norm_c);
  p.dt = j.value("dt", p.dt);
  p.max_steps = j.value("max_steps", p.max_steps);
  p.pos_tol = j.value("pos_tol", p.pos_tol);
  p.rot_tol = j.value("rot_tol", p.rot_tol);
  p.vel_tol = j.value("vel_tol", p.vel_tol);
  p.svd_cutoff = j.value("svd_cutoff", p.svd_cutoff);
  p.table_repulsor = j.value("table_repulsor", p.table_repulsor);
  p.repulsor_gain = j.value("repulsor_gain", p.repulsor_gain);
  p.table_z = j.value("table_z", p.table_z);
  p.validate();
  return p;
}

}  // namespace handover
