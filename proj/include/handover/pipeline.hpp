#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "handover/camera.hpp"
#include "handover/command_parser.hpp"
#include "handover/error.hpp"
#include "handover/gaze.hpp"
#include "handover/grasp_planner.hpp"
#include "handover/motion.hpp"
#include "handover/object_selector.hpp"
#include "handover/scene.hpp"

namespace handover {

struct PipelineConfig {
  double alpha = 0.3;
  double beta = 0.3;
  double sigma_px = 57.0;
  MonitorPlane monitor = default_monitor();
  HeadPose head = default_head(default_monitor());
  CameraModel camera = default_camera();
  DetectorNoise detector;
  std::uint64_t detector_seed = 0;
  GraspPlanOptions grasp;
  RMPParams rmp;
  Pose user_pose = default_user_pose();
  Vec6 home = default_home();
  double pregrasp_offset = 0.05;
  bool plan_motion = true;
  int motion_attempts = 16; // ranked grasps tried before the motion stage fails

  void validate() const;
};

nlohmann::json to_json(const PipelineConfig& c);
/// Missing keys keep their defaults.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
PipelineConfig load_pipeline_config(const std::string& path);

enum class Stage { kRender, kGaze, kParse, kSelect, kGrasp, kMotion };
enum class SessionStatus { kPending, kSelected, kPlanned, kExecuted, kFailed };

std::string to_string(Stage s);
std::string to_string(SessionStatus s);
Stage stage_from_string(const std::string& s);
SessionStatus status_from_string(const std::string& s);

struct Failure {
  Stage stage = Stage::kRender;
  std::string code;
  std::string reason;
};

struct Session {
  std::string id;
  Scene scene;
  PipelineConfig config;
  std::vector<GazeFrame> gaze;
  std::string utterance;

  std::optional<Vec2> gaze_point;  // smoothed image pixel
  std::optional<ParsedCommand> command;
  std::optional<SelectionResult> selection;
  std::optional<GraspPlan> grasp;
  std::optional<HandoverPlan> motion;
  std::optional<size_t> executed_rank;  // rank of the grasp the motion stage executed
  std::vector<std::pair<Stage, double>> timings;  // wall-clock seconds per completed stage

  SessionStatus status = SessionStatus::kPending;
  std::optional<Failure> failure;
  bool derived = false;  // re-executed from a recording under a different config
};

/// Events emitted while a pipeline runs: "stage" on completion of each stage,
/// "heatmap" after the gaze stage, "progress" from long stages, and "failed".
struct PipelineEvent {
  std::string type;
  nlohmann::json data;
};
using EventSink = std::function<void(const PipelineEvent&)>;

/// render -> gaze -> parse -> select -> grasp -> motion. Stage errors end the
/// run and are recorded in the session; nothing is thrown.
Session run_pipeline(const Scene& scene, const std::vector<GazeFrame>& gaze, const std::string& utterance,
                     const PipelineConfig& config, const EventSink& sink = {}, const std::string& session_id = "session");

/// Frames looking at an image pixel without noise, as produced for cursor input.
std::vector<GazeFrame> gaze_at_pixel(const Vec2& uv, const PipelineConfig& config, int frames = 30,
                                     double noise_deg = 0.0, std::uint64_t seed = 0);

}  // namespace handover
