#include "handover/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "handover/error.hpp"

namespace handover {

namespace {

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }
Vec3 vec_from(const nlohmann::json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

const char* const kStageNames[] = {"render", "gaze", "parse", "select", "grasp", "motion"};
const char* const kStatusNames[] = {"pending", "selected", "planned", "executed", "failed"};

}  // namespace

void PipelineConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "beta must lie in (0, 1]");
  if (!(sigma_px > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma_px must be positive");
  monitor.validate();
  camera.validate();
  rmp.validate();
  if (grasp.completion_samples <= 0 || grasp.grasp_count <= 0 || grasp.hand_count <= 0 || grasp.outlier_k < 1 ||
      !(grasp.cograsp_scale > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "grasp counts and scale must be positive");
  if (motion_attempts < 1) throw Error(ErrorCode::kInvalidArgument, "motion_attempts must be at least 1");
  if (pregrasp_offset < 0.0) throw Error(ErrorCode::kInvalidArgument, "pregrasp_offset must be non-negative");
}

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json home = nlohmann::json::array();
  for (int i = 0; i < 6; ++i) home.push_back(c.home[i]);
  return {
      {"alpha", c.alpha},
      {"beta", c.beta},
      {"sigma_px", c.sigma_px},
      {"monitor",
       {{"origin", vec_json(c.monitor.origin)},
        {"v1", vec_json(c.monitor.v1)},
        {"v2", vec_json(c.monitor.v2)},
        {"width_px", c.monitor.width_px},
        {"height_px", c.monitor.height_px}}},
      {"head", {{"position", vec_json(c.head.position)}, {"calibrated", c.head.calibrated}}},
      {"camera",
       {{"fx", c.camera.fx},
        {"fy", c.camera.fy},
        {"cx", c.camera.cx},
        {"cy", c.camera.cy},
        {"width", c.camera.width},
        {"height", c.camera.height},
        {"pose", pose_to_json(c.camera.pose)}}},
      {"detector",
       {{"synonym_miss_rate", c.detector.synonym_miss_rate},
        {"confidence", c.detector.confidence},
        {"confidence_jitter", c.detector.confidence_jitter},
        {"spurious_rate", c.detector.spurious_rate},
        {"spurious_confidence", c.detector.spurious_confidence},
        {"match_adjectives", c.detector.match_adjectives},
        {"seed", c.detector_seed}}},
      {"grasp",
       {{"completion_samples", c.grasp.completion_samples},
        {"grasp_count", c.grasp.grasp_count},
        {"hand_count", c.grasp.hand_count},
        {"cograsp_scale", c.grasp.cograsp_scale},
        {"scale_by_diameter", c.grasp.scale_by_diameter},
        {"squared_distance", c.grasp.squared_distance},
        {"min_stability", c.grasp.min_stability},
        {"outlier_k", c.grasp.outlier_k},
        {"outlier_std_ratio", c.grasp.outlier_std_ratio},
        {"seed", c.grasp.seed}}},
      {"rmp", to_json(c.rmp)},
      {"user_pose", pose_to_json(c.user_pose)},
      {"home", home},
      {"pregrasp_offset", c.pregrasp_offset},
      {"plan_motion", c.plan_motion},
      {"motion_attempts", c.motion_attempts},
  };
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.sigma_px = j.value("sigma_px", c.sigma_px);
  if (j.contains("monitor")) {
    const auto& m = j["monitor"];
    if (m.contains("origin")) c.monitor.origin = vec_from(m["origin"]);
    if (m.contains("v1")) c.monitor.v1 = vec_from(m["v1"]);
    if (m.contains("v2")) c.monitor.v2 = vec_from(m["v2"]);
    c.monitor.width_px = m.value("width_px", c.monitor.width_px);
    c.monitor.height_px = m.value("height_px", c.monitor.height_px);
    c.head = default_head(c.monitor);
  }
  if (j.contains("head")) {
    const auto& h = j["head"];
    if (h.contains("position")) c.head.position = vec_from(h["position"]);
    c.head.calibrated = h.value("calibrated", c.head.calibrated);
  }
  if (j.contains("camera")) {
    const auto& m = j["camera"];
    c.camera.fx = m.value("fx", c.camera.fx);
    c.camera.fy = m.value("fy", c.camera.fy);
    c.camera.cx = m.value("cx", c.camera.cx);
    c.camera.cy = m.value("cy", c.camera.cy);
    c.camera.width = m.value("width", c.camera.width);
    c.camera.height = m.value("height", c.camera.height);
    if (m.contains("pose")) c.camera.pose = pose_from_json(m["pose"]);
  }
  if (j.contains("detector")) {
    const auto& d = j["detector"];
    c.detector.synonym_miss_rate = d.value("synonym_miss_rate", c.detector.synonym_miss_rate);
    c.detector.confidence = d.value("confidence", c.detector.confidence);
    c.detector.confidence_jitter = d.value("confidence_jitter", c.detector.confidence_jitter);
    c.detector.spurious_rate = d.value("spurious_rate", c.detector.spurious_rate);
    c.detector.spurious_confidence = d.value("spurious_confidence", c.detector.spurious_confidence);
    c.detector.match_adjectives = d.value("match_adjectives", c.detector.match_adjectives);
    c.detector_seed = d.value("seed", c.detector_seed);
  }
  if (j.contains("grasp")) {
    const auto& g = j["grasp"];
    c.grasp.completion_samples = g.value("completion_samples", c.grasp.completion_samples);
    c.grasp.grasp_count = g.value("grasp_count", c.grasp.grasp_count);
    c.grasp.hand_count = g.value("hand_count", c.grasp.hand_count);
    c.grasp.cograsp_scale = g.value("cograsp_scale", c.grasp.cograsp_scale);
    c.grasp.scale_by_diameter = g.value("scale_by_diameter", c.grasp.scale_by_diameter);
    c.grasp.squared_distance = g.value("squared_distance", c.grasp.squared_distance);
    c.grasp.min_stability = g.value("min_stability", c.grasp.min_stability);
    c.grasp.outlier_k = g.value("outlier_k", c.grasp.outlier_k);
    c.grasp.outlier_std_ratio = g.value("outlier_std_ratio", c.grasp.outlier_std_ratio);
    c.grasp.seed = g.value("seed", c.grasp.seed);
  }
  if (j.contains("rmp")) c.rmp = rmp_params_from_json(j["rmp"]);
  if (j.contains("user_pose")) c.user_pose = pose_from_json(j["user_pose"]);
  if (j.contains("home")) {
    const auto& h = j["home"];
    if (h.size() != 6) throw Error(ErrorCode::kParse, "home needs 6 joint values");
    for (int i = 0; i < 6; ++i) c.home[i] = h.at(i).get<double>();
  }
  c.pregrasp_offset = j.value("pregrasp_offset", c.pregrasp_offset);
  c.plan_motion = j.value("plan_motion", c.plan_motion);
  c.motion_attempts = j.value("motion_attempts", c.motion_attempts);
  c.validate();
  return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  try {
    return pipeline_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
}

std::string to_string(Stage s) { return kStageNames[static_cast<int>(s)]; }
std::string to_string(SessionStatus s) { return kStatusNames[static_cast<int>(s)]; }

Stage stage_from_string(const std::string& s) {
  for (int i = 0; i < 6; ++i)
    if (s == kStageNames[i]) return static_cast<Stage>(i);
  throw Error(ErrorCode::kParse, "unknown stage '" + s + "'");
}

SessionStatus status_from_string(const std::string& s) {
  for (int i = 0; i < 5; ++i)
    if (s == kStatusNames[i]) return static_cast<SessionStatus>(i);
  throw Error(ErrorCode::kParse, "unknown status '" + s + "'");
}

std::vector<GazeFrame> gaze_at_pixel(const Vec2& uv, const PipelineConfig& config, int frames, double noise_deg,
                                     std::uint64_t seed) {
  return simulate_gaze(image_to_monitor(uv, config.monitor), config.monitor, config.head, noise_deg, frames, seed);
}

Session run_pipeline(const Scene& scene, const std::vector<GazeFrame>& gaze, const std::string& utterance,
                     const PipelineConfig& config, const EventSink& sink, const std::string& session_id) {
  Session s;
  s.id = session_id;
  s.scene = scene;
  s.config = config;
  s.gaze = gaze;
  s.utterance = utterance;
  auto emit = [&](const std::string& type, nlohmann::json data) {
    if (sink) sink({type, std::move(data)});
  };

  Stage stage = Stage::kRender;
  using Clock = std::chrono::steady_clock;
  auto started = Clock::now();
  auto finish = [&](nlohmann::json data = nlohmann::json::object()) {
    const double secs = std::chrono::duration<double>(Clock::now() - started).count();
    s.timings.emplace_back(stage, secs);
    data["stage"] = to_string(stage);
    data["seconds"] = secs;
    emit("stage", std::move(data));
  };
  auto begin = [&](Stage next) {
    stage = next;
    started = Clock::now();
  };

  try {
    config.validate();
    validate(scene);
    const RenderOutput rendered = render(scene, config.camera);
    finish({{"visible", rendered.boxes.size()}});

    begin(Stage::kGaze);
    if (gaze.empty()) throw Error(ErrorCode::kEmptyInput, "no gaze frames recorded");
    const Vec2 point = monitor_to_image(track_gaze(gaze, config.monitor, config.head, config.alpha, config.beta),
                                        config.monitor);
    s.gaze_point = point;
    const Heatmap heat = build_heatmap(point, config.camera.width, config.camera.height, config.sigma_px);
    emit("heatmap", {{"center", {point.x(), point.y()}}, {"sigma_px", heat.sigma_px}, {"outside", heat.center_outside}});
    finish();

    begin(Stage::kParse);
    s.command = parse(utterance);
    finish({{"command", to_json(*s.command)}});

    begin(Stage::kSelect);
    s.selection = select_target(*s.command, heat, rendered, scene, config.detector, config.detector_seed);
    s.status = SessionStatus::kSelected;
    finish({{"object_id", s.selection->chosen.object_id}});

    begin(Stage::kGrasp);
    emit("progress", {{"stage", "grasp"}, {"message", "sampling grasps"}});
    s.grasp = plan_grasp(rendered, config.camera, *s.selection, *s.command, scene, default_gripper(), config.grasp);
    s.status = SessionStatus::kPlanned;
    finish({{"candidates", s.grasp->candidates.size()}, {"cograsp", s.grasp->used_cograsp}});

    if (config.plan_motion) {
      begin(Stage::kMotion);
      const ArmModel arm = default_arm();
      // Ranked candidates are tried in turn; the first one the arm reaches is executed.
      const auto order = ranked_candidates(*s.grasp);
      const size_t attempts = std::min<size_t>(order.size(), static_cast<size_t>(config.motion_attempts));
      for (size_t k = 0; k < attempts; ++k) {
        const GraspCandidate& g = s.grasp->candidates[order[k]];
        try {
          s.motion = handover_plan(arm, config.home, g.pose, config.user_pose, config.pregrasp_offset, config.rmp);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kUnreachable) throw;
          s.motion.reset();
          continue;
        }
        if (s.motion->converged()) {
          s.executed_rank = k;
          break;
        }
      }
      if (!s.executed_rank) {
        if (!s.motion) throw Error(ErrorCode::kUnreachable, "no grasp candidate is reachable");
        throw Error(ErrorCode::kNotConverged, "motion did not converge within max_steps");
      }
      s.status = SessionStatus::kExecuted;
      finish({{"approach_samples", s.motion->approach.samples.size()},
              {"deliver_samples", s.motion->deliver.samples.size()},
              {"grasp_rank", *s.executed_rank}});
    }
  } catch (const Error& e) {
    s.status = SessionStatus::kFailed;
    s.failure = Failure{stage, std::string(to_string(e.code())), e.what()};
  } catch (const std::exception& e) {
    s.status = SessionStatus::kFailed;
    s.failure = Failure{stage, "internal", e.what()};
  }
  if (s.failure)
    emit("failed", {{"stage", to_string(s.failure->stage)}, {"code", s.failure->code}, {"reason", s.failure->reason}});
  return s;
}

}  // namespace handover
