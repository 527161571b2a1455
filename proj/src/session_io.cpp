#include "handover/session_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "handover/error.hpp"

namespace handover {

nlohmann::json to_json(const HandoverPlan& plan) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& [t, name] : plan.events) events.push_back({{"t", t}, {"event", name}});
  return {{"approach", to_json(plan.approach)}, {"deliver", to_json(plan.deliver)}, {"events", events}};
}

HandoverPlan handover_plan_from_json(const nlohmann::json& j) {
  HandoverPlan plan;
  plan.approach = trajectory_from_json(j.at("approach"));
  plan.deliver = trajectory_from_json(j.at("deliver"));
  for (const auto& e : j.at("events")) plan.events.emplace_back(e.at("t").get<double>(), e.at("event").get<std::string>());
  return plan;
}

nlohmann::json to_json(const Session& s, bool with_timings) {
  nlohmann::json gaze = nlohmann::json::array();
  for (const auto& f : s.gaze)
    gaze.push_back({f.timestamp, f.head_dir.x(), f.head_dir.y(), f.head_dir.z(), f.eye_dir.x(), f.eye_dir.y(),
                    f.eye_dir.z()});
  nlohmann::json j{{"format_version", kSessionFormatVersion},
                   {"id", s.id},
                   {"derived", s.derived},
                   {"status", to_string(s.status)},
                   {"scene", to_json(s.scene)},
                   {"config", to_json(s.config)},
                   {"utterance", s.utterance},
                   {"gaze", gaze}};
  nlohmann::json stages = nlohmann::json::object();
  if (s.gaze_point) stages["gaze_point"] = {s.gaze_point->x(), s.gaze_point->y()};
  if (s.command) stages["command"] = to_json(*s.command);
  if (s.selection) stages["selection"] = to_json(*s.selection);
  if (s.grasp) stages["grasp"] = grasp_debug_dump(*s.grasp);
  if (s.motion) stages["motion"] = to_json(*s.motion);
  if (s.executed_rank) stages["executed_rank"] = *s.executed_rank;
  j["stages"] = stages;
  if (s.failure) j["failure"] = {{"stage", to_string(s.failure->stage)}, {"code", s.failure->code}, {"reason", s.failure->reason}};
  if (with_timings) {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& [stage, secs] : s.timings) t.push_back({{"stage", to_string(stage)}, {"seconds", secs}});
    j["timings"] = t;
  }
  return j;
}

Session session_from_json(const nlohmann::json& j) {
  const int version = j.value("format_version", -1);
  if (version != kSessionFormatVersion)
    throw Error(ErrorCode::kVersionMismatch, "session format_version " + std::to_string(version) +
                                                 " unsupported (expected " + std::to_string(kSessionFormatVersion) + ")");
  Session s;
  s.id = j.at("id");
  s.derived = j.value("derived", false);
  s.status = status_from_string(j.at("status"));
  s.scene = scene_from_json(j.at("scene"));
  s.config = pipeline_config_from_json(j.at("config"));
  s.utterance = j.at("utterance");
  for (const auto& r : j.at("gaze")) {
    if (r.size() != 7) throw Error(ErrorCode::kParse, "gaze record needs 7 numbers");
    GazeFrame f;
    f.timestamp = r.at(0);
    f.head_dir = Vec3(r.at(1).get<double>(), r.at(2).get<double>(), r.at(3).get<double>());
    f.eye_dir = Vec3(r.at(4).get<double>(), r.at(5).get<double>(), r.at(6).get<double>());
    s.gaze.push_back(f);
  }
  const auto& st = j.at("stages");
  if (st.contains("gaze_point")) s.gaze_point = Vec2(st["gaze_point"].at(0).get<double>(), st["gaze_point"].at(1).get<double>());
  if (st.contains("command")) s.command = parsed_command_from_json(st["command"]);
  if (st.contains("selection")) s.selection = selection_from_json(st["selection"]);
  if (st.contains("grasp")) s.grasp = grasp_plan_from_json(st["grasp"]);
  if (st.contains("motion")) s.motion = handover_plan_from_json(st["motion"]);
  if (st.contains("executed_rank")) s.executed_rank = st["executed_rank"].get<size_t>();
  if (j.contains("failure")) {
    const auto& f = j["failure"];
    s.failure = Failure{stage_from_string(f.at("stage")), f.at("code"), f.at("reason")};
  }
  if (j.contains("timings"))
    for (const auto& t : j["timings"]) s.timings.emplace_back(stage_from_string(t.at("stage")), t.at("seconds").get<double>());
  return s;
}

std::string stage_record(const Session& s) {
  nlohmann::json j = to_json(s, false);
  j.erase("derived");
  return j.dump();
}

void save_session(const Session& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << to_json(s).dump(1) << '\n';
}

Session parse_session(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const size_t at = std::min<size_t>(e.byte, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(at > 0 ? at - 1 : 0), '\n');
    throw Error(ErrorCode::kParse, "session parse error at line " + std::to_string(line) + ": " + e.what());
  }
  try {
    return session_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed session record: ") + e.what());
  }
}

Session load_session(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_session(buf.str());
}

Session replay(const Session& recorded, const std::optional<PipelineConfig>& override_config) {
  Session s = run_pipeline(recorded.scene, recorded.gaze, recorded.utterance,
                           override_config ? *override_config : recorded.config, {}, recorded.id);
  s.derived = override_config.has_value();
  return s;
}

}  // namespace handover
