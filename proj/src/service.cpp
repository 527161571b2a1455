#include "handover/service.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <map>
#include <mutex>
#include <thread>

#include "handover/camera.hpp"
#include "handover/error.hpp"
#include "handover/session_io.hpp"

namespace handover {

namespace {

using nlohmann::json;

constexpr double kFramePeriod = 1.0 / 30.0;

struct SessionEntry {
  std::mutex mu;
  std::condition_variable cv;
  Session session;
  std::vector<PipelineEvent> events;
  bool running = false;
};

struct SceneEntry {
  Scene scene;
  std::optional<RenderOutput> render;  // filled on first request
  std::mutex mu;
};

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownObject: return 404;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  reply(res, status, {{"error", code}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("request body is not JSON: ") + e.what());
  }
}

std::string encode_bytes(const void* data, size_t n) {
  return httplib::detail::base64_encode(std::string(static_cast<const char*>(data), n));
}

json render_json(const RenderOutput& r) {
  std::vector<std::uint8_t> labels(r.labels.size());
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint8_t>(r.labels[i]);
  json boxes = json::object();
  for (const auto& [id, b] : r.boxes) boxes[id] = to_json(b);
  return {{"width", r.width},
          {"height", r.height},
          {"object_ids", r.object_ids},
          {"boxes", boxes},
          {"labels", encode_bytes(labels.data(), labels.size())},
          {"depth", encode_bytes(r.depth.data(), r.depth.size() * sizeof(float))}};
}

std::vector<GazeFrame> frames_from_json(const json& rows) {
  std::vector<GazeFrame> out;
  for (const auto& r : rows) {
    if (!r.is_array() || r.size() != 7) throw Error(ErrorCode::kParse, "gaze frame needs 7 numbers");
    GazeFrame f;
    f.timestamp = r.at(0).get<double>();
    f.head_dir = Vec3(r.at(1).get<double>(), r.at(2).get<double>(), r.at(3).get<double>());
    f.eye_dir = Vec3(r.at(4).get<double>(), r.at(5).get<double>(), r.at(6).get<double>());
    out.push_back(f);
  }
  return out;
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  httplib::Server server;
  std::thread thread;
  std::mutex mu;  // guards the maps and counters
  std::map<std::string, std::shared_ptr<SceneEntry>> scenes;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions;
  std::uint64_t next_session = 1;

  std::shared_ptr<SceneEntry> scene(const std::string& id) {
    std::lock_guard<std::mutex> lock(mu);
    auto it = scenes.find(id);
    return it == scenes.end() ? nullptr : it->second;
  }
  std::shared_ptr<SessionEntry> session(const std::string& id) {
    std::lock_guard<std::mutex> lock(mu);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  static void push(SessionEntry& e, PipelineEvent ev) {
    {
      std::lock_guard<std::mutex> lock(e.mu);
      e.events.push_back(std::move(ev));
    }
    e.cv.notify_all();
  }

  void stream_samples(SessionEntry& e, const Session& s) {
    if (!s.motion) return;
    const ArmModel arm = default_arm();
    double offset = 0.0;
    using Phase = std::pair<const char*, const JointTrajectory*>;
    for (const auto& [phase, traj] : {Phase{"approach", &s.motion->approach}, Phase{"deliver", &s.motion->deliver}}) {
      double next = 0.0;
      for (size_t k = 0; k < traj->samples.size(); ++k) {
        const auto& smp = traj->samples[k];
        if (smp.t + 1e-12 < next && k + 1 != traj->samples.size()) continue;
        next = smp.t + options.sample_cadence_s;
        const Vec3 tool = fk(arm, smp.q).translation();
        push(e, {"sample",
                 {{"phase", phase},
                  {"t", offset + smp.t},
                  {"q", std::vector<double>(smp.q.data(), smp.q.data() + 6)},
                  {"tool", {tool.x(), tool.y(), tool.z()}}}});
      }
      if (!traj->samples.empty()) offset += traj->samples.back().t;
    }
  }

  void routes() {
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const Error& e) {
        reply_error(res, http_status(e.code()), std::string(to_string(e.code())), e.what());
      } catch (const json::exception& e) {
        reply_error(res, 400, "parse", e.what());
      } catch (const std::exception& e) {
        reply_error(res, 500, "internal", e.what());
      }
    });

    server.Post("/scenes", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      Scene sc;
      if (body.contains("scene")) {
        sc = scene_from_json(body["scene"]);
        validate(sc);
      } else {
        const int objects = body.value("objects", 6);
        if (objects < 1 || objects > options.max_scene_objects)
          throw Error(ErrorCode::kInvalidArgument, "objects must be in [1, " + std::to_string(options.max_scene_objects) + "]");
        sc = generate_scene(body.value("seed", std::uint64_t{0}), objects, default_catalog());
      }
      auto entry = std::make_shared<SceneEntry>();
      entry->scene = sc;
      {
        std::lock_guard<std::mutex> lock(mu);
        std::string id = sc.id.empty() ? "scene" : sc.id;
        for (int k = 2; scenes.count(id); ++k) id = sc.id + "-" + std::to_string(k);
        entry->scene.id = id;
        scenes[id] = entry;
      }
      reply(res, 201, {{"id", entry->scene.id}, {"scene", to_json(entry->scene)}});
    });

    server.Get(R"(/scenes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto e = scene(req.matches[1]);
      if (!e) return reply_error(res, 404, "not-found", "unknown scene");
      reply(res, 200, to_json(e->scene));
    });

    server.Get(R"(/scenes/([^/]+)/render)", [this](const httplib::Request& req, httplib::Response& res) {
      auto e = scene(req.matches[1]);
      if (!e) return reply_error(res, 404, "not-found", "unknown scene");
      std::lock_guard<std::mutex> lock(e->mu);
      if (!e->render) e->render = render(e->scene, options.config.camera);
      reply(res, 200, render_json(*e->render));
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      auto sc = scene(body.value("scene_id", std::string()));
      if (!sc) return reply_error(res, 404, "not-found", "unknown scene");
      auto entry = std::make_shared<SessionEntry>();
      entry->session.scene = sc->scene;
      entry->session.config = body.contains("config") ? pipeline_config_from_json(body["config"]) : options.config;
      entry->session.config.validate();
      {
        std::lock_guard<std::mutex> lock(mu);
        entry->session.id = "s-" + std::to_string(next_session++);
        sessions[entry->session.id] = entry;
      }
      reply(res, 201, {{"id", entry->session.id}, {"status", to_string(entry->session.status)}});
    });

    server.Post(R"(/sessions/([^/]+)/gaze)", [this](const httplib::Request& req, httplib::Response& res) {
      auto e = session(req.matches[1]);
      if (!e) return reply_error(res, 404, "not-found", "unknown session");
      const json body = parse_body(req);
      std::unique_lock<std::mutex> lock(e->mu);
      if (e->running) return reply_error(res, 409, "busy", "session is running");
      const PipelineConfig& c = e->session.config;
      std::vector<GazeFrame> batch;
      if (body.contains("frames")) {
        batch = frames_from_json(body["frames"]);
      } else if (body.contains("cursor")) {
        for (const auto& p : body["cursor"]) {
          // Cursor pixels go through the same direction model as camera gaze.
          GazeFrame f = gaze_at_pixel(Vec2(p.at(0).get<double>(), p.at(1).get<double>()), c, 1).front();
          f.timestamp = e->session.gaze.size() * kFramePeriod + batch.size() * kFramePeriod;
          batch.push_back(f);
        }
      } else {
        throw Error(ErrorCode::kInvalidArgument, "gaze body needs 'frames' or 'cursor'");
      }
      if (batch.empty()) throw Error(ErrorCode::kEmptyInput, "empty gaze batch");
      auto& gaze = e->session.gaze;
      gaze.insert(gaze.end(), batch.begin(), batch.end());
      const Vec2 uv = monitor_to_image(track_gaze(gaze, c.monitor, c.head, c.alpha, c.beta), c.monitor);
      const size_t total = gaze.size();
      lock.unlock();
      push(*e, {"heatmap", {{"center", {uv.x(), uv.y()}}, {"sigma_px", c.sigma_px}, {"frames", total}}});
      reply(res, 200, {{"frames", total}, {"gaze_point", {uv.x(), uv.y()}}});
    });

    server.Post(R"(/sessions/([^/]+)/command)", [this](const httplib::Request& req, httplib::Response& res) {
      auto e = session(req.matches[1]);
      if (!e) return reply_error(res, 404, "not-found", "unknown session");
      const json body = parse_body(req);
      const std::string text = body.value("utterance", std::string());
      const ParsedCommand cmd = parse(text);
      std::lock_guard<std::mutex> lock(e->mu);
      if (e->running) return reply_error(res, 409, "busy", "session is running");
      e->session.utterance = text;
      reply(res, 200, to_json(cmd));
    });

    server.Post(R"(/sessions/([^/]+)/run)", [this](const httplib::Request& req, httplib::Response& res) {
      auto e = session(req.matches[1]);
      if (!e) return reply_error(res, 404, "not-found", "unknown session");
      Session input;
      {
        std::lock_guard<std::mutex> lock(e->mu);
        if (e->running) return reply_error(res, 409, "busy", "session is running");
        if (e->session.gaze.empty()) return reply_error(res, 409, "precondition", "no gaze frames yet");
        if (e->session.utterance.empty()) return reply_error(res, 409, "precondition", "no command yet");
        e->running = true;
        input = e->session;
      }
      Session out = run_pipeline(input.scene, input.gaze, input.utterance, input.config,
                                 [&](const PipelineEvent& ev) { push(*e, ev); }, input.id);
      stream_samples(*e, out);
      push(*e, {"done", {{"status", to_string(out.status)}}});
      json body = to_json(out);
      {
        std::lock_guard<std::mutex> lock(e->mu);
        e->session = std::move(out);
        e->running = false;
      }
      reply(res, 200, body);
    });

    server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto e = session(req.matches[1]);
      if (!e) return reply_error(res, 404, "not-found", "unknown session");
      std::lock_guard<std::mutex> lock(e->mu);
      reply(res, 200, to_json(e->session));
    });

    server.Get(R"(/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
      auto e = session(req.matches[1]);
      if (!e) return reply_error(res, 404, "not-found", "unknown session");
      size_t from = req.has_param("from") ? std::stoul(req.get_param_value("from")) : 0;
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream", [e, from](size_t, httplib::DataSink& sink) mutable {
        std::unique_lock<std::mutex> lock(e->mu);
        e->cv.wait_for(lock, std::chrono::milliseconds(250), [&] { return e->events.size() > from; });
        std::string chunk;
        bool finished = false;
        for (; from < e->events.size() && !finished; ++from) {
          const auto& ev = e->events[from];
          chunk += "id: " + std::to_string(from) + "\nevent: " + ev.type + "\ndata: " + ev.data.dump() + "\n\n";
          finished = ev.type == "done";
        }
        lock.unlock();
        if (chunk.empty()) chunk = ": keep-alive\n\n";
        if (!sink.write(chunk.data(), chunk.size())) return false;
        if (finished) sink.done();
        return true;
      });
    });
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  options.config.validate();
  impl_->options = std::move(options);
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void Service::serve() { impl_->server.listen_after_bind(); }

void Service::start() {
  impl_->thread = std::thread([this] { serve(); });
  impl_->server.wait_until_ready();
}

void Service::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace handover
