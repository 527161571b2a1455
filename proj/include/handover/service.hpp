#pragma once

#include <memory>
#include <string>

#include "handover/pipeline.hpp"

namespace handover {

struct ServiceOptions {
  PipelineConfig config;           // default for sessions that do not send their own
  double sample_cadence_s = 0.05;  // trajectory time between streamed samples
  int max_scene_objects = 15;
};

/// HTTP API over the pipeline plus one server-sent event stream per session.
///
///   POST /scenes                     {"seed", "objects"} or {"scene": {...}}
///   GET  /scenes/{id}                scene record
///   GET  /scenes/{id}/render         boxes, base64 uint8 labels, base64 float32 depth
///   POST /sessions                   {"scene_id", "config"?}
///   POST /sessions/{id}/gaze         {"frames": [[t,hx,hy,hz,ex,ey,ez],...]} or {"cursor": [[u,v],...]}
///   POST /sessions/{id}/command      {"utterance"}
///   POST /sessions/{id}/run
///   GET  /sessions/{id}              full session record
///   GET  /sessions/{id}/events       text/event-stream, ?from=<event index>
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Returns the port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires bind().
  void serve();
  /// serve() on a background thread; returns once the server accepts requests.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace handover
