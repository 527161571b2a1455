// Command-line front end: scene generation, single runs, replay, evaluation
// suites and the HTTP service.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "handover/error.hpp"
#include "handover/evaluation.hpp"
#include "handover/service.hpp"
#include "handover/session_io.hpp"

using namespace handover;

namespace {

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool json = false;
};

PipelineConfig load_config(const Globals& g) {
  return g.config_path.empty() ? PipelineConfig{} : load_pipeline_config(g.config_path);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
}

template <typename Report>
void emit(const Globals& g, const Report& r) {
  if (g.json)
    std::cout << to_json(r).dump(2) << '\n';
  else
    std::cout << format_table(r);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

Service* g_service = nullptr;
void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal robot-to-human handover simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Pipeline config JSON (missing keys keep defaults)")->check(CLI::ExistingFile);
  app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { g.seed = s; g.seed_set = true; }, "Base seed");
  app.add_flag("--json", g.json, "Machine-readable output");

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "Generate a random tabletop scene");
  int gen_objects = 6;
  std::string gen_out, gen_depth;
  gen->add_option("--objects", gen_objects, "Object count")->check(CLI::Range(1, 40));
  gen->add_option("-o,--out", gen_out, "Scene file (default stdout)");
  gen->add_option("--depth", gen_depth, "Also write the rendered depth image");
  gen->callback([&] {
    const Scene s = generate_scene(g.seed, gen_objects, default_catalog());
    write_text(gen_out, to_json(s).dump(1) + "\n");
    if (!gen_depth.empty()) write_depth(gen_depth, render(s, load_config(g).camera));
  });

  // parse
  auto* parse_cmd = app.add_subcommand("parse", "Parse an utterance into object, part and holder");
  std::string sentence;
  parse_cmd->add_option("--sentence,sentence", sentence, "Utterance")->required();
  parse_cmd->callback([&] {
    const ParsedCommand c = parse(sentence);
    if (g.json) {
      std::cout << to_json(c).dump(2) << '\n';
    } else {
      std::cout << "object: " << c.object_phrase << "\npart:   " << c.part.value_or("-")
                << "\nholder: " << to_string(c.holder) << '\n';
    }
  });

  // simulate-gaze
  auto* sim = app.add_subcommand("simulate-gaze", "Write a gaze log looking at an object or pixel");
  std::string sim_scene, sim_object, sim_out;
  std::vector<double> sim_pixel;
  int sim_frames = 30;
  double sim_noise = 0.0;
  sim->add_option("--scene", sim_scene, "Scene file (with --object)");
  sim->add_option("--object", sim_object, "Object id to look at");
  sim->add_option("--pixel", sim_pixel, "Image pixel u v")->expected(2);
  sim->add_option("--frames", sim_frames)->check(CLI::PositiveNumber);
  sim->add_option("--noise-deg", sim_noise)->check(CLI::NonNegativeNumber);
  sim->add_option("-o,--out", sim_out, "Gaze log (default stdout)");
  sim->callback([&] {
    const PipelineConfig c = load_config(g);
    Vec2 uv;
    if (sim_pixel.size() == 2) {
      uv = Vec2(sim_pixel[0], sim_pixel[1]);
    } else if (!sim_scene.empty() && !sim_object.empty()) {
      uv = label_centroid(render(load_scene(sim_scene), c.camera), sim_object);
    } else {
      throw CLI::ValidationError("simulate-gaze", "needs --pixel or --scene with --object");
    }
    write_text(sim_out, format_gaze_log(gaze_at_pixel(uv, c, sim_frames, sim_noise, g.seed)));
  });

  // run
  auto* run = app.add_subcommand("run", "Run the full pipeline once");
  std::string run_scene, run_gaze, run_say, run_out;
  run->add_option("--scene", run_scene, "Scene file")->required()->check(CLI::ExistingFile);
  run->add_option("--gaze-log", run_gaze, "Gaze log")->required()->check(CLI::ExistingFile);
  run->add_option("--say", run_say, "Utterance")->required();
  run->add_option("-o,--out", run_out, "Session file");
  run->callback([&] {
    PipelineConfig c = load_config(g);
    if (g.seed_set) c.grasp.seed = c.detector_seed = g.seed;
    const Session s = run_pipeline(load_scene(run_scene), load_gaze_log(run_gaze), run_say, c);
    if (!run_out.empty()) save_session(s, run_out);
    if (g.json) {
      std::cout << to_json(s).dump(1) << '\n';
    } else {
      std::cout << "status: " << to_string(s.status) << '\n';
      if (s.selection) std::cout << "selected: " << s.selection->chosen.object_id << '\n';
      if (s.grasp) std::cout << "grasp stability: " << s.grasp->best.stability << '\n';
      if (s.executed_rank) std::cout << "executed grasp rank: " << *s.executed_rank << '\n';
      if (s.failure) std::cout << "failed at " << to_string(s.failure->stage) << ": " << s.failure->reason << '\n';
      for (const auto& [stage, secs] : s.timings) std::printf("  %-7s %.4f s\n", to_string(stage).c_str(), secs);
    }
    if (s.status == SessionStatus::kFailed) throw CLI::RuntimeError(2);
  });

  // replay
  auto* rep = app.add_subcommand("replay", "Re-execute a recorded session");
  std::string rep_in, rep_out;
  rep->add_option("session", rep_in, "Session file")->required()->check(CLI::ExistingFile);
  rep->add_option("-o,--out", rep_out, "Write the replayed session");
  rep->callback([&] {
    const Session recorded = load_session(rep_in);
    std::optional<PipelineConfig> override_cfg;
    if (!g.config_path.empty()) override_cfg = load_pipeline_config(g.config_path);
    const Session s = replay(recorded, override_cfg);
    if (!rep_out.empty()) save_session(s, rep_out);
    const bool same = stage_record(s) == stage_record(recorded);
    std::cout << "status: " << to_string(s.status) << (s.derived ? " (derived)" : "") << '\n';
    if (!s.derived) {
      std::cout << "stage outputs " << (same ? "identical" : "DIFFER") << '\n';
      if (!same) throw CLI::RuntimeError(3);
    }
  });

  // evaluation suites
  auto* es = app.add_subcommand("eval-selection", "Gaze / language / fused selection accuracy");
  SelectionSuiteOptions so;
  std::string arms = "gaze,language,both";
  es->add_option("--trials,--scenes", so.trials)->check(CLI::PositiveNumber);
  es->add_option("--noise-deg", so.noise_deg)->check(CLI::NonNegativeNumber);
  es->add_option("--distractors", so.distractors)->check(CLI::NonNegativeNumber);
  es->add_option("--arms", arms, "Comma-separated subset of gaze,language,both");
  es->callback([&] {
    so.config = load_config(g);
    if (g.seed_set) so.seed = g.seed;
    so.arms.clear();
    for (const auto& a : split(arms, ',')) so.arms.push_back(arm_from_string(a));
    emit(g, run_selection_suite(so));
  });

  auto* eg = app.add_subcommand("eval-gap", "Identical-pair selection against surface gap");
  GapSuiteOptions go;
  eg->add_option("--trials", go.trials)->check(CLI::PositiveNumber);
  eg->add_option("--noise-deg", go.noise_deg)->check(CLI::NonNegativeNumber);
  eg->callback([&] {
    go.config = load_config(g);
    if (g.seed_set) go.seed = g.seed;
    emit(g, run_gap_suite(go));
  });

  auto* egr = app.add_subcommand("eval-grasp", "Grasp region constraints; --catalog for the per-object grid");
  GraspSuiteOptions gro;
  int catalog_seeds = 0;
  egr->add_option("--scenes", gro.scenes)->check(CLI::PositiveNumber);
  egr->add_option("--catalog", catalog_seeds, "Run each catalog object alone with this many yaws instead");
  egr->callback([&] {
    gro.config = load_config(g);
    if (g.seed_set) gro.seed = g.seed;
    if (catalog_seeds > 0)
      emit(g, run_catalog_suite(catalog_seeds, gro.seed, gro.config));
    else
      emit(g, run_grasp_suite(gro));
  });

  auto* em = app.add_subcommand("eval-motion", "Reaching random targets from the home pose");
  MotionSuiteOptions mo;
  em->add_option("--targets", mo.targets)->check(CLI::PositiveNumber);
  em->callback([&] {
    mo.params = load_config(g).rmp;
    if (g.seed_set) mo.seed = g.seed;
    emit(g, run_motion_suite(mo));
  });

  auto* et = app.add_subcommand("eval-timing", "Per-stage wall-clock breakdown");
  int runs = 20;
  et->add_option("--runs", runs)->check(CLI::PositiveNumber);
  et->callback([&] { emit(g, run_timing_suite(runs, g.seed_set ? g.seed : 5, load_config(g))); });

  // serve
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->callback([&] {
    ServiceOptions opt;
    opt.config = load_config(g);
    Service service(opt);
    const int bound = service.bind(host, port);
    std::cout << "listening on http://" << host << ":" << bound << std::endl;
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.serve();
    g_service = nullptr;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
