#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "handover/pipeline.hpp"

namespace handover {

/// Independent per-trial seed from a base seed (splitmix64).
std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index);

/// Mean pixel of an object's label, the point a user looks at.
Vec2 label_centroid(const RenderOutput& render, const std::string& object_id);

/// Runs fn(i) for i in [0, n) on worker threads; results are stored by index.
void parallel_for(size_t n, const std::function<void(size_t)>& fn, unsigned threads = 0);

struct Fixture {
  std::string name;
  Scene scene;
  std::string utterance;
  std::string target_id;
  std::vector<GazeFrame> gaze;
};

/// Mug with its handle in view, plus distractors; the user keeps the handle.
Fixture mug_fixture(const PipelineConfig& config = {});
/// Red and blue flashlights side by side; the user looks at the red one.
Fixture flashlight_fixture(const PipelineConfig& config = {});

/// Two instances of one template at the given surface gap along the image x
/// axis, centred on the table. Returns false when they do not fit.
bool place_identical_pair(Scene& scene, const ObjectTemplate& tmpl, double gap, double yaw, const std::string& color,
                          const Vec2& centre = Vec2::Zero());

// ---------------------------------------------------------------- selection

enum class Arm { kGaze, kLanguage, kBoth };
std::string to_string(Arm a);
Arm arm_from_string(const std::string& s);

struct SelectionSuiteOptions {
  int trials = 200;
  std::uint64_t seed = 1;
  double noise_deg = 1.0;
  int frames = 30;
  int distractors = 6;
  std::vector<Arm> arms{Arm::kGaze, Arm::kLanguage, Arm::kBoth};
  PipelineConfig config;
};

struct ArmResult {
  Arm arm = Arm::kBoth;
  int trials = 0;
  int correct = 0;
  double accuracy() const { return trials ? static_cast<double>(correct) / trials : 0.0; }
};

struct SelectionReport {
  std::vector<ArmResult> arms;
  GazeEvalReport gaze;  // heatmap-only metrics over the same trials
  int skipped = 0;      // scenes where the target ended up hidden
  const ArmResult* find(Arm a) const;
};

/// Scenes with one identical-object pair; the target is one of the pair.
SelectionReport run_selection_suite(const SelectionSuiteOptions& options);

// ---------------------------------------------------------------- gap

struct GapSuiteOptions {
  int trials = 100;
  std::uint64_t seed = 2;
  double noise_deg = 1.0;
  int frames = 30;
  std::vector<double> ladder{0.01, 0.015, 0.02, 0.025, 0.03, 0.0375, 0.045, 0.05, 0.06};
  std::map<SizeClass, double> thresholds{
      {SizeClass::kLarge, 0.05}, {SizeClass::kMedium, 0.045}, {SizeClass::kSmall, 0.0375}};
  double required_rate = 0.9;
  PipelineConfig config;
};

struct GapPoint {
  SizeClass size = SizeClass::kLarge;
  double gap = 0.0;
  int trials = 0;
  int correct = 0;
  double rate() const { return trials ? static_cast<double>(correct) / trials : 0.0; }
};

struct GapReport {
  std::vector<GapPoint> ladder;
  std::vector<GapPoint> at_threshold;
  std::map<SizeClass, std::optional<double>> min_working_gap;  // smallest ladder gap from which every larger gap passes
  bool monotone = false;  // min working gap ordered by size class, in either direction
};

GapReport run_gap_suite(const GapSuiteOptions& options);

// ---------------------------------------------------------------- grasp

struct GraspSuiteOptions {
  int scenes = 50;
  int objects_per_scene = 2;
  int scene_objects = 8;
  std::uint64_t seed = 3;
  PipelineConfig config;
};

struct GraspTrial {
  size_t scene = 0;  // index into GraspReport::scenes
  std::string object_id;
  std::string object_name;
  std::optional<std::string> part;
  Holder holder = Holder::kNone;
  std::string utterance;
  bool planned = false;
  std::string failure;  // error code when not planned
  std::string chosen_id;
  std::array<Vec3, 2> contacts{Vec3::Zero(), Vec3::Zero()};
  std::optional<PixelRegion> region;
  bool permitted = false;     // both contacts pass the planner's own region test
  bool on_standard = false;   // a contact lies on the standard grasp part
  double stability = 0.0;
};

struct GraspReport {
  std::vector<GraspTrial> specified;    // part and holder given
  std::vector<GraspTrial> unspecified;  // no preference, objects with a standard part
  std::vector<Scene> scenes;
  int specified_planned() const;
  int specified_permitted() const;
  int unspecified_planned() const;
  int unspecified_avoiding() const;
};

GraspReport run_grasp_suite(const GraspSuiteOptions& options);

struct CatalogRow {
  std::string name;
  std::uint64_t seed = 0;
  bool unconstrained_ok = false;
  bool constrained_ok = false;
  std::string constrained_part;
  double unconstrained_stability = 0.0;
  double constrained_stability = 0.0;
};

struct CatalogReport {
  std::vector<CatalogRow> rows;
  double unconstrained_rate() const;
  double constrained_rate() const;  // over objects with parts
};

/// Each catalog object alone on the table, `seeds` yaws each.
CatalogReport run_catalog_suite(int seeds, std::uint64_t seed, const PipelineConfig& config);

// ---------------------------------------------------------------- motion

struct MotionSuiteOptions {
  int targets = 50;
  std::uint64_t seed = 4;
  RMPParams params;
  double energy_k = 50.0;  // allowed rise per step is energy_k * dt^2
};

struct MotionTrial {
  Pose target = Pose::Identity();
  bool converged = false;
  int steps = 0;
  double final_pos_error = 0.0;
  double max_energy_rise = 0.0;  // largest E[k+1] - E[k]
  bool within_limits = true;
  bool velocity_ok = true;
  int max_sign_changes = 0;
};

struct MotionReport {
  std::vector<MotionTrial> trials;
  double energy_tolerance = 0.0;
  int converged() const;
  bool energy_ok() const;
  bool limits_ok() const;
};

/// Random tool poses above the table, tilted at most 45 degrees from straight
/// down, filtered by the workspace check.
std::vector<Pose> random_targets(int count, std::uint64_t seed);
MotionReport run_motion_suite(const MotionSuiteOptions& options);

// ---------------------------------------------------------------- timing

struct StageStats {
  Stage stage = Stage::kRender;
  int samples = 0;
  double mean = 0.0, median = 0.0, max = 0.0;
};

struct TimingReport {
  std::vector<StageStats> stages;
  int runs = 0;
  int executed = 0;
  Stage dominant = Stage::kRender;
};

/// Full pipeline runs with no part preference, so hand prediction is active.
TimingReport run_timing_suite(int runs, std::uint64_t seed, const PipelineConfig& config);

// ---------------------------------------------------------------- output

nlohmann::json to_json(const SelectionReport& r);
nlohmann::json to_json(const GapReport& r);
nlohmann::json to_json(const GraspReport& r);
nlohmann::json to_json(const CatalogReport& r);
nlohmann::json to_json(const MotionReport& r);
nlohmann::json to_json(const TimingReport& r);

std::string format_table(const SelectionReport& r);
std::string format_table(const GapReport& r);
std::string format_table(const GraspReport& r);
std::string format_table(const CatalogReport& r);
std::string format_table(const MotionReport& r);
std::string format_table(const TimingReport& r);

}  // namespace handover
