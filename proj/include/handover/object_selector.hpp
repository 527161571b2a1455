#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "handover/camera.hpp"
#include "handover/command_parser.hpp"
#include "handover/gaze.hpp"
#include "handover/scene.hpp"

namespace handover {

struct Candidate {
  std::string object_id;
  PixelBox box;
  double confidence = 0.0;
  bool spurious = false;  // injected false positive
};

/// Knobs of the synthetic detector.
struct DetectorNoise {
  double synonym_miss_rate = 0.1;  // chance a synonym-only match is missed
  double confidence = 0.8;
  double confidence_jitter = 0.15;  // uniform +-
  double spurious_rate = 0.05;      // chance of one extra box on a non-matching object
  double spurious_confidence = 0.5;
  bool match_adjectives = true;
};

struct ScoredCandidate {
  Candidate candidate;
  double score = 0.0;
};

struct SelectionResult {
  Candidate chosen;
  std::optional<PixelRegion> part_region;
  std::vector<ScoredCandidate> scores;
};

struct GazeEvalSample {
  Heatmap heatmap;
  std::vector<PixelBox> boxes;
  size_t truth = 0;
};

struct GazeEvalReport {
  double success_rate = 0.0;
  double eval_iou = 0.0;
  double mse_px = 0.0;
  size_t samples = 0;
};

/// Ground-truth detector: visible objects whose name or synonym ends the
/// phrase, filtered by colour adjectives, with seeded confidence noise.
std::vector<Candidate> detect_candidates(const std::string& object_phrase, const RenderOutput& render,
                                         const Scene& scene, const DetectorNoise& noise, std::uint64_t seed);

/// Heatmap mass inside a box (clipped to the grid).
double box_mass(const Heatmap& heatmap, const PixelBox& box);

std::vector<ScoredCandidate> score_candidates(const Heatmap& heatmap, const std::vector<Candidate>& candidates);

/// Highest score, then higher confidence, then smaller object id.
const ScoredCandidate& select_object(const std::vector<ScoredCandidate>& scored);

/// Pixel region the grasp may use. Robot holder: box and part box
/// intersection. Human holder: box minus that intersection. No holder: box.
PixelRegion resolve_part(const Candidate& chosen, const std::optional<std::string>& part, Holder holder,
                         const RenderOutput& render, const Scene& scene);

/// Detection, scoring, selection and part resolution in one call.
SelectionResult select_target(const ParsedCommand& command, const Heatmap& heatmap, const RenderOutput& render,
                              const Scene& scene, const DetectorNoise& noise, std::uint64_t seed);

/// Success rate, thresholded overlap and squared miss distance (failures only).
GazeEvalReport evaluate_gaze(const std::vector<GazeEvalSample>& samples, double threshold = 0.01);

nlohmann::json to_json(const PixelBox& b);
PixelBox pixel_box_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SelectionResult& s);
SelectionResult selection_from_json(const nlohmann::json& j);

}  // namespace handover
