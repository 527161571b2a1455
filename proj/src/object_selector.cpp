#include "handover/object_selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "handover/error.hpp"

namespace handover {

namespace {

// Number of trailing tokens of `phrase` matching `name`, 0 if it does not end the phrase.
size_t suffix_match(const std::vector<std::string>& phrase, const std::string& name) {
  const auto n = tokenize(name);
  if (n.empty() || n.size() > phrase.size()) return 0;
  return std::equal(n.rbegin(), n.rend(), phrase.rbegin()) ? n.size() : 0;
}

}  // namespace

std::vector<Candidate> detect_candidates(const std::string& object_phrase, const RenderOutput& render,
                                         const Scene& scene, const DetectorNoise& noise, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-noise.confidence_jitter, noise.confidence_jitter);
  const auto phrase = tokenize(object_phrase);

  std::set<std::string> vocabulary;
  for (const auto& o : scene.objects) vocabulary.insert(o.attributes.begin(), o.attributes.end());

  struct Hit {
    const SceneObject* object;
    std::vector<std::string> adjectives;
  };
  std::vector<Hit> hits;
  std::vector<const SceneObject*> others;
  for (const auto& o : scene.objects) {
    // Draws happen for every object so results do not depend on visibility order.
    const double miss_draw = u01(rng);
    if (!render.boxes.count(o.id)) continue;
    size_t best = suffix_match(phrase, o.name);
    bool via_synonym = false;
    for (const auto& s : o.synonyms) {
      const size_t m = suffix_match(phrase, s);
      if (m > best) {
        best = m;
        via_synonym = true;
      }
    }
    if (best == 0) {
      others.push_back(&o);
      continue;
    }
    if (via_synonym && miss_draw < noise.synonym_miss_rate) continue;
    hits.push_back({&o, std::vector<std::string>(phrase.begin(), phrase.end() - static_cast<long>(best))});
  }

  if (noise.match_adjectives) {
    std::vector<Hit> kept;
    for (const auto& h : hits) {
      bool ok = true;
      for (const auto& a : h.adjectives)
        if (vocabulary.count(a) && std::find(h.object->attributes.begin(), h.object->attributes.end(), a) ==
                                       h.object->attributes.end())
          ok = false;
      if (ok) kept.push_back(h);
    }
    if (!kept.empty()) hits = std::move(kept);
  }

  std::vector<Candidate> out;
  for (const auto& h : hits) {
    const double c = std::clamp(noise.confidence + jitter(rng), 0.0, 1.0);
    out.push_back({h.object->id, render.boxes.at(h.object->id), c, false});
  }
  if (!others.empty() && u01(rng) < noise.spurious_rate) {
    const auto* o = others[std::uniform_int_distribution<size_t>(0, others.size() - 1)(rng)];
    const double c = std::clamp(noise.spurious_confidence + jitter(rng), 0.0, 1.0);
    out.push_back({o->id, render.boxes.at(o->id), c, true});
  }
  return out;
}

double box_mass(const Heatmap& h, const PixelBox& box) {
  const PixelBox b = box.intersect({0, 0, h.width - 1, h.height - 1});
  double s = 0.0;
  for (int v = b.v0; v <= b.v1; ++v)
    for (int u = b.u0; u <= b.u1; ++u) s += h.at(u, v);
  return s;
}

std::vector<ScoredCandidate> score_candidates(const Heatmap& heatmap, const std::vector<Candidate>& candidates) {
  std::vector<ScoredCandidate> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back({c, box_mass(heatmap, c.box)});
  return out;
}

const ScoredCandidate& select_object(const std::vector<ScoredCandidate>& scored) {
  if (scored.empty()) throw Error(ErrorCode::kNoCandidate, "no candidate matches the requested object");
  const ScoredCandidate* best = &scored.front();
  for (const auto& s : scored) {
    if (s.score != best->score) {
      if (s.score > best->score) best = &s;
      continue;
    }
    if (s.candidate.confidence != best->candidate.confidence) {
      if (s.candidate.confidence > best->candidate.confidence) best = &s;
      continue;
    }
    if (s.candidate.object_id < best->candidate.object_id) best = &s;
  }
  return *best;
}

PixelRegion resolve_part(const Candidate& chosen, const std::optional<std::string>& part, Holder holder,
                         const RenderOutput& render, const Scene& scene) {
  PixelRegion region{chosen.box, std::nullopt};
  if (!part || holder == Holder::kNone) return region;
  const SceneObject& object = scene.at(chosen.object_id);
  if (!object.find_part(*part))
    throw Error(ErrorCode::kPartNotFound, "object '" + object.name + "' has no part '" + *part + "'");

  // Part box: the mask of that part name overlapping the chosen box most.
  std::optional<PixelBox> part_box;
  long best = 0;
  for (const auto& [key, mask] : render.part_masks) {
    if (key.second != *part) continue;
    const long overlap = chosen.box.intersect(mask.box).area();
    if (overlap > best) {
      best = overlap;
      part_box = mask.box;
    }
  }
  if (!part_box) {
    if (holder == Holder::kHuman) return region;  // nothing visible to leave clear
    throw Error(ErrorCode::kPartNotFound, "part '" + *part + "' of '" + object.name + "' is not visible");
  }
  const PixelBox inter = chosen.box.intersect(*part_box);
  if (holder == Holder::kRobot) return PixelRegion{inter, std::nullopt};
  return PixelRegion{chosen.box, inter};
}

SelectionResult select_target(const ParsedCommand& command, const Heatmap& heatmap, const RenderOutput& render,
                              const Scene& scene, const DetectorNoise& noise, std::uint64_t seed) {
  SelectionResult r;
  r.scores = score_candidates(heatmap, detect_candidates(command.object_phrase, render, scene, noise, seed));
  r.chosen = select_object(r.scores).candidate;
  r.part_region = resolve_part(r.chosen, command.part, command.holder, render, scene);
  return r;
}

GazeEvalReport evaluate_gaze(const std::vector<GazeEvalSample>& samples, double threshold) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "evaluate_gaze needs at least one sample");
  GazeEvalReport rep;
  rep.samples = samples.size();
  size_t successes = 0;
  double iou_sum = 0.0, sq_sum = 0.0;
  for (const auto& s : samples) {
    size_t pred = 0;
    double best = -1.0;
    for (size_t i = 0; i < s.boxes.size(); ++i) {
      const double m = box_mass(s.heatmap, s.boxes[i]);
      if (m > best) {
        best = m;
        pred = i;
      }
    }
    const Heatmap& h = s.heatmap;
    const double peak = h.peak();
    const double cut = threshold * peak;
    const PixelBox& pb = s.boxes[pred];
    double inside = 0.0;
    long uni = 0;
    for (int v = 0; v < h.height; ++v)
      for (int u = 0; u < h.width; ++u) {
        const double d = h.at(u, v);
        const bool in_support = d >= cut;
        const bool in_box = pb.contains(u, v);
        if (in_support || in_box) ++uni;
        if (in_support && in_box) inside += d / peak;
      }
    iou_sum += uni > 0 ? inside / static_cast<double>(uni) : 0.0;
    if (pred == s.truth) {
      ++successes;
      continue;
    }
    const PixelBox& t = s.boxes[s.truth];
    const double cu = h.center.x(), cv = h.center.y();
    const double dx = std::max({t.u0 - cu, 0.0, cu - t.u1});
    const double dy = std::max({t.v0 - cv, 0.0, cv - t.v1});
    double d2 = dx * dx + dy * dy;
    if (d2 == 0.0) {
      // Centre inside the true box: distance to its nearest edge.
      const double e = std::min({cu - t.u0, t.u1 - cu, cv - t.v0, t.v1 - cv});
      d2 = e * e;
    }
    sq_sum += d2;
  }
  rep.success_rate = static_cast<double>(successes) / samples.size();
  rep.eval_iou = iou_sum / samples.size();
  const size_t failures = samples.size() - successes;
  rep.mse_px = failures ? sq_sum / failures : 0.0;
  return rep;
}

nlohmann::json to_json(const PixelBox& b) { return {b.u0, b.v0, b.u1, b.v1}; }

PixelBox pixel_box_from_json(const nlohmann::json& j) { return {j.at(0), j.at(1), j.at(2), j.at(3)}; }

nlohmann::json to_json(const SelectionResult& s) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& sc : s.scores)
    scores.push_back({{"object_id", sc.candidate.object_id},
                      {"box", to_json(sc.candidate.box)},
                      {"confidence", sc.candidate.confidence},
                      {"spurious", sc.candidate.spurious},
                      {"score", sc.score}});
  nlohmann::json j{{"chosen", {{"object_id", s.chosen.object_id},
                               {"box", to_json(s.chosen.box)},
                               {"confidence", s.chosen.confidence},
                               {"spurious", s.chosen.spurious}}},
                   {"scores", scores}};
  if (s.part_region) {
    j["part_region"] = {{"outer", to_json(s.part_region->outer)}};
    if (s.part_region->hole) j["part_region"]["hole"] = to_json(*s.part_region->hole);
  }
  return j;
}

SelectionResult selection_from_json(const nlohmann::json& j) {
  auto cand = [](const nlohmann::json& c) {
    return Candidate{c.at("object_id"), pixel_box_from_json(c.at("box")), c.at("confidence"), c.value("spurious", false)};
  };
  SelectionResult s;
  s.chosen = cand(j.at("chosen"));
  for (const auto& sc : j.at("scores")) s.scores.push_back({cand(sc), sc.at("score")});
  if (j.contains("part_region")) {
    PixelRegion r{pixel_box_from_json(j["part_region"].at("outer")), std::nullopt};
    if (j["part_region"].contains("hole")) r.hole = pixel_box_from_json(j["part_region"]["hole"]);
    s.part_region = r;
  }
  return s;
}

}  // namespace handover
