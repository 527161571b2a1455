#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "handover/pipeline.hpp"

namespace handover {

inline constexpr int kSessionFormatVersion = 1;

/// Full session record. Timings are wall-clock and are left out when
/// `with_timings` is false so that records of equal runs compare equal.
nlohmann::json to_json(const Session& s, bool with_timings = true);
Session session_from_json(const nlohmann::json& j);

nlohmann::json to_json(const HandoverPlan& plan);
HandoverPlan handover_plan_from_json(const nlohmann::json& j);

/// Canonical text of the stage outputs (no timings); equal runs give equal bytes.
std::string stage_record(const Session& s);

void save_session(const Session& s, const std::string& path);
/// Throws kParse with the line number of a syntax error, kVersionMismatch for
/// other format versions.
Session parse_session(const std::string& text);
Session load_session(const std::string& path);

/// Re-executes a recorded session. With an override config the result is
/// marked as derived.
Session replay(const Session& recorded, const std::optional<PipelineConfig>& override_config = std::nullopt);

}  // namespace handover
