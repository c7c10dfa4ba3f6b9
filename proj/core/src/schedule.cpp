#include "avatar/schedule.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

namespace avatar::schedule {

using nlohmann::json;

int MotionSchedule::total_frames() const {
  int total = 0;
  for (const auto& s : shots) total += s.duration_frames;
  return total;
}

std::string to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::kBadSchemaVersion: return "BAD_SCHEMA_VERSION";
    case ViolationCode::kMissingField: return "MISSING_FIELD";
    case ViolationCode::kEmptyField: return "EMPTY_FIELD";
    case ViolationCode::kWrongShotCount: return "WRONG_SHOT_COUNT";
    case ViolationCode::kNonContiguousIndex: return "NON_CONTIGUOUS_INDEX";
    case ViolationCode::kBadDuration: return "BAD_DURATION";
    case ViolationCode::kMalformedDocument: return "MALFORMED_DOCUMENT";
    case ViolationCode::kPastShotMutation: return "PAST_SHOT_MUTATION";
  }
  return "UNKNOWN";
}

int shots_for_duration(int audio_frames, int pass_frames) {
  if (audio_frames <= 0) throw std::invalid_argument("shots_for_duration: audio_frames must be > 0");
  if (pass_frames <= 0) throw std::invalid_argument("shots_for_duration: pass_frames must be > 0");
  return (audio_frames + pass_frames - 1) / pass_frames;
}

namespace {

// Fetches a non-empty string field, recording a violation otherwise.
std::string require_text(const json& obj, const char* key, const std::string& where,
                         std::vector<Violation>& out) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    out.push_back({ViolationCode::kMissingField, where + ": missing or non-string field '" + key + "'"});
    return {};
  }
  auto text = it->get<std::string>();
  if (text.empty()) {
    out.push_back({ViolationCode::kEmptyField, where + ": field '" + key + "' is empty"});
  }
  return text;
}

std::optional<int> require_int(const json& obj, const char* key, const std::string& where,
                               std::vector<Violation>& out) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer()) {
    out.push_back({ViolationCode::kMissingField, where + ": missing or non-integer field '" + key + "'"});
    return std::nullopt;
  }
  return it->get<int>();
}

}  // namespace

AnalysisValidationResult validate_analysis(const json& doc) {
  AnalysisValidationResult res;
  if (!doc.is_object()) {
    res.violations.push_back({ViolationCode::kMalformedDocument, "analysis: document is not a JSON object"});
    return res;
  }
  auto ver = doc.find("schema_version");
  if (ver == doc.end() || !ver->is_number_integer() || ver->get<int>() != kSchemaVersion) {
    res.violations.push_back({ViolationCode::kBadSchemaVersion,
                              "analysis: schema_version must be " + std::to_string(kSchemaVersion)});
  }
  AnalysisRecord rec;
  rec.persona = require_text(doc, "persona", "analysis", res.violations);
  rec.language_style = require_text(doc, "language_style", "analysis", res.violations);
  rec.speech_content = require_text(doc, "speech_content", "analysis", res.violations);
  rec.emotion = require_text(doc, "emotion", "analysis", res.violations);
  rec.intent = require_text(doc, "intent", "analysis", res.violations);
  rec.environment = require_text(doc, "environment", "analysis", res.violations);
  if (res.violations.empty()) res.record = std::move(rec);
  return res;
}

ValidationResult validate_schedule(const json& doc, const ScheduleConfig& cfg) {
  ValidationResult res;
  if (!doc.is_object()) {
    res.violations.push_back({ViolationCode::kMalformedDocument, "schedule: document is not a JSON object"});
    return res;
  }
  auto ver = doc.find("schema_version");
  if (ver == doc.end() || !ver->is_number_integer() || ver->get<int>() != kSchemaVersion) {
    res.violations.push_back({ViolationCode::kBadSchemaVersion,
                              "schedule: schema_version must be " + std::to_string(kSchemaVersion)});
  }
  auto shots_it = doc.find("shots");
  if (shots_it == doc.end() || !shots_it->is_array()) {
    res.violations.push_back({ViolationCode::kMissingField, "schedule: missing 'shots' array"});
    return res;
  }
  const auto& shots_doc = *shots_it;
  if (cfg.expected_shots > 0 && static_cast<int>(shots_doc.size()) != cfg.expected_shots) {
    res.violations.push_back({ViolationCode::kWrongShotCount,
                              "schedule: expected " + std::to_string(cfg.expected_shots) + " shots, got " +
                                  std::to_string(shots_doc.size())});
  }

  MotionSchedule sched;
  int pos = 0;
  for (const auto& shot_doc : shots_doc) {
    const std::string where = "shots[" + std::to_string(pos) + "]";
    if (!shot_doc.is_object()) {
      res.violations.push_back({ViolationCode::kMalformedDocument, where + ": not a JSON object"});
      ++pos;
      continue;
    }
    Shot shot;
    if (auto idx = require_int(shot_doc, "index", where, res.violations)) {
      shot.index = *idx;
      if (*idx != pos) {
        res.violations.push_back({ViolationCode::kNonContiguousIndex,
                                  where + ": index " + std::to_string(*idx) + ", expected " +
                                      std::to_string(pos)});
      }
    }
    shot.expression = require_text(shot_doc, "expression", where, res.violations);
    shot.action = require_text(shot_doc, "action", where, res.violations);
    if (auto dur = require_int(shot_doc, "duration_frames", where, res.violations)) {
      shot.duration_frames = *dur;
      if (cfg.pass_frames > 0 && *dur != cfg.pass_frames) {
        res.violations.push_back({ViolationCode::kBadDuration,
                                  where + ": duration_frames " + std::to_string(*dur) + ", expected " +
                                      std::to_string(cfg.pass_frames)});
      }
    }
    sched.shots.push_back(std::move(shot));
    ++pos;
  }

  if (auto src = doc.find("source_analysis"); src != doc.end()) {
    auto analysis = validate_analysis(*src);
    if (analysis.ok()) {
      sched.source_analysis = *analysis.record;
    } else {
      for (auto& v : analysis.violations) res.violations.push_back(std::move(v));
    }
  }

  if (res.violations.empty()) res.schedule = std::move(sched);
  return res;
}

json to_json(const AnalysisRecord& rec) {
  return json{{"schema_version", kSchemaVersion},
              {"persona", rec.persona},
              {"language_style", rec.language_style},
              {"speech_content", rec.speech_content},
              {"emotion", rec.emotion},
              {"intent", rec.intent},
              {"environment", rec.environment}};
}

json to_json(const Shot& shot) {
  return json{{"index", shot.index},
              {"expression", shot.expression},
              {"action", shot.action},
              {"duration_frames", shot.duration_frames}};
}

json to_json(const MotionSchedule& sched) {
  json shots = json::array();
  for (const auto& s : sched.shots) shots.push_back(to_json(s));
  return json{{"schema_version", kSchemaVersion},
              {"shots", std::move(shots)},
              {"source_analysis", to_json(sched.source_analysis)}};
}

MotionSchedule schedule_from_json(const json& doc) {
  auto res = validate_schedule(doc, ScheduleConfig{});
  if (!res.ok()) {
    std::string msg = "schedule_from_json: invalid document:";
    for (const auto& v : res.violations) msg += " [" + to_string(v.code) + "] " + v.message + ";";
    throw std::invalid_argument(msg);
  }
  return *res.schedule;
}

}  // namespace avatar::schedule
