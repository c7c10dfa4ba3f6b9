#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace avatar::schedule {

inline constexpr int kSchemaVersion = 1;

/// Structured output of the Analyzer agent.
struct AnalysisRecord {
  std::string persona;
  std::string language_style;
  std::string speech_content;
  std::string emotion;
  std::string intent;
  std::string environment;

  bool operator==(const AnalysisRecord&) const = default;
};

/// One unit of the Planner's schedule; spans exactly one generation pass.
struct Shot {
  int index = 0;
  std::string expression;
  std::string action;
  int duration_frames = 0;

  bool operator==(const Shot&) const = default;
};

struct MotionSchedule {
  std::vector<Shot> shots;
  AnalysisRecord source_analysis;

  int total_frames() const;

  bool operator==(const MotionSchedule&) const = default;
};

/// Machine-readable validation failure codes.
enum class ViolationCode {
  kBadSchemaVersion,
  kMissingField,
  kEmptyField,
  kWrongShotCount,
  kNonContiguousIndex,
  kBadDuration,
  kMalformedDocument,
  kPastShotMutation,
};

std::string to_string(ViolationCode code);

struct Violation {
  ViolationCode code;
  std::string message;
};

struct ScheduleConfig {
  int pass_frames = 0;
  int expected_shots = 0;
};

/// Either a valid schedule or a non-empty list of violations; never both.
struct ValidationResult {
  std::optional<MotionSchedule> schedule;
  std::vector<Violation> violations;

  bool ok() const { return schedule.has_value(); }
};

/// Number of generation passes needed to cover `audio_frames` of audio.
/// Throws std::invalid_argument on non-positive inputs.
int shots_for_duration(int audio_frames, int pass_frames);

/// Validates a parsed schedule document against the type invariants.
/// Total over all inputs: returns violations, never throws on bad content.
ValidationResult validate_schedule(const nlohmann::json& doc, const ScheduleConfig& cfg);

/// Validates an analysis document (all six fields present and non-empty).
struct AnalysisValidationResult {
  std::optional<AnalysisRecord> record;
  std::vector<Violation> violations;

  bool ok() const { return record.has_value(); }
};
AnalysisValidationResult validate_analysis(const nlohmann::json& doc);

nlohmann::json to_json(const AnalysisRecord& rec);
nlohmann::json to_json(const Shot& shot);
nlohmann::json to_json(const MotionSchedule& sched);

MotionSchedule schedule_from_json(const nlohmann::json& doc);

}  // namespace avatar::schedule
