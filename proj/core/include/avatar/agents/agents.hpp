#pragma once

#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "avatar/agents/backend.hpp"
#include "avatar/agents/prompts.hpp"
#include "avatar/agents/transcript.hpp"
#include "avatar/schedule.hpp"

namespace avatar::agents {

struct AgentOptions {
  int max_retries = 2;
  int pass_frames = 0;  // required by plan/reflect validation
  PromptSet prompts = PromptSet::defaults();
  TranscriptLog* log = nullptr;
  std::optional<int> active_speaker;  // multi-person: id surfaced to the Planner
};

/// Raised when the backend never produces a valid structured document.
struct StructuredParseError : std::runtime_error {
  std::string last_response;
  int attempts = 0;
  StructuredParseError(const std::string& what, std::string last, int n)
      : std::runtime_error(what), last_response(std::move(last)), attempts(n) {}
};

/// Returns an empty list when the document is acceptable.
using Validator = std::function<std::vector<schedule::Violation>(const nlohmann::json&)>;

struct ParseOutcome {
  nlohmann::json doc;
  int retries = 0;  // 0 means first response was valid
};

/// Sends `request`, validates the parsed JSON response, and re-prompts with
/// the violation list verbatim up to max_retries times.
ParseOutcome parse_structured_with_retry(const AgentRequest& request, const Validator& validator,
                                         ChatBackend& backend, int max_retries,
                                         TranscriptLog* log = nullptr,
                                         const std::string& role = "agent");

struct AnalyzeResult {
  schedule::AnalysisRecord record;
  int retry_count = 0;
};

AnalyzeResult analyze(const std::string& image_ref, const std::string& caption,
                      const std::string& audio_ref, const std::optional<std::string>& user_prompt,
                      ChatBackend& backend, const AgentOptions& opts = {});

struct PlanResult {
  schedule::MotionSchedule schedule;
  int retry_count = 0;
};

PlanResult plan(const schedule::AnalysisRecord& analysis, const std::string& image_ref,
                int n_shots, ChatBackend& backend, const AgentOptions& opts);

struct ReflectResult {
  schedule::MotionSchedule schedule;
  bool reflection_failed = false;  // fell back to the original plan
  int retry_count = 0;
};

/// Re-plans shots after completed_upto; completed shots are never altered.
/// On exhausted retries returns the original schedule with the warning flag.
ReflectResult reflect(const schedule::MotionSchedule& sched, int completed_upto,
                      const std::string& last_frames_ref, const std::string& image_ref,
                      ChatBackend& backend, const AgentOptions& opts);

/// Reasoning-infused per-audio-frame latents from the backend.
Eigen::MatrixXd extract_reasoning_latents(const std::string& audio_ref,
                                          const std::string& analysis_transcript, int frames,
                                          int dim, ChatBackend& backend);

}  // namespace avatar::agents
