#include "avatar/agents/agents.hpp"

#include <sstream>

namespace avatar::agents {

using nlohmann::json;
using schedule::Violation;
using schedule::ViolationCode;

namespace {

// Backends wrap JSON in prose often enough that we parse leniently: the
// whole response first, then the outermost brace-delimited span.
std::optional<json> try_parse_json(const std::string& text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (!doc.is_discarded()) return doc;
  const std::size_t open = text.find('{');
  const std::size_t close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close <= open)
    return std::nullopt;
  doc = json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (doc.is_discarded()) return std::nullopt;
  return doc;
}

std::string format_violations(const std::vector<Violation>& violations) {
  std::ostringstream ss;
  for (const auto& v : violations)
    ss << "- " << schedule::to_string(v.code) << ": " << v.message << '\n';
  return ss.str();
}

std::string optional_speaker(const std::optional<int>& id) {
  return id ? std::to_string(*id) : std::string();
}

}  // namespace

ParseOutcome parse_structured_with_retry(const AgentRequest& request, const Validator& validator,
                                         ChatBackend& backend, int max_retries, TranscriptLog* log,
                                         const std::string& role) {
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  AgentRequest current = request;
  std::string last_response;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    last_response = backend.send(current);
    if (log) log->record(role, current, last_response);

    std::vector<Violation> violations;
    std::optional<json> doc = try_parse_json(last_response);
    if (!doc) {
      violations.push_back({ViolationCode::kMalformedDocument, "response is not valid JSON"});
    } else {
      violations = validator(*doc);
    }
    if (violations.empty()) return {*doc, attempt};

    // Retry prompt carries the violation list verbatim.
    current = request;
    current.prompt_text = request.prompt_text +
                          "\n\nYour previous response was rejected:\n" +
                          format_violations(violations) +
                          "Respond again with a corrected JSON object only.";
  }
  throw StructuredParseError(role + ": no valid structured output after " +
                                 std::to_string(max_retries + 1) + " attempts",
                             last_response, max_retries + 1);
}

AnalyzeResult analyze(const std::string& image_ref, const std::string& caption,
                      const std::string& audio_ref, const std::optional<std::string>& user_prompt,
                      ChatBackend& backend, const AgentOptions& opts) {
  if (caption.empty()) throw std::invalid_argument("analyze: caption must be non-empty");

  AgentRequest request;
  request.prompt_text = substitute(opts.prompts.analyzer, {{"IMAGE_REF", image_ref},
                                                           {"CAPTION", caption},
                                                           {"AUDIO_REF", audio_ref},
                                                           {"USER_PROMPT", user_prompt.value_or("")}});
  request.attachments = {{Attachment::Kind::kImage, image_ref},
                         {Attachment::Kind::kAudio, audio_ref}};

  auto outcome = parse_structured_with_retry(
      request,
      [](const json& doc) { return schedule::validate_analysis(doc).violations; },
      backend, opts.max_retries, opts.log, "analyzer");
  return {*schedule::validate_analysis(outcome.doc).record, outcome.retries};
}

PlanResult plan(const schedule::AnalysisRecord& analysis, const std::string& image_ref, int n_shots,
                ChatBackend& backend, const AgentOptions& opts) {
  if (n_shots < 1) throw std::invalid_argument("plan: n_shots must be >= 1");
  if (opts.pass_frames <= 0) throw std::invalid_argument("plan: pass_frames must be positive");

  AgentRequest request;
  request.prompt_text =
      substitute(opts.prompts.planner, {{"ANALYSIS_JSON", schedule::to_json(analysis).dump(2)},
                                        {"IMAGE_REF", image_ref},
                                        {"N_SHOTS", std::to_string(n_shots)},
                                        {"PASS_FRAMES", std::to_string(opts.pass_frames)},
                                        {"ACTIVE_SPEAKER", optional_speaker(opts.active_speaker)}});
  request.attachments = {{Attachment::Kind::kImage, image_ref}};

  const schedule::ScheduleConfig cfg{opts.pass_frames, n_shots};
  auto outcome = parse_structured_with_retry(
      request,
      [&cfg](const json& doc) { return schedule::validate_schedule(doc, cfg).violations; },
      backend, opts.max_retries, opts.log, "planner");

  schedule::MotionSchedule sched = *schedule::validate_schedule(outcome.doc, cfg).schedule;
  sched.source_analysis = analysis;
  return {std::move(sched), outcome.retries};
}

ReflectResult reflect(const schedule::MotionSchedule& sched, int completed_upto,
                      const std::string& last_frames_ref, const std::string& image_ref,
                      ChatBackend& backend, const AgentOptions& opts) {
  const int n_shots = static_cast<int>(sched.shots.size());
  if (completed_upto < 0 || completed_upto >= n_shots)
    throw std::invalid_argument("reflect: completed_upto out of range");
  if (opts.pass_frames <= 0) throw std::invalid_argument("reflect: pass_frames must be positive");

  AgentRequest request;
  request.prompt_text = substitute(
      opts.prompts.reflector, {{"SCHEDULE_JSON", schedule::to_json(sched).dump(2)},
                               {"COMPLETED_UPTO", std::to_string(completed_upto)},
                               {"LAST_FRAMES_REF", last_frames_ref},
                               {"IMAGE_REF", image_ref},
                               {"PASS_FRAMES", std::to_string(opts.pass_frames)}});
  request.attachments = {{Attachment::Kind::kFrameSequence, last_frames_ref},
                         {Attachment::Kind::kImage, image_ref}};

  const schedule::ScheduleConfig cfg{opts.pass_frames, n_shots};
  auto validator = [&](const json& doc) {
    auto result = schedule::validate_schedule(doc, cfg);
    if (!result.ok()) return result.violations;
    std::vector<Violation> violations;
    for (int i = 0; i <= completed_upto; ++i) {
      // Byte-wise: completed shots must round-trip identically.
      if (schedule::to_json(result.schedule->shots[i]).dump() !=
          schedule::to_json(sched.shots[i]).dump()) {
        violations.push_back({ViolationCode::kPastShotMutation,
                              "shot " + std::to_string(i) + " is already rendered and must be "
                              "reproduced exactly"});
      }
    }
    return violations;
  };

  try {
    auto outcome =
        parse_structured_with_retry(request, validator, backend, opts.max_retries, opts.log,
                                    "reflector");
    schedule::MotionSchedule revised = *schedule::validate_schedule(outcome.doc, cfg).schedule;
    revised.source_analysis = sched.source_analysis;
    return {std::move(revised), false, outcome.retries};
  } catch (const StructuredParseError&) {
    // Reflection is optional: keep the original plan, flag the failure.
    return {sched, true, opts.max_retries};
  } catch (const TransportError&) {
    return {sched, true, 0};
  }
}

Eigen::MatrixXd extract_reasoning_latents(const std::string& audio_ref,
                                          const std::string& analysis_transcript, int frames,
                                          int dim, ChatBackend& backend) {
  if (!backend.capabilities().exposes_latents)
    throw UnsupportedCapabilityError("backend does not expose reasoning latents");
  Eigen::MatrixXd latents = backend.reasoning_latents(audio_ref, analysis_transcript, frames, dim);
  if (latents.rows() != frames || latents.cols() != dim)
    throw std::runtime_error("reasoning latents shape " + std::to_string(latents.rows()) + "x" +
                             std::to_string(latents.cols()) + " does not match requested " +
                             std::to_string(frames) + "x" + std::to_string(dim));
  return latents;
}

}  // namespace avatar::agents
