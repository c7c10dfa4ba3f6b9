#include <cstdio>
#include <filesystem>
#include <fstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "avatar/agents/agents.hpp"
#include "avatar/rng.hpp"

using namespace avatar;
using nlohmann::json;

namespace {

std::string valid_analysis_text() {
  return json{{"schema_version", 1}, {"persona", "sprite"},   {"language_style", "plain"},
              {"speech_content", "la"}, {"emotion", "calm"},  {"intent", "greet"},
              {"environment", "void"}}
      .dump();
}

std::string valid_schedule_text(int n_shots, int duration, const std::string& action = "wave") {
  json shots = json::array();
  for (int i = 0; i < n_shots; ++i)
    shots.push_back({{"index", i},
                     {"expression", "neutral"},
                     {"action", action},
                     {"duration_frames", duration}});
  return json{{"schema_version", 1}, {"shots", shots}}.dump();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("avatarkit_test_" + name);
}

}  // namespace

TEST_CASE("analyze passes a conforming mock response through") {
  agents::MockBackend backend({valid_analysis_text()});
  auto result = agents::analyze("img", "a sprite", "aud", std::nullopt, backend);
  CHECK(result.record.persona == "sprite");
  CHECK(result.retry_count == 0);
}

TEST_CASE("analyze retries once on a malformed first response") {
  agents::MockBackend backend({"not json at all", valid_analysis_text()});
  auto result = agents::analyze("img", "a sprite", "aud", std::nullopt, backend);
  CHECK(result.retry_count == 1);
  CHECK(backend.requests_served() == 2);
}

TEST_CASE("analyze fails after exhausting retries, keeping the last transcript") {
  agents::MockBackend backend({"junk", "junk", "junk junk"});
  agents::AgentOptions opts;
  opts.max_retries = 2;
  try {
    agents::analyze("img", "cap", "aud", std::nullopt, backend, opts);
    FAIL("expected StructuredParseError");
  } catch (const agents::StructuredParseError& e) {
    CHECK(e.attempts == 3);
    CHECK(e.last_response == "junk junk");
  }
  CHECK_THROWS_AS(agents::analyze("img", "", "aud", std::nullopt, backend), std::invalid_argument);
}

TEST_CASE("plan produces the requested number of shots") {
  agents::MockBackend backend({valid_schedule_text(2, 24)});
  agents::AgentOptions opts;
  opts.pass_frames = 24;
  schedule::AnalysisRecord analysis{"p", "l", "s", "e", "i", "env"};
  auto result = agents::plan(analysis, "img", 2, backend, opts);
  CHECK(result.schedule.shots.size() == 2);
  CHECK(result.schedule.source_analysis == analysis);
  CHECK(result.retry_count == 0);
  CHECK_THROWS_AS(agents::plan(analysis, "img", 0, backend, opts), std::invalid_argument);
}

TEST_CASE("plan re-prompts with violation feedback on a wrong shot count") {
  agents::MockBackend backend({valid_schedule_text(3, 24), valid_schedule_text(2, 24)});
  agents::TranscriptLog log;
  agents::AgentOptions opts;
  opts.pass_frames = 24;
  opts.log = &log;
  auto result = agents::plan({"p", "l", "s", "e", "i", "env"}, "img", 2, backend, opts);
  CHECK(result.retry_count == 1);
  REQUIRE(log.exchanges().size() == 2);
  // the retry prompt carries the violation list verbatim
  CHECK(log.exchanges()[1].request.prompt_text.find("WRONG_SHOT_COUNT") != std::string::npos);
}

TEST_CASE("reflect replaces future shots and preserves completed ones") {
  schedule::MotionSchedule sched;
  sched.shots = {{0, "neutral", "idle", 24}, {1, "neutral", "idle", 24}, {2, "neutral", "idle", 24}};
  json revised = json::parse(valid_schedule_text(3, 24, "wave"));
  revised["shots"][0] = schedule::to_json(sched.shots[0]);  // completed shot untouched
  agents::MockBackend backend({revised.dump()});
  agents::AgentOptions opts;
  opts.pass_frames = 24;
  auto result = agents::reflect(sched, 0, "frames", "img", backend, opts);
  CHECK_FALSE(result.reflection_failed);
  CHECK(result.schedule.shots[0] == sched.shots[0]);
  CHECK(result.schedule.shots[1].action == "wave");
  CHECK(result.schedule.shots[2].action == "wave");
}

TEST_CASE("reflect re-prompts on a past-shot mutation") {
  schedule::MotionSchedule sched;
  sched.shots = {{0, "neutral", "idle", 24}, {1, "neutral", "idle", 24}};
  // first response rewrites shot 0; second respects it
  json good = json::parse(valid_schedule_text(2, 24, "wave"));
  good["shots"][0] = schedule::to_json(sched.shots[0]);
  agents::MockBackend backend({valid_schedule_text(2, 24, "wave"), good.dump()});
  agents::TranscriptLog log;
  agents::AgentOptions opts;
  opts.pass_frames = 24;
  opts.log = &log;
  auto result = agents::reflect(sched, 0, "frames", "img", backend, opts);
  CHECK_FALSE(result.reflection_failed);
  CHECK(result.retry_count == 1);
  CHECK(log.exchanges()[1].request.prompt_text.find("PAST_SHOT_MUTATION") != std::string::npos);
  CHECK(result.schedule.shots[0] == sched.shots[0]);
}

TEST_CASE("reflect falls back to the original schedule when the mock keeps failing") {
  schedule::MotionSchedule sched;
  sched.shots = {{0, "neutral", "idle", 24}, {1, "neutral", "idle", 24}};
  agents::MockBackend backend({"junk", "junk", "junk"});
  agents::AgentOptions opts;
  opts.pass_frames = 24;
  auto result = agents::reflect(sched, 0, "frames", "img", backend, opts);
  CHECK(result.reflection_failed);
  CHECK(result.schedule == sched);
  CHECK_THROWS_AS(agents::reflect(sched, 5, "f", "i", backend, opts), std::invalid_argument);
}

TEST_CASE("parse_structured_with_retry counts attempts as max_retries + 1") {
  agents::AgentRequest req;
  req.prompt_text = "emit json";
  auto reject_all = [](const json&) {
    return std::vector<schedule::Violation>{
        {schedule::ViolationCode::kMalformedDocument, "nope"}};
  };
  agents::MockBackend backend({"{}", "{}", "{}"});
  CHECK_THROWS_AS(agents::parse_structured_with_retry(req, reject_all, backend, 2),
                  agents::StructuredParseError);
  CHECK(backend.requests_served() == 3);
}

TEST_CASE("reasoning latents are deterministic and shaped per request") {
  agents::MockBackend backend({});
  auto a = agents::extract_reasoning_latents("aud", "transcript", 6, 8, backend);
  auto b = agents::extract_reasoning_latents("aud", "transcript", 6, 8, backend);
  CHECK(a.rows() == 6);
  CHECK(a.cols() == 8);
  CHECK(a == b);
  auto c = agents::extract_reasoning_latents("aud", "other transcript", 6, 8, backend);
  CHECK(a != c);

  struct NoLatents : agents::ChatBackend {
    std::string send(const agents::AgentRequest&) override { return ""; }
    agents::BackendCapabilities capabilities() const override { return {}; }
  } bare;
  CHECK_THROWS_AS(agents::extract_reasoning_latents("a", "t", 6, 8, bare),
                  agents::UnsupportedCapabilityError);
}

TEST_CASE("transcript log mirrors to JSONL and replays byte-for-byte") {
  const auto file = temp_path("transcript.jsonl");
  {
    agents::TranscriptLog log(file);
    agents::MockBackend backend({valid_analysis_text()});
    agents::AgentOptions opts;
    opts.log = &log;
    agents::analyze("img", "cap", "aud", std::nullopt, backend, opts);
  }
  auto exchanges = agents::TranscriptLog::load(file);
  REQUIRE(exchanges.size() == 1);
  CHECK(exchanges[0].role == "analyzer");
  CHECK(exchanges[0].request.attachments.size() == 2);

  agents::ReplayBackend replay(exchanges);
  auto result = agents::analyze("img", "cap", "aud", std::nullopt, replay);
  CHECK(result.record.persona == "sprite");
  std::filesystem::remove(file);
}

TEST_CASE("mock cue files accept arrays, response objects, and ordinal maps") {
  const auto file = temp_path("cues.json");
  {
    std::ofstream out(file);
    out << json{{"1", "second"}, {"0", "first"}}.dump();
  }
  auto responses = agents::MockBackend::load_cue_file(file);
  REQUIRE(responses.size() == 2);
  CHECK(responses[0] == "first");
  CHECK(responses[1] == "second");
  {
    std::ofstream out(file, std::ios::trunc);
    out << json{{"responses", json::array({"a", "b"})}}.dump();
  }
  CHECK(agents::MockBackend::load_cue_file(file) == std::vector<std::string>{"a", "b"});
  std::filesystem::remove(file);
}

TEST_CASE("prompt substitution fills known keys and keeps unknown ones visible") {
  CHECK(agents::substitute("a {{X}} b {{Y}} c", {{"X", "1"}}) == "a 1 b {{Y}} c");
  CHECK(agents::substitute("{{X}}{{X}}", {{"X", "z"}}) == "zz");
  CHECK(agents::substitute("no placeholders", {}) == "no placeholders");
  auto set = agents::PromptSet::defaults();
  CHECK(set.analyzer.find("{{CAPTION}}") != std::string::npos);
  CHECK(set.planner.find("{{N_SHOTS}}") != std::string::npos);
  CHECK(set.reflector.find("{{COMPLETED_UPTO}}") != std::string::npos);
}
