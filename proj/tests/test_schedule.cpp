#include <doctest.h>
#include <nlohmann/json.hpp>

#include "avatar/rng.hpp"
#include "avatar/schedule.hpp"

using namespace avatar;
using nlohmann::json;

namespace {

json valid_shot(int index, int duration) {
  return {{"index", index},
          {"expression", "smile"},
          {"action", "wave"},
          {"duration_frames", duration}};
}

json valid_schedule_doc(int n_shots, int duration) {
  json shots = json::array();
  for (int i = 0; i < n_shots; ++i) shots.push_back(valid_shot(i, duration));
  return {{"schema_version", 1}, {"shots", shots}};
}

bool has_code(const std::vector<schedule::Violation>& vs, schedule::ViolationCode code) {
  for (const auto& v : vs)
    if (v.code == code) return true;
  return false;
}

}  // namespace

TEST_CASE("shots_for_duration is the ceiling of audio over pass frames") {
  CHECK(schedule::shots_for_duration(120, 120) == 1);
  CHECK(schedule::shots_for_duration(121, 120) == 2);
  CHECK(schedule::shots_for_duration(1, 120) == 1);
  CHECK_THROWS_AS(schedule::shots_for_duration(0, 120), std::invalid_argument);
  CHECK_THROWS_AS(schedule::shots_for_duration(120, 0), std::invalid_argument);
  CHECK_THROWS_AS(schedule::shots_for_duration(-5, 120), std::invalid_argument);
}

TEST_CASE("shots_for_duration covers the audio with the fewest passes") {
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    const int a = rng.uniform_int(1, 5000);
    const int p = rng.uniform_int(1, 400);
    const int n = schedule::shots_for_duration(a, p);
    CHECK(p * n >= a);
    CHECK(p * (n - 1) < a);
  }
}

TEST_CASE("validate_schedule accepts a conforming document") {
  auto res = schedule::validate_schedule(valid_schedule_doc(2, 120),
                                         schedule::ScheduleConfig{120, 2});
  REQUIRE(res.ok());
  CHECK(res.schedule->shots.size() == 2);
  CHECK(res.schedule->shots[1].index == 1);
  CHECK(res.schedule->total_frames() == 240);
  CHECK(res.violations.empty());
}

TEST_CASE("validate_schedule flags non-contiguous indices") {
  json doc = valid_schedule_doc(2, 120);
  doc["shots"][1]["index"] = 2;
  auto res = schedule::validate_schedule(doc, schedule::ScheduleConfig{120, 2});
  CHECK_FALSE(res.ok());
  CHECK(has_code(res.violations, schedule::ViolationCode::kNonContiguousIndex));
  CHECK(to_string(schedule::ViolationCode::kNonContiguousIndex) == "NON_CONTIGUOUS_INDEX");
}

TEST_CASE("validate_schedule flags a duration not matching the pass") {
  json doc = valid_schedule_doc(1, 60);
  auto res = schedule::validate_schedule(doc, schedule::ScheduleConfig{120, 1});
  CHECK_FALSE(res.ok());
  CHECK(has_code(res.violations, schedule::ViolationCode::kBadDuration));
}

TEST_CASE("validate_schedule flags wrong shot count, bad version, missing fields") {
  auto wrong_count = schedule::validate_schedule(valid_schedule_doc(3, 120),
                                                 schedule::ScheduleConfig{120, 2});
  CHECK(has_code(wrong_count.violations, schedule::ViolationCode::kWrongShotCount));

  json bad_version = valid_schedule_doc(1, 120);
  bad_version["schema_version"] = 2;
  CHECK(has_code(schedule::validate_schedule(bad_version, {120, 1}).violations,
                 schedule::ViolationCode::kBadSchemaVersion));

  json missing = valid_schedule_doc(1, 120);
  missing["shots"][0].erase("action");
  CHECK(has_code(schedule::validate_schedule(missing, {120, 1}).violations,
                 schedule::ViolationCode::kMissingField));
}

TEST_CASE("validate_schedule is total over junk inputs") {
  for (const json doc : {json(nullptr), json(3), json("text"), json::array(),
                         json{{"schema_version", 1}}, json{{"shots", 7}}}) {
    auto res = schedule::validate_schedule(doc, schedule::ScheduleConfig{120, 1});
    CHECK_FALSE(res.ok());
    CHECK_FALSE(res.violations.empty());
  }
}

TEST_CASE("analysis validation requires all six fields non-empty") {
  json doc = {{"schema_version", 1}, {"persona", "pirate"},     {"language_style", "gruff"},
              {"speech_content", "yarr"}, {"emotion", "jolly"}, {"intent", "greet"},
              {"environment", "deck"}};
  auto ok = schedule::validate_analysis(doc);
  REQUIRE(ok.ok());
  CHECK(ok.record->persona == "pirate");

  doc["emotion"] = "";
  CHECK(has_code(schedule::validate_analysis(doc).violations,
                 schedule::ViolationCode::kEmptyField));
  doc.erase("emotion");
  CHECK(has_code(schedule::validate_analysis(doc).violations,
                 schedule::ViolationCode::kMissingField));
}

TEST_CASE("schedule and analysis JSON round-trips are identity") {
  schedule::MotionSchedule sched;
  sched.shots = {{0, "calm", "walk left", 24}, {1, "happy", "wave", 24}};
  sched.source_analysis = {"sprite", "casual", "hello there", "warm", "greet", "void"};
  auto round = schedule::schedule_from_json(schedule::to_json(sched));
  CHECK(round == sched);
}
