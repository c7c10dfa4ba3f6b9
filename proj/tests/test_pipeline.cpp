#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "avatar/flowmatch.hpp"
#include "avatar/pipeline/checkpoint.hpp"
#include "avatar/pipeline/generate.hpp"
#include "avatar/pipeline/train.hpp"
#include "avatar/rng.hpp"

using namespace avatar;
using mmdit::LatentClip;
using mmdit::Mat;

namespace {

mmdit::ModelConfig small_cfg() {
  mmdit::ModelConfig cfg;
  cfg.latent_frames = 4;
  cfg.latent_height = 8;
  cfg.latent_width = 8;
  cfg.latent_channels = 4;
  cfg.patch = 2;
  cfg.hidden_dim = 32;
  cfg.depth = 2;
  cfg.heads = 4;
  return cfg;
}

// fixed deterministic example: a smooth pattern the model can memorize
pipeline::TrainExample fixed_example(const mmdit::ModelConfig& cfg) {
  pipeline::TrainExample ex;
  ex.x0 = LatentClip(cfg.latent_frames, cfg.latent_height, cfg.latent_width, cfg.latent_channels);
  for (int t = 0; t < cfg.latent_frames; ++t)
    for (int y = 0; y < cfg.latent_height; ++y)
      for (int x = 0; x < cfg.latent_width; ++x)
        for (int c = 0; c < cfg.latent_channels; ++c)
          ex.x0.at(t, y, x, c) = std::sin(0.3 * t + 0.5 * y) * std::cos(0.4 * x + c);
  ex.text_tokens = {1, 2};
  ex.audio_features = Mat::Zero(cfg.latent_frames, cfg.audio_dim);
  for (int t = 0; t < cfg.latent_frames; ++t) ex.audio_features(t, 0) = 0.5 + 0.4 * std::sin(t);
  ex.sync_flag = true;
  return ex;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("avatarkit_test_" + name);
}

Eigen::RowVectorXd random_frame(const mmdit::ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::RowVectorXd v(cfg.frame_dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("checkpoints round-trip bitwise") {
  auto cfg = small_cfg();
  auto model = mmdit::Model::init(cfg, 7);
  const auto path = temp_path("roundtrip.ckpt");
  pipeline::save_checkpoint(pipeline::Checkpoint::of(model), path);
  auto loaded = pipeline::load_checkpoint(path);
  CHECK(loaded.config == cfg);
  REQUIRE(loaded.params.arrays.size() == model.params().arrays.size());
  for (const auto& [name, mat] : model.params().arrays)
    CHECK(pipeline::bitwise_equal(loaded.params.arrays.at(name), mat));
  std::filesystem::remove(path);

  CHECK_THROWS_AS(pipeline::load_checkpoint(temp_path("missing.ckpt")), std::runtime_error);
}

TEST_CASE("stage-2 assembly splices the audio branch bitwise") {
  auto cfg = small_cfg();
  auto pretrained = pipeline::Checkpoint::of(mmdit::Model::init(cfg, 1));
  auto stage1 = pipeline::Checkpoint::of(mmdit::Model::init(cfg, 2));

  auto spliced = pipeline::assemble_stage2(pretrained, stage1);
  CHECK(spliced.config == cfg);
  for (const auto& [name, mat] : spliced.params.arrays) {
    const auto& want = name.starts_with("audio.") ? stage1.params.arrays.at(name)
                                                  : pretrained.params.arrays.at(name);
    CHECK(pipeline::bitwise_equal(mat, want));
  }

  auto other_cfg = cfg;
  other_cfg.hidden_dim = 64;
  auto mismatched = pipeline::Checkpoint::of(mmdit::Model::init(other_cfg, 3));
  CHECK_THROWS_AS(pipeline::assemble_stage2(pretrained, mismatched), std::invalid_argument);

  auto incomplete = stage1;
  incomplete.params.arrays.erase("audio.proj");
  try {
    pipeline::assemble_stage2(pretrained, incomplete);
    FAIL("expected TransplantError");
  } catch (const pipeline::TransplantError& e) {
    REQUIRE(e.missing.size() == 1);
    CHECK(e.missing[0] == "audio.proj");
    CHECK(std::string(e.what()).find("stage1:audio.proj") != std::string::npos);
  }
}

TEST_CASE("training reduces the loss and respects the gradient clip") {
  auto cfg = small_cfg();
  auto model = mmdit::Model::init(cfg, 11);
  auto ex = fixed_example(cfg);
  pipeline::ExampleStream stream = [&](std::int64_t) { return ex; };

  pipeline::TrainConfig tc;
  tc.learning_rate = 1e-2;
  tc.batch_size = 4;
  tc.grad_clip = 1.0;
  pipeline::AdamW opt(tc.learning_rate);

  std::vector<double> losses;
  for (int s = 0; s < 40; ++s) {
    auto m = pipeline::train_step(model, stream, tc, opt, s, 42);
    CHECK(std::isfinite(m.loss));
    CHECK(m.grad_norm <= tc.grad_clip + 1e-12);
    CHECK(m.lr == tc.learning_rate);
    losses.push_back(m.loss);
  }
  double head = 0, tail = 0;
  for (int i = 0; i < 5; ++i) {
    head += losses[i];
    tail += losses[losses.size() - 1 - i];
  }
  CHECK(tail < head);  // memorizing one example must make progress
}

TEST_CASE("training is deterministic per seed") {
  auto cfg = small_cfg();
  auto ex = fixed_example(cfg);
  pipeline::ExampleStream stream = [&](std::int64_t) { return ex; };
  pipeline::TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 2;

  auto run = [&](std::uint64_t seed) {
    auto model = mmdit::Model::init(cfg, 5);
    pipeline::AdamW opt(tc.learning_rate);
    for (int s = 0; s < 3; ++s) pipeline::train_step(model, stream, tc, opt, s, seed);
    return model.params();
  };
  auto a = run(9), b = run(9), c = run(10);
  bool all_equal = true, any_diff = false;
  for (const auto& [name, mat] : a.arrays) {
    all_equal = all_equal && pipeline::bitwise_equal(mat, b.arrays.at(name));
    any_diff = any_diff || !pipeline::bitwise_equal(mat, c.arrays.at(name));
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("audio dropout yields exactly-zero audio-branch gradients") {
  auto cfg = small_cfg();
  auto model = mmdit::Model::init(cfg, 13);
  auto ex = fixed_example(cfg);

  auto audio_grad_max = [&](bool dropped) {
    mmdit::ConditionSet cond;
    cond.text_tokens = ex.text_tokens;
    cond.audio_features = ex.audio_features;
    cond.audio_dropped = dropped;
    auto fb = flowmatch::make_flow_batch(ex.x0.as_matrix(), 77, 0.5);
    LatentClip xt =
        LatentClip::from_matrix(fb.xt, cfg.latent_height, cfg.latent_width, cfg.latent_channels);
    LatentClip vt = LatentClip::from_matrix(fb.v_target, cfg.latent_height, cfg.latent_width,
                                            cfg.latent_channels);
    diff::Tape tape;
    auto taped = model.forward_taped(tape, xt, fb.t, cond);
    auto loss = flowmatch::fm_loss_taped(tape, taped.velocity_tokens, model.patchify(vt),
                                         xt.cond_mask, cfg.tokens_per_frame());
    tape.backward(loss);
    double worst = 0;
    for (const auto& [name, var] : taped.param_vars)
      if (name.starts_with("audio."))
        worst = std::max(worst, tape.grad(var).cwiseAbs().maxCoeff());
    return worst;
  };

  CHECK(audio_grad_max(true) == 0.0);   // exact, not approximate
  CHECK(audio_grad_max(false) > 0.0);
}

TEST_CASE("train config validates bounds and round-trips through JSON") {
  pipeline::TrainConfig tc;
  tc.validate();  // defaults are valid

  auto expect_invalid = [](auto mutate) {
    pipeline::TrainConfig bad;
    mutate(bad);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  };
  expect_invalid([](auto& c) { c.learning_rate = 0.0; });
  expect_invalid([](auto& c) { c.batch_size = 0; });
  expect_invalid([](auto& c) { c.p_audio_drop = 1.5; });
  expect_invalid([](auto& c) { c.stage = "stage3"; });
  expect_invalid([](auto& c) { c.first_frames_k = 0; });

  tc.learning_rate = 3e-4;
  tc.p_text_drop = 0.25;
  tc.stage = "finetune";
  auto round = pipeline::train_config_from_json(pipeline::to_json(tc));
  CHECK(round.learning_rate == tc.learning_rate);
  CHECK(round.p_text_drop == tc.p_text_drop);
  CHECK(round.stage == tc.stage);
  // partial documents fall back to defaults
  auto sparse = pipeline::train_config_from_json(nlohmann::json{{"steps", 12}});
  CHECK(sparse.steps == 12);
  CHECK(sparse.learning_rate == 5e-5);
}

TEST_CASE("text tokenization uses the fixed motion vocabulary") {
  CHECK(pipeline::tokenize_text("walk left", 16) == std::vector<int>{1, 2});
  CHECK(pipeline::tokenize_text("Walk RIGHT", 16) == std::vector<int>{1, 3});
  CHECK(pipeline::tokenize_text("wave", 16) == std::vector<int>{4});
  CHECK(pipeline::tokenize_text("idle", 16) == std::vector<int>{0});
  auto hashed = pipeline::tokenize_text("gizmo", 16);
  REQUIRE(hashed.size() == 1);
  CHECK(hashed[0] >= 5);
  CHECK(hashed[0] < 16);
  CHECK(pipeline::tokenize_text("gizmo", 5).empty());  // no hash space left
}

TEST_CASE("metrics CSV has the documented columns") {
  const auto path = temp_path("metrics.csv");
  pipeline::write_metrics_csv({{0, 1.5, 0.25, 1e-3}, {1, 1.25, 0.5, 1e-3}}, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,loss,grad_norm,lr");
  std::getline(in, line);
  CHECK(line.substr(0, 6) == "0,1.5,");
  std::filesystem::remove(path);
}

TEST_CASE("clip generation is deterministic and honors conditioning slots") {
  auto cfg = small_cfg();
  auto model = mmdit::Model::init(cfg, 17);

  pipeline::SegmentPlan plan;
  plan.shot = {0, "neutral", "wave", cfg.latent_frames};
  plan.audio_features = Mat::Zero(cfg.latent_frames, cfg.audio_dim);
  plan.reference = random_frame(cfg, 100);

  pipeline::SamplerConfig sampler{2, 5, 1};
  auto a = pipeline::generate_clip(model, plan, sampler);
  auto b = pipeline::generate_clip(model, plan, sampler);
  CHECK(a.frames == cfg.latent_frames);
  CHECK(a.values == b.values);
  sampler.seed = 6;
  CHECK(a.values != pipeline::generate_clip(model, plan, sampler).values);

  // pseudo mode: slot T-1 is generated, not the reference
  CHECK(a.frame(cfg.latent_frames - 1) != plan.reference);

  Mat tail = Mat::Zero(1, cfg.frame_dim());
  tail.row(0) = random_frame(cfg, 101);
  plan.prev_tail = tail;
  auto c = pipeline::generate_clip(model, plan, sampler);
  CHECK(c.frame(0) == tail.row(0));  // bitwise clamp

  auto ref_cfg = cfg;
  ref_cfg.conditioning = mmdit::ConditioningMode::kRefImage;
  auto ref_model = mmdit::Model::init(ref_cfg, 17);
  auto d = pipeline::generate_clip(ref_model, plan, sampler);
  CHECK(d.frame(cfg.latent_frames - 1) == plan.reference);

  plan.audio_features = Mat::Zero(2, cfg.audio_dim);
  CHECK_THROWS_AS(pipeline::generate_clip(model, plan, sampler), std::invalid_argument);
}

TEST_CASE("long-form generation stitches segment tails into the next segment") {
  auto cfg = small_cfg();
  auto model = mmdit::Model::init(cfg, 19);
  const int T = cfg.latent_frames;

  schedule::MotionSchedule sched;
  sched.shots = {{0, "neutral", "idle", T}, {1, "neutral", "wave", T}, {2, "neutral", "walk left", T}};
  Mat audio = Mat::Zero(3 * T, cfg.audio_dim);
  auto reference = random_frame(cfg, 200);
  pipeline::SamplerConfig sampler{2, 21, 1};

  auto result = pipeline::generate_long(model, sched, audio, reference, sampler);
  REQUIRE(result.clips.size() == 3);
  CHECK_FALSE(result.reflection_degraded);
  for (const auto& clip : result.clips) CHECK(clip.frames == T);
  CHECK(result.clips[1].frame(0) == result.clips[0].frame(T - 1));
  CHECK(result.clips[2].frame(0) == result.clips[1].frame(T - 1));

  CHECK_THROWS_AS(pipeline::generate_long(model, sched, Mat::Zero(2 * T, cfg.audio_dim),
                                          reference, sampler),
                  std::invalid_argument);
  pipeline::SamplerConfig bad_tail{2, 21, T};
  CHECK_THROWS_AS(pipeline::generate_long(model, sched, audio, reference, bad_tail),
                  std::invalid_argument);
}

TEST_CASE("reflection between segments is applied, guarded, and best-effort") {
  auto cfg = small_cfg();
  auto model = mmdit::Model::init(cfg, 19);
  const int T = cfg.latent_frames;
  schedule::MotionSchedule sched;
  sched.shots = {{0, "neutral", "idle", T}, {1, "neutral", "idle", T}, {2, "neutral", "idle", T}};
  Mat audio = Mat::Zero(3 * T, cfg.audio_dim);
  auto reference = random_frame(cfg, 200);
  pipeline::SamplerConfig sampler{2, 21, 1};

  // a nullopt reflector must not change the output at all
  int calls = 0;
  auto noop = [&](const schedule::MotionSchedule&, int) -> std::optional<schedule::MotionSchedule> {
    ++calls;
    return std::nullopt;
  };
  auto base = pipeline::generate_long(model, sched, audio, reference, sampler);
  auto with_noop = pipeline::generate_long(model, sched, audio, reference, sampler, noop);
  CHECK(calls == 2);  // between segments only
  CHECK_FALSE(with_noop.reflection_degraded);
  for (int i = 0; i < 3; ++i) CHECK(base.clips[i].values == with_noop.clips[i].values);

  // revising a future shot takes effect
  auto revise = [&](const schedule::MotionSchedule& s, int upto)
      -> std::optional<schedule::MotionSchedule> {
    if (upto != 0) return std::nullopt;
    auto r = s;
    r.shots[2].action = "wave";
    return r;
  };
  auto revised = pipeline::generate_long(model, sched, audio, reference, sampler, revise);
  CHECK_FALSE(revised.reflection_degraded);
  CHECK(revised.final_schedule.shots[2].action == "wave");

  // mutating a rendered shot is rejected and flagged, schedule kept
  auto mutate_past = [&](const schedule::MotionSchedule& s, int)
      -> std::optional<schedule::MotionSchedule> {
    auto r = s;
    r.shots[0].action = "wave";
    return r;
  };
  auto guarded = pipeline::generate_long(model, sched, audio, reference, sampler, mutate_past);
  CHECK(guarded.reflection_degraded);
  CHECK(guarded.final_schedule.shots[0].action == "idle");

  // a throwing reflector degrades but still renders everything
  auto thrower = [](const schedule::MotionSchedule&, int) -> std::optional<schedule::MotionSchedule> {
    throw std::runtime_error("backend down");
  };
  auto degraded = pipeline::generate_long(model, sched, audio, reference, sampler, thrower);
  CHECK(degraded.reflection_degraded);
  REQUIRE(degraded.clips.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(degraded.clips[i].values == base.clips[i].values);
}

TEST_CASE("multi-person generation routes audio through disjoint masks") {
  auto cfg = small_cfg();
  auto model = mmdit::Model::init(cfg, 23);
  const std::size_t voxels =
      static_cast<std::size_t>(cfg.latent_frames) * cfg.latent_height * cfg.latent_width;

  auto half_mask = [&](bool left) {
    std::vector<std::uint8_t> m(voxels, 0);
    for (int t = 0; t < cfg.latent_frames; ++t)
      for (int y = 0; y < cfg.latent_height; ++y)
        for (int x = 0; x < cfg.latent_width; ++x)
          if ((x < cfg.latent_width / 2) == left)
            m[(static_cast<std::size_t>(t) * cfg.latent_height + y) * cfg.latent_width + x] = 1;
    return m;
  };

  std::vector<pipeline::SpeakerPlan> speakers(2);
  speakers[0] = {0, half_mask(true), Mat::Ones(cfg.latent_frames, cfg.audio_dim) * 0.5};
  speakers[1] = {1, half_mask(false), Mat::Zero(cfg.latent_frames, cfg.audio_dim)};

  pipeline::SamplerConfig sampler{2, 31, 1};
  auto reference = random_frame(cfg, 300);
  auto clip = pipeline::multi_person_generate(model, speakers, {0}, reference, sampler);
  CHECK(clip.frames == cfg.latent_frames);
  CHECK(clip.all_finite());

  speakers[1].mask = speakers[0].mask;  // overlap
  CHECK_THROWS_AS(pipeline::multi_person_generate(model, speakers, {0}, reference, sampler),
                  std::invalid_argument);
  CHECK_THROWS_AS(pipeline::multi_person_generate(model, {}, {0}, reference, sampler),
                  std::invalid_argument);
}

TEST_CASE("shot text tokens map the action onto the motion vocabulary") {
  auto cfg = small_cfg();
  schedule::Shot shot{0, "happy", "wave enthusiastically", cfg.latent_frames};
  CHECK(pipeline::shot_text_tokens(shot, cfg) == std::vector<int>{4});
  shot.action = "slowly walk to the left";
  CHECK(pipeline::shot_text_tokens(shot, cfg) == std::vector<int>{1, 2});
}
