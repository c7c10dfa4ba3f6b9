#include "avatar/pipeline/generate.hpp"

#include "avatar/pipeline/train.hpp"
#include "avatar/rng.hpp"
#include "avatar/toyworld.hpp"

namespace avatar::pipeline {

using mmdit::ConditionSet;
using mmdit::ConditioningMode;
using mmdit::LatentClip;
using mmdit::Mat;

std::vector<int> shot_text_tokens(const schedule::Shot& shot, const mmdit::ModelConfig& cfg) {
  return tokenize_text(toyworld::label_from_action(shot.action), cfg.text_vocab);
}

namespace {

void apply_reference(ConditionSet& cond, const Eigen::RowVectorXd& reference,
                     const mmdit::ModelConfig& cfg) {
  switch (cfg.conditioning) {
    case ConditioningMode::kPseudoLastFrame:
      cond.pseudo_flag = true;
      cond.last_frame = reference;
      break;
    case ConditioningMode::kRefImage:
      cond.last_frame = reference;  // clamped at slot T-1 by the sampler
      break;
    case ConditioningMode::kNone:
      break;
  }
}

}  // namespace

LatentClip generate_clip(const mmdit::Model& model, const SegmentPlan& plan,
                         const SamplerConfig& sampler) {
  const mmdit::ModelConfig& cfg = model.config();
  if (plan.audio_features.rows() != cfg.latent_frames ||
      plan.audio_features.cols() != cfg.audio_dim)
    throw std::invalid_argument("generate: audio segment shape mismatch");
  if (plan.reference.size() != cfg.frame_dim() && cfg.conditioning != ConditioningMode::kNone)
    throw std::invalid_argument("generate: reference frame size mismatch");

  ConditionSet cond;
  cond.text_tokens = shot_text_tokens(plan.shot, cfg);
  cond.audio_features = plan.audio_features;
  if (plan.prev_tail.has_value()) {
    if (plan.prev_tail->cols() != cfg.frame_dim() || plan.prev_tail->rows() < 1 ||
        plan.prev_tail->rows() >= cfg.latent_frames)
      throw std::invalid_argument("generate: prev_tail shape mismatch");
    cond.first_frames = *plan.prev_tail;
  }
  apply_reference(cond, plan.reference, cfg);

  auto forward = [&model](const LatentClip& x, double t, const ConditionSet& c) {
    return model.forward(x, t, c);
  };
  return flowmatch::sample(forward, cfg, cond, sampler.steps, sampler.seed);
}

LongFormResult generate_long(const mmdit::Model& model, const schedule::MotionSchedule& sched,
                             const Mat& audio_features, const Eigen::RowVectorXd& reference,
                             const SamplerConfig& sampler, const ReflectFn& reflect) {
  const mmdit::ModelConfig& cfg = model.config();
  const int T = cfg.latent_frames;
  const int n_shots = static_cast<int>(sched.shots.size());
  if (n_shots == 0) throw std::invalid_argument("generate: empty schedule");
  if (audio_features.rows() != static_cast<Eigen::Index>(n_shots) * T ||
      audio_features.cols() != cfg.audio_dim)
    throw std::invalid_argument("generate: audio does not cover the schedule");
  const int k = sampler.tail_frames;
  if (k < 1 || k >= T) throw std::invalid_argument("generate: tail_frames out of range");

  LongFormResult result;
  result.final_schedule = sched;
  for (int i = 0; i < n_shots; ++i) {
    SegmentPlan plan;
    plan.shot = result.final_schedule.shots[i];
    plan.audio_features = audio_features.middleRows(static_cast<Eigen::Index>(i) * T, T);
    plan.reference = reference;
    if (i > 0) {
      const LatentClip& prev = result.clips.back();
      Mat tail(k, cfg.frame_dim());
      for (int f = 0; f < k; ++f) tail.row(f) = prev.frame(T - k + f);
      plan.prev_tail = tail;
    }
    SamplerConfig seg = sampler;
    seg.seed = mix_seed(sampler.seed, static_cast<std::uint64_t>(i));
    result.clips.push_back(generate_clip(model, plan, seg));

    if (reflect && i + 1 < n_shots) {
      try {
        auto revised = reflect(result.final_schedule, i);
        if (revised.has_value()) {
          if (revised->shots.size() != result.final_schedule.shots.size())
            throw std::runtime_error("reflection changed the shot count");
          // already-rendered shots are immutable regardless of what came back
          for (int j = 0; j <= i; ++j)
            if (!(revised->shots[j] == result.final_schedule.shots[j]))
              throw std::runtime_error("reflection altered a rendered shot");
          result.final_schedule = *revised;
        }
      } catch (const std::exception&) {
        result.reflection_degraded = true;  // reflection is best-effort
      }
    }
  }
  return result;
}

LatentClip multi_person_generate(const mmdit::Model& model,
                                 const std::vector<SpeakerPlan>& speakers,
                                 const std::vector<int>& text_tokens,
                                 const Eigen::RowVectorXd& reference,
                                 const SamplerConfig& sampler) {
  const mmdit::ModelConfig& cfg = model.config();
  if (speakers.empty()) throw std::invalid_argument("generate: no speakers");
  const std::size_t voxels = static_cast<std::size_t>(cfg.latent_frames) * cfg.latent_height *
                             cfg.latent_width;

  ConditionSet cond;
  cond.text_tokens = text_tokens;
  for (const auto& sp : speakers) {
    if (sp.mask.size() != voxels)
      throw std::invalid_argument("generate: speaker mask voxel count mismatch");
    if (sp.audio_features.rows() != cfg.latent_frames ||
        sp.audio_features.cols() != cfg.audio_dim)
      throw std::invalid_argument("generate: speaker audio shape mismatch");
    cond.speaker_masks.push_back({sp.speaker_id, sp.mask, sp.audio_features});
  }
  apply_reference(cond, reference, cfg);

  auto forward = [&model](const LatentClip& x, double t, const ConditionSet& c) {
    return model.forward(x, t, c);
  };
  // disjointness is enforced by build_attention_mask inside the forward pass
  return flowmatch::sample(forward, cfg, cond, sampler.steps, sampler.seed);
}

}  // namespace avatar::pipeline
