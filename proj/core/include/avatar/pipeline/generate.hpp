#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "avatar/flowmatch.hpp"
#include "avatar/mmdit/model.hpp"
#include "avatar/schedule.hpp"

namespace avatar::pipeline {

struct SamplerConfig {
  int steps = 16;
  std::uint64_t seed = 0;
  int tail_frames = 1;  // k clean frames carried into the next segment
};

/// Everything needed to render one shot.
struct SegmentPlan {
  schedule::Shot shot;
  mmdit::Mat audio_features;            // T x A for this pass
  std::optional<mmdit::Mat> prev_tail;  // k x (H*W*C) clean latents from the previous segment
  Eigen::RowVectorXd reference;         // identity latent frame (H*W*C)
};

/// Token ids fed to the model for a shot: its action text mapped onto the
/// motion vocabulary.
std::vector<int> shot_text_tokens(const schedule::Shot& shot, const mmdit::ModelConfig& cfg);

/// Renders one segment. Conditioning per model.config().conditioning:
/// pseudo_last_frame puts the reference in the shifted extra slot, ref_image
/// clamps it at slot T-1, none skips it. prev_tail (when present) fills the
/// leading first-frame slots. Always returns T frames.
mmdit::LatentClip generate_clip(const mmdit::Model& model, const SegmentPlan& plan,
                                const SamplerConfig& sampler);

/// Optional re-planner invoked between segments: given the schedule and the
/// index of the last completed shot, may return a revised schedule. Throwing
/// or returning nullopt leaves the plan unchanged (reflection is best-effort).
using ReflectFn =
    std::function<std::optional<schedule::MotionSchedule>(const schedule::MotionSchedule&, int)>;

struct LongFormResult {
  std::vector<mmdit::LatentClip> clips;         // one per shot
  schedule::MotionSchedule final_schedule;      // after any reflection
  bool reflection_degraded = false;             // a reflect call failed
};

/// Autoregressive long-form synthesis: segment i>0 is seeded with the last
/// tail_frames frames of segment i-1. `audio_features` spans the whole
/// schedule (shots*T rows).
LongFormResult generate_long(const mmdit::Model& model, const schedule::MotionSchedule& sched,
                             const mmdit::Mat& audio_features,
                             const Eigen::RowVectorXd& reference, const SamplerConfig& sampler,
                             const ReflectFn& reflect = nullptr);

struct SpeakerPlan {
  int speaker_id = 0;
  std::vector<std::uint8_t> mask;  // T*H*W voxels
  mmdit::Mat audio_features;       // T x A (zero rows for a silent speaker)
};

/// One shared video stream with per-speaker audio routed through the
/// attention permission mask. Masks must be pairwise disjoint.
mmdit::LatentClip multi_person_generate(const mmdit::Model& model,
                                        const std::vector<SpeakerPlan>& speakers,
                                        const std::vector<int>& text_tokens,
                                        const Eigen::RowVectorXd& reference,
                                        const SamplerConfig& sampler);

}  // namespace avatar::pipeline
