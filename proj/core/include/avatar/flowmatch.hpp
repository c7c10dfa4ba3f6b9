#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>

#include "avatar/mmdit/tape.hpp"
#include "avatar/mmdit/types.hpp"

namespace avatar::flowmatch {

using mmdit::LatentClip;
using mmdit::Mat;

/// One rectified-flow training example: xt = (1-t)*x0 + t*x1, v = x1 - x0,
/// with t=1 pure noise. Frames are rows, H*W*C columns.
struct FlowBatch {
  Mat x0;
  Mat x1;
  Mat xt;
  Mat v_target;
  double t = 0.0;
};

/// Deterministic given seed. Noise is standard normal; t is uniform on [0,1]
/// unless t_fixed is given.
FlowBatch make_flow_batch(const Mat& x0, std::uint64_t seed,
                          std::optional<double> t_fixed = std::nullopt);

/// Mean squared error over all voxels outside condition frames.
/// Throws std::invalid_argument when every frame is a condition frame.
double fm_loss(const Mat& pred_v, const Mat& v_target, const std::vector<std::uint8_t>& cond_mask);

/// Taped counterpart over token arrays (rows grouped per frame). Identical
/// value to fm_loss on the unpatchified tensors.
diff::Var fm_loss_taped(diff::Tape& tape, diff::Var pred_tokens, const Mat& target_tokens,
                        const std::vector<std::uint8_t>& cond_mask, int tokens_per_frame);

struct DivergedError : std::runtime_error {
  int step;
  explicit DivergedError(int s)
      : std::runtime_error("sampling diverged at step " + std::to_string(s)), step(s) {}
};

using ForwardFn =
    std::function<LatentClip(const LatentClip&, double, const mmdit::ConditionSet&)>;

/// Euler integration from t=1 (noise) to t=0. Condition frames (leading
/// first_frames; last_frame at slot T-1 when not in pseudo mode) are
/// re-clamped to their clean latents after every step. The pseudo slot lives
/// inside the forward pass and is never part of the returned clip.
LatentClip sample(const ForwardFn& forward, const mmdit::ModelConfig& cfg,
                  const mmdit::ConditionSet& cond, int steps, std::uint64_t seed);

}  // namespace avatar::flowmatch
