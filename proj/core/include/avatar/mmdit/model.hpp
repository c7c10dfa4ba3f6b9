#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "avatar/mmdit/attention_mask.hpp"
#include "avatar/mmdit/rope.hpp"
#include "avatar/mmdit/tape.hpp"
#include "avatar/mmdit/types.hpp"

namespace avatar::mmdit {

/// Named parameter arrays. Names are branch-scoped: "video.*", "text.*",
/// "audio.*", "shared.*" (see docs/checkpoint_format.md for the full list).
struct ParamStore {
  std::map<std::string, Mat> arrays;

  std::int64_t total_count() const;
  std::int64_t branch_count(std::string_view prefix) const;
};

/// Expected parameter shapes for a config, in name order.
std::vector<std::pair<std::string, std::pair<int, int>>> param_shapes(const ModelConfig& cfg);

/// The three-branch multimodal diffusion transformer. Forward passes are
/// pure given parameters; training mutates params through the tape grads.
class Model {
 public:
  explicit Model(ModelConfig cfg);

  /// Random initialization (the stand-in for "pre-trained" weights).
  static Model init(const ModelConfig& cfg, std::uint64_t seed, double weight_std = 0.02);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Predicted velocity over the T generated frames. Condition frames in
  /// `noised` must already hold clean latents with cond_mask set.
  LatentClip forward(const LatentClip& noised, double t, const ConditionSet& cond) const;

  struct Taped {
    diff::Var velocity_tokens;  // (T*tokens_per_frame) x patch_dim
    TokenLayout layout;
    std::vector<std::pair<std::string, diff::Var>> param_vars;  // name order
  };
  /// Differentiable forward; gradients w.r.t. every parameter are available
  /// after tape.backward() through Taped::param_vars.
  Taped forward_taped(diff::Tape& tape, const LatentClip& noised, double t,
                      const ConditionSet& cond) const;

  /// One fused block at value level (diagnostic/test surface). `allow` spans
  /// the full layout. In cross-attention mode audio tokens are keys/values
  /// only and are returned unchanged.
  struct BlockTokens {
    Mat video, text, audio;
  };
  BlockTokens run_block(int block, const BlockTokens& tokens, double t, const TokenLayout& layout,
                        const MaskMat& allow) const;

  /// Video patch embedding of a clip: rows (frames * tokens_per_frame),
  /// cols patch_dim. The inverse is unpatchify.
  Mat patchify(const LatentClip& clip) const;
  LatentClip unpatchify(const Mat& tokens, int frames) const;

  /// Embeds a clip into video tokens plus its layout (no text/audio).
  std::pair<Mat, TokenLayout> embed_video(const LatentClip& clip) const;

  /// Audio embedding: one token per latent frame; reasoning latents, when
  /// present, are concatenated feature-wise before projection.
  Mat embed_audio(const Mat& features, const std::optional<Mat>& reasoning) const;

  std::int64_t param_count(std::string_view branch_prefix) const {
    return params_.branch_count(branch_prefix);
  }

  struct Ctx;  // per-forward taped state

 private:
  diff::Var block_taped(Ctx& ctx, int block) const;

  ModelConfig cfg_;
  ParamStore params_;
};

}  // namespace avatar::mmdit
