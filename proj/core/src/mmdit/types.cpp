#include "avatar/mmdit/types.hpp"

#include <cmath>

namespace avatar::mmdit {

std::string to_string(ConditioningMode m) {
  switch (m) {
    case ConditioningMode::kPseudoLastFrame: return "pseudo_last_frame";
    case ConditioningMode::kRefImage: return "ref_image";
    case ConditioningMode::kNone: return "none";
  }
  return "?";
}

std::string to_string(AudioInjection m) {
  return m == AudioInjection::kSymmetricBranch ? "symmetric_branch" : "cross_attention";
}

ConditioningMode conditioning_mode_from_string(const std::string& s) {
  if (s == "pseudo_last_frame") return ConditioningMode::kPseudoLastFrame;
  if (s == "ref_image") return ConditioningMode::kRefImage;
  if (s == "none") return ConditioningMode::kNone;
  throw std::invalid_argument("unknown conditioning mode: " + s);
}

AudioInjection audio_injection_from_string(const std::string& s) {
  if (s == "symmetric_branch") return AudioInjection::kSymmetricBranch;
  if (s == "cross_attention") return AudioInjection::kCrossAttention;
  throw std::invalid_argument("unknown audio injection mode: " + s);
}

void ModelConfig::validate() const {
  if (latent_frames <= 0 || latent_height <= 0 || latent_width <= 0 || latent_channels <= 0)
    throw std::invalid_argument("ModelConfig: latent dims must be positive");
  if (patch <= 0 || latent_height % patch != 0 || latent_width % patch != 0)
    throw std::invalid_argument("ModelConfig: patch must divide height and width");
  if (hidden_dim <= 0 || heads <= 0 || hidden_dim % heads != 0)
    throw std::invalid_argument("ModelConfig: hidden_dim must be divisible by heads");
  if (head_dim() % 2 != 0)
    throw std::invalid_argument("ModelConfig: head_dim must be even for rotary positions");
  if (depth <= 0) throw std::invalid_argument("ModelConfig: depth must be positive");
  if (audio_dim <= 0) throw std::invalid_argument("ModelConfig: audio_dim must be positive");
  if (text_vocab <= 0) throw std::invalid_argument("ModelConfig: text_vocab must be positive");
  if (pseudo_gap < 1) throw std::invalid_argument("ModelConfig: pseudo_gap must be >= 1");
  if (reasoning_dim < 0) throw std::invalid_argument("ModelConfig: reasoning_dim must be >= 0");
}

Mat LatentClip::as_matrix() const {
  Mat m(frames, static_cast<Eigen::Index>(frame_size()));
  for (int t = 0; t < frames; ++t) m.row(t) = frame(t);
  return m;
}

LatentClip LatentClip::from_matrix(const Mat& m, int h, int w, int c) {
  if (m.cols() != static_cast<Eigen::Index>(h) * w * c)
    throw std::invalid_argument("LatentClip::from_matrix: column count mismatch");
  LatentClip clip(static_cast<int>(m.rows()), h, w, c);
  for (int t = 0; t < clip.frames; ++t) clip.set_frame(t, m.row(t));
  return clip;
}

bool LatentClip::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

TokenLayout build_token_layout(const ModelConfig& cfg, int n_text_tokens,
                               const std::vector<std::uint8_t>& frame_cond_mask, bool pseudo_flag,
                               const std::vector<int>& speaker_ids, bool include_audio) {
  TokenLayout layout;
  const int gh = cfg.grid_h(), gw = cfg.grid_w();
  const int n_frames = cfg.latent_frames + (pseudo_flag ? 1 : 0);
  for (int t = 0; t < n_frames; ++t) {
    const bool pseudo = pseudo_flag && t == cfg.latent_frames;
    const bool cond = pseudo || (t < static_cast<int>(frame_cond_mask.size()) && frame_cond_mask[t]);
    for (int y = 0; y < gh; ++y)
      for (int x = 0; x < gw; ++x)
        layout.tokens.push_back({Modality::kVideo, t, y, x, -1, cond, pseudo});
  }
  layout.n_video = n_frames * gh * gw;
  for (int i = 0; i < n_text_tokens; ++i)
    layout.tokens.push_back({Modality::kText, i, 0, 0, -1, false, false});
  layout.n_text = n_text_tokens;
  if (!include_audio) {
    layout.n_audio = 0;
  } else if (speaker_ids.empty()) {
    for (int t = 0; t < cfg.latent_frames; ++t)
      layout.tokens.push_back({Modality::kAudio, t, 0, 0, -1, false, false});
    layout.n_audio = cfg.latent_frames;
  } else {
    for (int sp : speaker_ids)
      for (int t = 0; t < cfg.latent_frames; ++t)
        layout.tokens.push_back({Modality::kAudio, t, 0, 0, sp, false, false});
    layout.n_audio = cfg.latent_frames * static_cast<int>(speaker_ids.size());
  }
  return layout;
}

}  // namespace avatar::mmdit
