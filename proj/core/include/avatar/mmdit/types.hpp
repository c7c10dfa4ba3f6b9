#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace avatar::mmdit {

using Mat = Eigen::MatrixXd;

enum class ConditioningMode { kPseudoLastFrame, kRefImage, kNone };
enum class AudioInjection { kSymmetricBranch, kCrossAttention };

std::string to_string(ConditioningMode m);
std::string to_string(AudioInjection m);
ConditioningMode conditioning_mode_from_string(const std::string& s);
AudioInjection audio_injection_from_string(const std::string& s);

struct ModelConfig {
  int latent_frames = 6;    // T
  int latent_height = 16;   // H
  int latent_width = 16;    // W
  int latent_channels = 4;  // C
  int patch = 2;            // spatial patch p
  int hidden_dim = 64;      // d
  int depth = 2;            // L
  int heads = 4;
  int audio_dim = 4;      // A
  int text_vocab = 16;
  int max_text_len = 8;
  int pseudo_gap = 4;     // temporal offset of the pseudo frame
  int reasoning_dim = 0;  // 0 disables reasoning-latent concatenation
  ConditioningMode conditioning = ConditioningMode::kPseudoLastFrame;
  AudioInjection audio_injection = AudioInjection::kSymmetricBranch;

  void validate() const;  // throws std::invalid_argument on inconsistent dims

  int grid_h() const { return latent_height / patch; }
  int grid_w() const { return latent_width / patch; }
  int tokens_per_frame() const { return grid_h() * grid_w(); }
  int video_tokens() const { return latent_frames * tokens_per_frame(); }
  int patch_dim() const { return patch * patch * latent_channels; }
  int frame_dim() const { return latent_height * latent_width * latent_channels; }
  int head_dim() const { return hidden_dim / heads; }

  bool operator==(const ModelConfig&) const = default;
};

/// A latent video tensor (T x H x W x C) plus per-frame condition flags.
struct LatentClip {
  int frames = 0, height = 0, width = 0, channels = 0;
  std::vector<double> values;         // row-major (t, y, x, c)
  std::vector<std::uint8_t> cond_mask;  // length T, marks clean condition frames

  LatentClip() = default;
  LatentClip(int t, int h, int w, int c)
      : frames(t), height(h), width(w), channels(c),
        values(static_cast<std::size_t>(t) * h * w * c, 0.0), cond_mask(t, 0) {}

  double& at(int t, int y, int x, int c) {
    return values[((static_cast<std::size_t>(t) * height + y) * width + x) * channels + c];
  }
  double at(int t, int y, int x, int c) const {
    return values[((static_cast<std::size_t>(t) * height + y) * width + x) * channels + c];
  }

  std::size_t frame_size() const { return static_cast<std::size_t>(height) * width * channels; }

  /// One frame as a row vector of length H*W*C.
  Eigen::RowVectorXd frame(int t) const {
    return Eigen::Map<const Eigen::RowVectorXd>(values.data() + t * frame_size(),
                                                static_cast<Eigen::Index>(frame_size()));
  }
  void set_frame(int t, const Eigen::RowVectorXd& v) {
    Eigen::Map<Eigen::RowVectorXd>(values.data() + t * frame_size(),
                                   static_cast<Eigen::Index>(frame_size())) = v;
  }

  /// Frames as a T x (H*W*C) matrix.
  Mat as_matrix() const;
  static LatentClip from_matrix(const Mat& m, int h, int w, int c);

  bool all_finite() const;
};

struct SpeakerMask {
  int speaker_id = 0;
  std::vector<std::uint8_t> voxels;  // T*H*W, row-major (t, y, x)
  Mat audio_features;                // T x A
};

/// All conditioning for one generation pass.
struct ConditionSet {
  std::vector<int> text_tokens;
  std::vector<int> text_positions;  // optional; default 0..n-1 ordinals
  Mat audio_features;                    // T x A (unused when speaker_masks non-empty)
  std::optional<Mat> reasoning_latents;  // T x r
  std::optional<Mat> first_frames;       // k x (H*W*C) clean leading frames
  std::optional<Eigen::RowVectorXd> last_frame;  // clean frame, pseudo slot or slot T-1
  bool pseudo_flag = false;
  /// Audio dropout: features are zeroed and audio tokens are barred from the
  /// other modalities' attention rows, so the audio branch cannot reach the
  /// loss (its parameter gradients are exactly zero).
  bool audio_dropped = false;
  std::vector<SpeakerMask> speaker_masks;
};

enum class Modality { kVideo, kText, kAudio };

struct TokenInfo {
  Modality modality = Modality::kVideo;
  int temporal = 0;           // latent frame index (text: ordinal in its own stream)
  int spatial_y = 0, spatial_x = 0;  // patch-grid coordinates (video only)
  int speaker = -1;           // audio only
  bool cond = false;          // token belongs to a clean condition frame
  bool pseudo = false;        // token belongs to the pseudo frame slot
};

struct TokenLayout {
  std::vector<TokenInfo> tokens;
  int n_video = 0;  // includes pseudo-frame tokens
  int n_text = 0;
  int n_audio = 0;  // total across speakers

  int total() const { return n_video + n_text + n_audio; }
};

/// Deterministic layout: video tokens (generated frames then pseudo frame),
/// then text, then audio grouped by speaker.
TokenLayout build_token_layout(const ModelConfig& cfg, int n_text_tokens,
                               const std::vector<std::uint8_t>& frame_cond_mask, bool pseudo_flag,
                               const std::vector<int>& speaker_ids, bool include_audio = true);

}  // namespace avatar::mmdit
