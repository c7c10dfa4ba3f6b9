#include "avatar/mmdit/attention_mask.hpp"

#include <stdexcept>

namespace avatar::mmdit {

namespace {

// Whether the patch (gy, gx) overlaps the speaker mask at frame t.
bool patch_overlaps(const ModelConfig& cfg, const SpeakerMask& sm, int t, int gy, int gx) {
  if (t < 0 || t >= cfg.latent_frames) return false;  // pseudo frame has no mask slice
  const int h = cfg.latent_height, w = cfg.latent_width, p = cfg.patch;
  for (int y = gy * p; y < (gy + 1) * p; ++y)
    for (int x = gx * p; x < (gx + 1) * p; ++x)
      if (sm.voxels[(static_cast<std::size_t>(t) * h + y) * w + x]) return true;
  return false;
}

}  // namespace

MaskMat build_attention_mask(const ModelConfig& cfg, const TokenLayout& layout,
                             const std::vector<SpeakerMask>& speaker_masks) {
  const std::size_t voxel_count =
      static_cast<std::size_t>(cfg.latent_frames) * cfg.latent_height * cfg.latent_width;
  for (const auto& sm : speaker_masks)
    if (sm.voxels.size() != voxel_count)
      throw std::invalid_argument("build_attention_mask: speaker mask voxel count mismatch");
  for (std::size_t a = 0; a < speaker_masks.size(); ++a)
    for (std::size_t b = a + 1; b < speaker_masks.size(); ++b)
      for (std::size_t v = 0; v < voxel_count; ++v)
        if (speaker_masks[a].voxels[v] && speaker_masks[b].voxels[v])
          throw std::invalid_argument("build_attention_mask: speaker masks overlap");

  const int n = layout.total();
  MaskMat allow(n, n);

  if (speaker_masks.empty()) {
    allow.setOnes();
    return allow;
  }

  auto mask_of = [&](int speaker) -> const SpeakerMask* {
    for (const auto& sm : speaker_masks)
      if (sm.speaker_id == speaker) return &sm;
    throw std::invalid_argument("build_attention_mask: audio token for unknown speaker " +
                                std::to_string(speaker));
  };

  // Precomputed per-audio-speaker overlap for every video token.
  for (int i = 0; i < n; ++i) {
    const auto& ti = layout.tokens[i];
    for (int j = 0; j < n; ++j) {
      const auto& tj = layout.tokens[j];
      std::uint8_t ok = 0;
      const bool i_av = ti.modality != Modality::kAudio;
      const bool j_av = tj.modality != Modality::kAudio;
      if (i_av && j_av) {
        ok = 1;  // video/text block is fully connected
      } else if (!i_av && !j_av) {
        ok = ti.speaker == tj.speaker ? 1 : 0;
      } else {
        const auto& vid = i_av ? ti : tj;
        const auto& aud = i_av ? tj : ti;
        if (vid.modality == Modality::kVideo) {
          // permission follows the speaker's spatial region at the audio frame
          ok = patch_overlaps(cfg, *mask_of(aud.speaker), aud.temporal, vid.spatial_y, vid.spatial_x)
                   ? 1
                   : 0;
        } else {
          ok = 0;  // text<->audio injection is not permitted under speaker masks
        }
      }
      allow(i, j) = ok;
    }
  }
  return allow;
}

}  // namespace avatar::mmdit
