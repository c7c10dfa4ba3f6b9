#pragma once

#include "avatar/mmdit/tape.hpp"
#include "avatar/mmdit/types.hpp"

namespace avatar::mmdit {

using diff::MaskMat;

/// Attend-permission matrix over the full token layout.
///
/// video<->video, video<->text, text<->text and audio(i)<->audio(i) are always
/// allowed. A video token and an audio token of speaker i may attend each
/// other iff the token's patch overlaps speaker i's mask at that frame.
/// audio(i)<->audio(j) for i != j is disallowed. With no speaker masks all
/// pairs are allowed.
///
/// Throws std::invalid_argument when speaker masks overlap.
MaskMat build_attention_mask(const ModelConfig& cfg, const TokenLayout& layout,
                             const std::vector<SpeakerMask>& speaker_masks);

}  // namespace avatar::mmdit
