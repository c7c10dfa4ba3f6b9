#pragma once

#include "avatar/mmdit/types.hpp"

namespace avatar::mmdit {

/// Per-token rotary position on the three axes. Video tokens use
/// (frame, grid_y, grid_x); the pseudo frame sits at temporal (T-1)+gap.
/// Audio tokens share the temporal index of their frame; text tokens get a
/// dedicated ordinal stream on the temporal axis.
struct RopePosition {
  double t = 0.0, y = 0.0, x = 0.0;
};

std::vector<RopePosition> rope_positions(const ModelConfig& cfg, const TokenLayout& layout,
                                         bool pseudo_flag);

/// Rotation angles and pair-duplicated cos/sin for one head dimension.
/// Head-dim pairs are split across axes: x and y each take pairs/4 (integer),
/// the temporal axis takes the remainder.
struct RopePhases {
  Mat angles;  // N x (head_dim/2)
  Mat cos_m;   // N x head_dim, columns duplicated per pair
  Mat sin_m;
};

RopePhases compute_rope_phases(const std::vector<RopePosition>& positions, int head_dim,
                               double base = 10000.0);

}  // namespace avatar::mmdit
