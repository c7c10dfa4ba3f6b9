#include "avatar/mmdit/rope.hpp"

#include <cmath>
#include <stdexcept>

namespace avatar::mmdit {

std::vector<RopePosition> rope_positions(const ModelConfig& cfg, const TokenLayout& layout,
                                         bool pseudo_flag) {
  if (pseudo_flag) {
    bool found = false;
    for (const auto& tok : layout.tokens) found = found || tok.pseudo;
    if (!found)
      throw std::invalid_argument("rope_positions: pseudo_flag set but no pseudo frame in layout");
  }
  std::vector<RopePosition> pos;
  pos.reserve(layout.tokens.size());
  const double pseudo_t = static_cast<double>(cfg.latent_frames - 1 + cfg.pseudo_gap);
  for (const auto& tok : layout.tokens) {
    switch (tok.modality) {
      case Modality::kVideo:
        pos.push_back({tok.pseudo ? pseudo_t : static_cast<double>(tok.temporal),
                       static_cast<double>(tok.spatial_y), static_cast<double>(tok.spatial_x)});
        break;
      case Modality::kText:
        // dedicated 1-D stream on the temporal axis
        pos.push_back({static_cast<double>(tok.temporal), 0.0, 0.0});
        break;
      case Modality::kAudio:
        pos.push_back({static_cast<double>(tok.temporal), 0.0, 0.0});
        break;
    }
  }
  return pos;
}

RopePhases compute_rope_phases(const std::vector<RopePosition>& positions, int head_dim,
                               double base) {
  if (head_dim % 2 != 0) throw std::invalid_argument("compute_rope_phases: head_dim must be even");
  const int pairs = head_dim / 2;
  const int px = pairs / 4;
  const int py = pairs / 4;
  const int pt = pairs - px - py;
  const auto n = static_cast<Eigen::Index>(positions.size());

  RopePhases out;
  out.angles = Mat::Zero(n, pairs);
  out.cos_m = Mat::Zero(n, head_dim);
  out.sin_m = Mat::Zero(n, head_dim);

  auto axis_angle = [&](double p, int j, int m) { return p * std::pow(base, -static_cast<double>(j) / m); };

  for (Eigen::Index i = 0; i < n; ++i) {
    int pair = 0;
    for (int j = 0; j < pt; ++j) out.angles(i, pair++) = axis_angle(positions[i].t, j, pt);
    for (int j = 0; j < py; ++j) out.angles(i, pair++) = axis_angle(positions[i].y, j, py);
    for (int j = 0; j < px; ++j) out.angles(i, pair++) = axis_angle(positions[i].x, j, px);
    for (int k = 0; k < pairs; ++k) {
      const double c = std::cos(out.angles(i, k));
      const double s = std::sin(out.angles(i, k));
      out.cos_m(i, 2 * k) = c;
      out.cos_m(i, 2 * k + 1) = c;
      out.sin_m(i, 2 * k) = s;
      out.sin_m(i, 2 * k + 1) = s;
    }
  }
  return out;
}

}  // namespace avatar::mmdit
