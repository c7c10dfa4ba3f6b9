#include <Eigen/Dense>

#include "avatar/rng.hpp"
#include "avatar/toyworld.hpp"

namespace avatar::toyworld {

namespace {

// Fixed orthogonal mixing matrix for the 2x2x3 pixel patches.
const Eigen::Matrix<double, 12, 12>& mixing_matrix() {
  static const Eigen::Matrix<double, 12, 12> q = [] {
    Rng rng(0x70c0dec);
    Eigen::Matrix<double, 12, 12> a;
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 12; ++j) a(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::Matrix<double, 12, 12>> qr(a);
    Eigen::Matrix<double, 12, 12> out = qr.householderQ();
    return out;
  }();
  return q;
}

}  // namespace

LatentClip toy_encode(const Video& pixels) {
  if (pixels.height % 2 != 0 || pixels.width % 2 != 0 || pixels.channels != 3)
    throw std::invalid_argument("toy_encode: expected even RGB frames");
  const int lh = pixels.height / 2, lw = pixels.width / 2;
  LatentClip latents(pixels.frames, lh, lw, 12);
  const auto& q = mixing_matrix();
  Eigen::Matrix<double, 12, 1> patch, mixed;
  for (int t = 0; t < pixels.frames; ++t)
    for (int y = 0; y < lh; ++y)
      for (int x = 0; x < lw; ++x) {
        int k = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx)
            for (int c = 0; c < 3; ++c) patch(k++) = pixels.at(t, 2 * y + dy, 2 * x + dx, c);
        mixed = q * patch;
        for (int ch = 0; ch < 12; ++ch) latents.at(t, y, x, ch) = mixed(ch);
      }
  return latents;
}

Video toy_decode(const LatentClip& latents) {
  if (latents.channels != 12)
    throw std::invalid_argument("toy_decode: expected 12 latent channels");
  Video pixels(latents.frames, latents.height * 2, latents.width * 2);
  const auto& q = mixing_matrix();
  Eigen::Matrix<double, 12, 1> mixed, patch;
  for (int t = 0; t < latents.frames; ++t)
    for (int y = 0; y < latents.height; ++y)
      for (int x = 0; x < latents.width; ++x) {
        for (int ch = 0; ch < 12; ++ch) mixed(ch) = latents.at(t, y, x, ch);
        patch = q.transpose() * mixed;
        int k = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx)
            for (int c = 0; c < 3; ++c) pixels.at(t, 2 * y + dy, 2 * x + dx, c) = patch(k++);
      }
  return pixels;
}

}  // namespace avatar::toyworld
