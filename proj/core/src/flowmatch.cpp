#include "avatar/flowmatch.hpp"

#include <cmath>

#include "avatar/rng.hpp"

namespace avatar::flowmatch {

FlowBatch make_flow_batch(const Mat& x0, std::uint64_t seed, std::optional<double> t_fixed) {
  if (!x0.allFinite()) throw std::invalid_argument("make_flow_batch: non-finite data latents");
  FlowBatch b;
  b.x0 = x0;
  Rng rng(mix_seed(seed, 0xf10f));
  b.t = t_fixed.value_or(rng.uniform());
  b.x1 = Mat::Zero(x0.rows(), x0.cols());
  for (Eigen::Index i = 0; i < b.x1.rows(); ++i)
    for (Eigen::Index j = 0; j < b.x1.cols(); ++j) b.x1(i, j) = rng.normal();
  b.xt = (1.0 - b.t) * b.x0 + b.t * b.x1;
  b.v_target = b.x1 - b.x0;
  return b;
}

namespace {

std::int64_t off_condition_count(Eigen::Index rows, Eigen::Index cols,
                                 const std::vector<std::uint8_t>& cond_mask) {
  std::int64_t frames_off = 0;
  for (Eigen::Index t = 0; t < rows; ++t)
    if (t >= static_cast<Eigen::Index>(cond_mask.size()) || !cond_mask[t]) ++frames_off;
  if (frames_off == 0)
    throw std::invalid_argument("fm_loss: every frame is a condition frame (degenerate loss)");
  return frames_off * cols;
}

}  // namespace

double fm_loss(const Mat& pred_v, const Mat& v_target, const std::vector<std::uint8_t>& cond_mask) {
  if (pred_v.rows() != v_target.rows() || pred_v.cols() != v_target.cols())
    throw std::invalid_argument("fm_loss: shape mismatch");
  const std::int64_t n = off_condition_count(pred_v.rows(), pred_v.cols(), cond_mask);
  double s = 0.0;
  for (Eigen::Index t = 0; t < pred_v.rows(); ++t) {
    if (t < static_cast<Eigen::Index>(cond_mask.size()) && cond_mask[t]) continue;
    s += (pred_v.row(t) - v_target.row(t)).squaredNorm();
  }
  return s / static_cast<double>(n);
}

diff::Var fm_loss_taped(diff::Tape& tape, diff::Var pred_tokens, const Mat& target_tokens,
                        const std::vector<std::uint8_t>& cond_mask, int tokens_per_frame) {
  const Eigen::Index rows = target_tokens.rows();
  const Eigen::Index cols = target_tokens.cols();
  if (rows % tokens_per_frame != 0)
    throw std::invalid_argument("fm_loss_taped: rows not a multiple of tokens_per_frame");
  const Eigen::Index frames = rows / tokens_per_frame;
  const std::int64_t n = off_condition_count(frames, tokens_per_frame * cols, cond_mask);
  Mat mask = Mat::Zero(rows, cols);
  for (Eigen::Index t = 0; t < frames; ++t) {
    if (t < static_cast<Eigen::Index>(cond_mask.size()) && cond_mask[t]) continue;
    mask.middleRows(t * tokens_per_frame, tokens_per_frame).setOnes();
  }
  diff::Var sq = tape.masked_sq_diff_sum(pred_tokens, target_tokens, mask);
  return tape.scale(sq, 1.0 / static_cast<double>(n));
}

LatentClip sample(const ForwardFn& forward, const mmdit::ModelConfig& cfg,
                  const mmdit::ConditionSet& cond, int steps, std::uint64_t seed) {
  if (steps < 1) throw std::invalid_argument("sample: steps must be >= 1");
  const int T = cfg.latent_frames;

  LatentClip x(T, cfg.latent_height, cfg.latent_width, cfg.latent_channels);
  Rng rng(mix_seed(seed, 0x5a3));
  for (auto& v : x.values) v = rng.normal();

  // condition-frame clamping targets
  const int k_first = cond.first_frames ? static_cast<int>(cond.first_frames->rows()) : 0;
  const bool clamp_last = cond.last_frame.has_value() && !cond.pseudo_flag;
  auto clamp = [&](LatentClip& clip) {
    for (int i = 0; i < k_first; ++i) {
      clip.set_frame(i, cond.first_frames->row(i));
      clip.cond_mask[i] = 1;
    }
    if (clamp_last) {
      clip.set_frame(T - 1, *cond.last_frame);
      clip.cond_mask[T - 1] = 1;
    }
  };
  clamp(x);

  const double dt = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = 1.0 - static_cast<double>(k) * dt;
    LatentClip v = forward(x, t, cond);
    for (std::size_t i = 0; i < x.values.size(); ++i) x.values[i] -= dt * v.values[i];
    if (!x.all_finite()) throw DivergedError(k);
    clamp(x);
  }
  return x;
}

}  // namespace avatar::flowmatch
