#include <cmath>

#include <doctest.h>

#include "avatar/flowmatch.hpp"
#include "avatar/rng.hpp"

using namespace avatar;
using flowmatch::FlowBatch;
using mmdit::LatentClip;
using mmdit::Mat;

namespace {

Mat random_mat(std::uint64_t seed, int r, int c) {
  Rng rng(seed);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

mmdit::ModelConfig small_cfg() {
  mmdit::ModelConfig cfg;
  cfg.latent_frames = 4;
  cfg.latent_height = 4;
  cfg.latent_width = 4;
  cfg.latent_channels = 2;
  return cfg;
}

}  // namespace

TEST_CASE("flow batch endpoints and midpoint follow the straight path") {
  Mat x0 = random_mat(1, 3, 5);
  auto at0 = flowmatch::make_flow_batch(x0, 9, 0.0);
  CHECK(at0.xt == at0.x0);
  CHECK(at0.x0 == x0);

  auto at1 = flowmatch::make_flow_batch(x0, 9, 1.0);
  CHECK(at1.xt == at1.x1);  // t=1 is pure noise

  auto mid = flowmatch::make_flow_batch(x0, 9, 0.5);
  CHECK((mid.xt - 0.5 * (mid.x0 + mid.x1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mid.v_target == mid.x1 - mid.x0);

  auto again = flowmatch::make_flow_batch(x0, 9, 0.5);
  CHECK(mid.x1 == again.x1);  // deterministic per seed
  CHECK(flowmatch::make_flow_batch(x0, 10, 0.5).x1 != mid.x1);

  Mat bad = x0;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(flowmatch::make_flow_batch(bad, 9), std::invalid_argument);
}

TEST_CASE("fm_loss is the mean squared error over non-condition frames") {
  Mat pred(3, 2), target(3, 2);
  pred << 1, 2, 3, 4, 5, 6;
  target << 0, 2, 3, 4, 5, 2;
  // no condition frames: ((1)^2 + (4)^2) / 6
  CHECK(flowmatch::fm_loss(pred, target, {0, 0, 0}) == doctest::Approx(17.0 / 6.0));
  // frame 2 conditioned: 1 / 4
  CHECK(flowmatch::fm_loss(pred, target, {0, 0, 1}) == doctest::Approx(0.25));
  // short mask treats missing frames as generated
  CHECK(flowmatch::fm_loss(pred, target, {1}) == doctest::Approx(16.0 / 4.0));
  CHECK_THROWS_AS(flowmatch::fm_loss(pred, target, {1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(flowmatch::fm_loss(pred, Mat::Zero(2, 2), {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("fm_loss_taped matches fm_loss and back-propagates") {
  const int frames = 3, tpf = 2, cols = 4;
  Mat pred = random_mat(3, frames * tpf, cols);
  Mat target = random_mat(4, frames * tpf, cols);
  std::vector<std::uint8_t> cond = {1, 0, 0};

  diff::Tape tape;
  diff::Var p = tape.leaf(pred);
  diff::Var loss = flowmatch::fm_loss_taped(tape, p, target, cond, tpf);

  // frame-rows view for the value-level oracle
  Mat pf(frames, tpf * cols), tf(frames, tpf * cols);
  for (int t = 0; t < frames; ++t)
    for (int r = 0; r < tpf; ++r) {
      pf.block(t, r * cols, 1, cols) = pred.row(t * tpf + r);
      tf.block(t, r * cols, 1, cols) = target.row(t * tpf + r);
    }
  CHECK(tape.val(loss)(0, 0) == doctest::Approx(flowmatch::fm_loss(pf, tf, cond)).epsilon(1e-12));

  tape.backward(loss);
  const Mat g = tape.grad(p);
  CHECK(g.topRows(tpf).cwiseAbs().maxCoeff() == 0.0);  // condition frame excluded
  const double n = 2.0 * tpf * cols;                   // off-condition voxel count
  CHECK(g(2, 0) == doctest::Approx(2.0 * (pred(2, 0) - target(2, 0)) / n));

  CHECK_THROWS_AS(flowmatch::fm_loss_taped(tape, p, target, {1, 1, 1}, tpf),
                  std::invalid_argument);
  CHECK_THROWS_AS(flowmatch::fm_loss_taped(tape, p, target, cond, 5), std::invalid_argument);
}

TEST_CASE("Euler sampling is exact for the analytic straight-path field") {
  auto cfg = small_cfg();
  LatentClip x0(cfg.latent_frames, cfg.latent_height, cfg.latent_width, cfg.latent_channels);
  Rng rng(42);
  for (auto& v : x0.values) v = rng.normal();

  // v(x, t) = (x - x0) / t is the rectified-flow field whose Euler steps
  // telescope exactly onto x0
  flowmatch::ForwardFn oracle = [&](const LatentClip& x, double t, const mmdit::ConditionSet&) {
    LatentClip v = x;
    for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] = (x.values[i] - x0.values[i]) / t;
    return v;
  };

  for (int steps : {1, 4, 16}) {
    auto out = flowmatch::sample(oracle, cfg, {}, steps, 7);
    double worst = 0;
    for (std::size_t i = 0; i < out.values.size(); ++i)
      worst = std::max(worst, std::abs(out.values[i] - x0.values[i]));
    CHECK(worst <= 1e-9);
  }
  CHECK_THROWS_AS(flowmatch::sample(oracle, cfg, {}, 0, 7), std::invalid_argument);
}

TEST_CASE("sampling is deterministic per seed and clamps condition frames") {
  auto cfg = small_cfg();
  flowmatch::ForwardFn zero_field = [&](const LatentClip& x, double, const mmdit::ConditionSet&) {
    LatentClip v = x;
    for (auto& val : v.values) val = 0.0;
    return v;
  };

  mmdit::ConditionSet cond;
  Mat first = random_mat(5, 1, cfg.frame_dim());
  cond.first_frames = first;
  cond.last_frame = random_mat(6, 1, cfg.frame_dim()).row(0);

  auto a = flowmatch::sample(zero_field, cfg, cond, 4, 11);
  auto b = flowmatch::sample(zero_field, cfg, cond, 4, 11);
  CHECK(a.values == b.values);
  auto c = flowmatch::sample(zero_field, cfg, cond, 4, 12);
  CHECK(a.values != c.values);

  CHECK(a.frame(0) == first.row(0));
  CHECK(a.frame(cfg.latent_frames - 1) == *cond.last_frame);
  CHECK(a.cond_mask[0] == 1);
  CHECK(a.cond_mask[cfg.latent_frames - 1] == 1);
  CHECK(a.cond_mask[1] == 0);
}

TEST_CASE("pseudo mode keeps the reference out of the returned clip") {
  auto cfg = small_cfg();
  Mat ref = random_mat(8, 1, cfg.frame_dim());

  int calls = 0;
  flowmatch::ForwardFn probe = [&](const LatentClip& x, double, const mmdit::ConditionSet& c) {
    ++calls;
    CHECK(c.pseudo_flag);
    CHECK(x.frames == cfg.latent_frames);  // pseudo slot never widens the clip
    LatentClip v = x;
    for (auto& val : v.values) val = 0.0;
    return v;
  };

  mmdit::ConditionSet cond;
  cond.pseudo_flag = true;
  cond.last_frame = ref.row(0);
  auto out = flowmatch::sample(probe, cfg, cond, 3, 5);
  CHECK(calls == 3);
  CHECK(out.frames == cfg.latent_frames);
  // slot T-1 stays a generated frame: it is not clamped to the reference
  CHECK(out.frame(cfg.latent_frames - 1) != ref.row(0));
  for (auto flag : out.cond_mask) CHECK(flag == 0);
}

TEST_CASE("sampling reports divergence with the failing step") {
  auto cfg = small_cfg();
  flowmatch::ForwardFn blow_up = [](const LatentClip& x, double, const mmdit::ConditionSet&) {
    LatentClip v = x;
    for (auto& val : v.values) val = std::numeric_limits<double>::infinity();
    return v;
  };
  try {
    flowmatch::sample(blow_up, cfg, {}, 4, 1);
    FAIL("expected DivergedError");
  } catch (const flowmatch::DivergedError& e) {
    CHECK(e.step == 0);
  }
}
