// Microbenchmarks for the hot paths: plain forward, one Euler sampler step
// (forward + clamp), and a full training step with backprop and AdamW.
#include <benchmark/benchmark.h>

#include "avatar/flowmatch.hpp"
#include "avatar/mmdit/model.hpp"
#include "avatar/pipeline/train.hpp"
#include "avatar/rng.hpp"

using namespace avatar;

namespace {

mmdit::ModelConfig bench_config() {
  mmdit::ModelConfig cfg;  // the default toy-scale config
  cfg.latent_frames = 6;
  cfg.latent_height = 16;
  cfg.latent_width = 16;
  cfg.latent_channels = 4;
  cfg.patch = 2;
  cfg.hidden_dim = 64;
  cfg.depth = 2;
  cfg.heads = 4;
  return cfg;
}

mmdit::LatentClip noise_clip(const mmdit::ModelConfig& cfg, std::uint64_t seed) {
  mmdit::LatentClip clip(cfg.latent_frames, cfg.latent_height, cfg.latent_width,
                         cfg.latent_channels);
  Rng rng(seed);
  for (auto& v : clip.values) v = rng.normal();
  return clip;
}

mmdit::ConditionSet bench_condition(const mmdit::ModelConfig& cfg, std::uint64_t seed) {
  mmdit::ConditionSet cond;
  cond.text_tokens = {1, 2};
  Rng rng(seed);
  cond.audio_features = mmdit::Mat::NullaryExpr(cfg.latent_frames, cfg.audio_dim,
                                                [&] { return rng.normal(); });
  return cond;
}

void BM_Forward(benchmark::State& state) {
  auto cfg = bench_config();
  auto model = mmdit::Model::init(cfg, 1);
  auto xt = noise_clip(cfg, 2);
  auto cond = bench_condition(cfg, 3);
  for (auto _ : state) {
    auto v = model.forward(xt, 0.5, cond);
    benchmark::DoNotOptimize(v.values.data());
  }
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMillisecond);

void BM_SamplerStep(benchmark::State& state) {
  auto cfg = bench_config();
  auto model = mmdit::Model::init(cfg, 1);
  auto cond = bench_condition(cfg, 3);
  flowmatch::ForwardFn fwd = [&](const mmdit::LatentClip& x, double t,
                                 const mmdit::ConditionSet& c) { return model.forward(x, t, c); };
  const int steps = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto out = flowmatch::sample(fwd, cfg, cond, steps, 4);
    benchmark::DoNotOptimize(out.values.data());
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_SamplerStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  auto cfg = bench_config();
  auto model = mmdit::Model::init(cfg, 1);
  pipeline::TrainConfig tc;
  tc.batch_size = static_cast<int>(state.range(0));
  tc.steps = 1 << 20;
  pipeline::AdamW opt(tc.learning_rate);
  pipeline::ExampleStream stream = [&](std::int64_t index) {
    pipeline::TrainExample ex;
    ex.x0 = noise_clip(cfg, 100 + static_cast<std::uint64_t>(index % 16));
    ex.text_tokens = {1, 2};
    Rng rng(200 + static_cast<std::uint64_t>(index % 16));
    ex.audio_features = mmdit::Mat::NullaryExpr(cfg.latent_frames, cfg.audio_dim,
                                                [&] { return rng.normal(); });
    return ex;
  };
  int step = 0;
  for (auto _ : state) {
    auto m = pipeline::train_step(model, stream, tc, opt, step++, 42);
    benchmark::DoNotOptimize(m.loss);
  }
}
BENCHMARK(BM_TrainStep)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
