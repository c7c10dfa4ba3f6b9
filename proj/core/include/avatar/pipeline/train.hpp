#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "avatar/mmdit/model.hpp"
#include "avatar/pipeline/checkpoint.hpp"

namespace avatar::pipeline {

struct TrainConfig {
  double learning_rate = 5e-5;
  int batch_size = 8;
  double grad_clip = 1.0;
  int steps = 0;
  double p_first = 0.5;       // clean first frame(s) per sample
  double p_last = 0.5;        // clean last frame / pseudo frame per sample
  double p_audio_drop = 0.3;  // forced to 1 for low-sync samples
  double p_text_drop = 0.1;
  int first_frames_k = 1;     // clean leading frames under p_first
  std::string stage = "main";  // warmup | main | finetune

  void validate() const;  // throws std::invalid_argument
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& doc);

/// One training example in latent space.
struct TrainExample {
  mmdit::LatentClip x0;             // clean latents, no condition flags
  std::vector<int> text_tokens;
  mmdit::Mat audio_features;        // T x A
  bool sync_flag = true;            // false forces audio dropout
};

/// Ordered, seeded example source; index-addressable so concurrent producers
/// stay deterministic.
using ExampleStream = std::function<TrainExample(std::int64_t index)>;

struct StepMetrics {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;  // post-clip global norm
  double lr = 0.0;
};

struct NanLossError : std::runtime_error {
  int step;
  explicit NanLossError(int s)
      : std::runtime_error("training loss diverged (NaN) at step " + std::to_string(s)), step(s) {}
};

struct TrainResult {
  std::vector<StepMetrics> metrics;
};

/// CSV columns: step,loss,grad_norm,lr
void write_metrics_csv(const std::vector<StepMetrics>& metrics, const std::filesystem::path& path);

/// Decoupled-weight-decay Adam over a ParamStore (decay 0 by default: the
/// toy models are small enough that regularization only slows the tests).
class AdamW {
 public:
  AdamW(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
        double weight_decay = 0.0);

  void step(mmdit::ParamStore& params, const std::map<std::string, mmdit::Mat>& grads);
  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  int t_ = 0;
  std::map<std::string, mmdit::Mat> m_, v_;
};

/// One gradient step shared by both stages. Draws per-sample conditioning,
/// averages gradients over the batch, clips the global norm, and applies
/// AdamW. Returns the recorded metrics row.
StepMetrics train_step(mmdit::Model& model, const ExampleStream& stream, const TrainConfig& cfg,
                       AdamW& opt, int step, std::uint64_t seed);

/// Stage 1: joint warm-up of all three branches from a fresh init.
TrainResult train_stage1_warmup(mmdit::Model& model, const ExampleStream& stream,
                                const TrainConfig& cfg, std::uint64_t seed);

/// Stage 2: fine-tune after assemble_stage2. Conditioning mode follows
/// model.config().conditioning.
TrainResult train_main(mmdit::Model& model, const ExampleStream& stream, const TrainConfig& cfg,
                       std::uint64_t seed);

/// Word-level token ids for motion label text ("walk left" -> 2 tokens).
std::vector<int> tokenize_text(const std::string& text, int vocab);

}  // namespace avatar::pipeline
