#include "avatar/pipeline/train.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "avatar/flowmatch.hpp"
#include "avatar/rng.hpp"

namespace avatar::pipeline {

using mmdit::LatentClip;
using mmdit::Mat;
using nlohmann::json;

void TrainConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (learning_rate <= 0.0) throw std::invalid_argument("train: learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (grad_clip <= 0.0) throw std::invalid_argument("train: grad_clip must be > 0");
  if (steps < 0) throw std::invalid_argument("train: steps must be >= 0");
  if (!prob(p_first) || !prob(p_last) || !prob(p_audio_drop) || !prob(p_text_drop))
    throw std::invalid_argument("train: probabilities must lie in [0, 1]");
  if (first_frames_k < 1) throw std::invalid_argument("train: first_frames_k must be >= 1");
  if (stage != "warmup" && stage != "main" && stage != "finetune")
    throw std::invalid_argument("train: unknown stage tag: " + stage);
}

json to_json(const TrainConfig& cfg) {
  return json{{"learning_rate", cfg.learning_rate},
              {"batch_size", cfg.batch_size},
              {"grad_clip", cfg.grad_clip},
              {"steps", cfg.steps},
              {"p_first", cfg.p_first},
              {"p_last", cfg.p_last},
              {"p_audio_drop", cfg.p_audio_drop},
              {"p_text_drop", cfg.p_text_drop},
              {"first_frames_k", cfg.first_frames_k},
              {"stage", cfg.stage}};
}

TrainConfig train_config_from_json(const json& doc) {
  TrainConfig cfg;
  cfg.learning_rate = doc.value("learning_rate", cfg.learning_rate);
  cfg.batch_size = doc.value("batch_size", cfg.batch_size);
  cfg.grad_clip = doc.value("grad_clip", cfg.grad_clip);
  cfg.steps = doc.value("steps", cfg.steps);
  cfg.p_first = doc.value("p_first", cfg.p_first);
  cfg.p_last = doc.value("p_last", cfg.p_last);
  cfg.p_audio_drop = doc.value("p_audio_drop", cfg.p_audio_drop);
  cfg.p_text_drop = doc.value("p_text_drop", cfg.p_text_drop);
  cfg.first_frames_k = doc.value("first_frames_k", cfg.first_frames_k);
  cfg.stage = doc.value("stage", cfg.stage);
  cfg.validate();
  return cfg;
}

void write_metrics_csv(const std::vector<StepMetrics>& metrics,
                       const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write metrics: " + path.string());
  out << "step,loss,grad_norm,lr\n";
  out.precision(17);
  for (const auto& m : metrics)
    out << m.step << ',' << m.loss << ',' << m.grad_norm << ',' << m.lr << '\n';
}

AdamW::AdamW(double lr, double beta1, double beta2, double eps, double weight_decay)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

void AdamW::step(mmdit::ParamStore& params, const std::map<std::string, Mat>& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (auto& [name, p] : params.arrays) {
    auto it = grads.find(name);
    if (it == grads.end()) continue;
    const Mat& g = it->second;
    Mat& m = m_.try_emplace(name, Mat::Zero(p.rows(), p.cols())).first->second;
    Mat& v = v_.try_emplace(name, Mat::Zero(p.rows(), p.cols())).first->second;
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    const Mat mhat = m / bc1;
    const Mat vhat = v / bc2;
    if (weight_decay_ > 0.0) p -= lr_ * weight_decay_ * p;
    p -= lr_ * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
  }
}

std::vector<int> tokenize_text(const std::string& text, int vocab) {
  // fixed ids for the motion vocabulary; hashed fallback for anything else
  static const std::map<std::string, int> kWords = {
      {"idle", 0}, {"walk", 1}, {"left", 2}, {"right", 3}, {"wave", 4}};
  const int reserved = static_cast<int>(kWords.size());
  std::vector<int> ids;
  std::istringstream ss(text);
  std::string word;
  while (ss >> word) {
    for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    auto it = kWords.find(word);
    if (it != kWords.end()) {
      ids.push_back(it->second);
    } else if (vocab > reserved) {
      ids.push_back(reserved + static_cast<int>(hash64(word) % (vocab - reserved)));
    }
  }
  return ids;
}

StepMetrics train_step(mmdit::Model& model, const ExampleStream& stream, const TrainConfig& cfg,
                       AdamW& opt, int step, std::uint64_t seed) {
  const mmdit::ModelConfig& mc = model.config();
  const int T = mc.latent_frames;

  std::map<std::string, Mat> grads;
  for (const auto& [name, mat] : model.params().arrays)
    grads.emplace(name, Mat::Zero(mat.rows(), mat.cols()));

  double loss_sum = 0.0;
  for (int b = 0; b < cfg.batch_size; ++b) {
    const std::int64_t index = static_cast<std::int64_t>(step) * cfg.batch_size + b;
    TrainExample ex = stream(index);
    if (ex.x0.frames != T) throw std::invalid_argument("train: example frame count mismatch");

    const std::uint64_t sample_seed = mix_seed(mix_seed(seed, 0x7a17), index);
    auto fb = flowmatch::make_flow_batch(ex.x0.as_matrix(), sample_seed);

    LatentClip xt = LatentClip::from_matrix(fb.xt, mc.latent_height, mc.latent_width,
                                            mc.latent_channels);

    mmdit::ConditionSet cond;
    Rng cr(mix_seed(mix_seed(seed, 0xc0dd), index));
    const bool cond_first = cr.uniform() < cfg.p_first;
    const bool cond_last = cr.uniform() < cfg.p_last;
    const bool drop_audio = !ex.sync_flag || cr.uniform() < cfg.p_audio_drop;
    const bool drop_text = cr.uniform() < cfg.p_text_drop;

    if (cond_first) {
      for (int f = 0; f < std::min(cfg.first_frames_k, T - 1); ++f) {
        xt.set_frame(f, ex.x0.frame(f));
        xt.cond_mask[f] = 1;
      }
    }
    if (cond_last) {
      switch (mc.conditioning) {
        case mmdit::ConditioningMode::kPseudoLastFrame:
          // GT last frame rides in the shifted extra slot; the in-range slot
          // stays noised so the loss still covers it
          cond.pseudo_flag = true;
          cond.last_frame = ex.x0.frame(T - 1);
          break;
        case mmdit::ConditioningMode::kRefImage:
          xt.set_frame(T - 1, ex.x0.frame(T - 1));
          xt.cond_mask[T - 1] = 1;
          break;
        case mmdit::ConditioningMode::kNone:
          break;
      }
    }
    cond.audio_features = ex.audio_features;
    cond.audio_dropped = drop_audio;
    if (!drop_text) cond.text_tokens = ex.text_tokens;

    diff::Tape tape;
    auto taped = model.forward_taped(tape, xt, fb.t, cond);
    LatentClip vt = LatentClip::from_matrix(fb.v_target, mc.latent_height, mc.latent_width,
                                            mc.latent_channels);
    diff::Var loss = flowmatch::fm_loss_taped(tape, taped.velocity_tokens, model.patchify(vt),
                                              xt.cond_mask, mc.tokens_per_frame());
    const double loss_val = tape.val(loss)(0, 0);
    if (!std::isfinite(loss_val)) throw NanLossError(step);
    loss_sum += loss_val;

    tape.backward(loss);
    for (const auto& [name, var] : taped.param_vars) grads[name] += tape.grad(var);
  }

  const double inv_b = 1.0 / cfg.batch_size;
  double sq_norm = 0.0;
  for (auto& [name, g] : grads) {
    g *= inv_b;
    sq_norm += g.squaredNorm();
  }
  double norm = std::sqrt(sq_norm);
  if (!std::isfinite(norm)) throw NanLossError(step);
  if (norm > cfg.grad_clip) {
    const double s = cfg.grad_clip / norm;
    for (auto& [name, g] : grads) g *= s;
    norm = cfg.grad_clip;
  }
  opt.step(model.params(), grads);

  return {step, loss_sum * inv_b, norm, opt.lr()};
}

namespace {

TrainResult run_stage(mmdit::Model& model, const ExampleStream& stream, const TrainConfig& cfg,
                      std::uint64_t seed) {
  cfg.validate();
  AdamW opt(cfg.learning_rate);
  TrainResult result;
  result.metrics.reserve(cfg.steps);
  for (int step = 0; step < cfg.steps; ++step)
    result.metrics.push_back(train_step(model, stream, cfg, opt, step, seed));
  return result;
}

}  // namespace

TrainResult train_stage1_warmup(mmdit::Model& model, const ExampleStream& stream,
                                const TrainConfig& cfg, std::uint64_t seed) {
  TrainConfig c = cfg;
  c.stage = "warmup";
  return run_stage(model, stream, c, seed);
}

TrainResult train_main(mmdit::Model& model, const ExampleStream& stream, const TrainConfig& cfg,
                       std::uint64_t seed) {
  return run_stage(model, stream, cfg, seed);
}

}  // namespace avatar::pipeline
