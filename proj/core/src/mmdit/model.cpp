#include "avatar/mmdit/model.hpp"

#include <cmath>
#include <stdexcept>

#include "avatar/rng.hpp"

namespace avatar::mmdit {

using diff::Tape;
using diff::Var;

std::int64_t ParamStore::total_count() const {
  std::int64_t n = 0;
  for (const auto& [name, m] : arrays) n += m.size();
  return n;
}

std::int64_t ParamStore::branch_count(std::string_view prefix) const {
  std::int64_t n = 0;
  for (const auto& [name, m] : arrays)
    if (name.starts_with(prefix)) n += m.size();
  return n;
}

std::vector<std::pair<std::string, std::pair<int, int>>> param_shapes(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, std::pair<int, int>>> shapes;
  const int d = cfg.hidden_dim;
  const int ff = 4 * d;
  const int pd = cfg.patch_dim();
  const int aw = cfg.audio_dim + cfg.reasoning_dim;

  auto add = [&](std::string name, int r, int c) { shapes.emplace_back(std::move(name), std::make_pair(r, c)); };

  add("video.patch_embed.w", pd, d);
  add("video.patch_embed.b", 1, d);
  add("video.cond_embed", 1, d);
  add("video.head.w", d, pd);
  add("video.head.b", 1, pd);
  add("video.head.mod.w", d, 2 * d);  // adaLN shift/scale before the head
  add("video.head.mod.b", 1, 2 * d);
  // time-gated diagonal skip from input patches to the velocity: the rank of
  // head.w is capped at d < patch_dim, so the near-identity component of the
  // velocity field at t~1 needs its own full-rank path
  add("video.head.skip.w", d, pd);
  add("video.head.skip.b", 1, pd);
  add("text.embed", cfg.text_vocab, d);
  add("audio.proj", aw, d);
  add("shared.time.w1", d, d);
  add("shared.time.b1", 1, d);
  add("shared.time.w2", d, d);
  add("shared.time.b2", 1, d);

  auto add_block = [&](const std::string& branch, int i) {
    const std::string p = branch + ".blk" + std::to_string(i) + ".";
    add(p + "attn.wq", d, d);
    add(p + "attn.bq", 1, d);
    add(p + "attn.wk", d, d);
    add(p + "attn.bk", 1, d);
    add(p + "attn.wv", d, d);
    add(p + "attn.bv", 1, d);
    add(p + "attn.wo", d, d);
    add(p + "attn.bo", 1, d);
    add(p + "mod.w", d, 6 * d);
    add(p + "mod.b", 1, 6 * d);
    add(p + "ffn.w1", d, ff);
    add(p + "ffn.b1", 1, ff);
    add(p + "ffn.w2", ff, d);
    add(p + "ffn.b2", 1, d);
  };

  for (int i = 0; i < cfg.depth; ++i) {
    add_block("video", i);
    add_block("text", i);
    if (cfg.audio_injection == AudioInjection::kSymmetricBranch) {
      add_block("audio", i);
    } else {
      const std::string vi = "video.blk" + std::to_string(i) + ".xattn.";
      const std::string ai = "audio.blk" + std::to_string(i) + ".xattn.";
      add(vi + "wq", d, d);
      add(vi + "bq", 1, d);
      add(vi + "wo", d, d);
      add(vi + "bo", 1, d);
      add(ai + "wk", d, d);
      add(ai + "bk", 1, d);
      add(ai + "wv", d, d);
      add(ai + "bv", 1, d);
    }
  }
  return shapes;
}

Model::Model(ModelConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  for (const auto& [name, shape] : param_shapes(cfg_))
    params_.arrays[name] = Mat::Zero(shape.first, shape.second);
}

namespace {
bool is_bias_name(const std::string& name) {
  const auto pos = name.rfind('.');
  const std::string last = pos == std::string::npos ? name : name.substr(pos + 1);
  return !last.empty() && last[0] == 'b' && last != "blk";
}
}  // namespace

Model Model::init(const ModelConfig& cfg, std::uint64_t seed, double weight_std) {
  Model m(cfg);
  for (auto& [name, mat] : m.params_.arrays) {
    if (is_bias_name(name)) continue;  // biases stay zero
    Rng rng(mix_seed(seed, hash64(name)));
    for (Eigen::Index i = 0; i < mat.rows(); ++i)
      for (Eigen::Index j = 0; j < mat.cols(); ++j) mat(i, j) = weight_std * rng.normal();
  }

  // Frame-aligned audio routing prior on the first two heads: a bias beta on
  // the video-branch queries paired with the same bias on the audio-branch
  // keys, both in one temporal RoPE pair, adds a content-independent score
  // term beta^2*cos(w*dt)/sqrt(dh) from video tokens to audio tokens only.
  // The pair is chosen so w spans roughly one half-period over a clip, i.e.
  // a smooth same-frame bump rather than an aliasing comb. Without this
  // routing, frame-aligned cross-modal attention sits behind a plateau:
  // uniform attention over the audio tokens carries only their clip-mean, so
  // the easiest descent direction is to mute the audio columns entirely, and
  // the synchronization signal is never discovered. Biasing video keys too
  // would cancel the edge (same-frame video tokens outnumber the one aligned
  // audio token), so only the query side of video is touched.
  if (cfg.audio_injection == AudioInjection::kSymmetricBranch) {
    const int dh = cfg.head_dim();
    const int pairs = dh / 2;
    const int pt = pairs - 2 * (pairs / 4);  // temporal pairs lead each head
    const int pair = std::min(1, pt - 1);    // w = base^(-pair/pt), ~0.1 rad/frame
    const double beta[2] = {6.0, 4.0};
    for (auto& [name, mat] : m.params_.arrays) {
      const bool vq = name.starts_with("video.") && name.ends_with("attn.bq");
      const bool ak = name.starts_with("audio.") && name.ends_with("attn.bk");
      if (!vq && !ak) continue;
      for (int h = 0; h < std::min(2, cfg.heads); ++h) mat(0, h * dh + 2 * pair) = beta[h];
    }
  }
  return m;
}

Mat Model::patchify(const LatentClip& clip) const {
  const int p = cfg_.patch, gh = cfg_.grid_h(), gw = cfg_.grid_w(), c = cfg_.latent_channels;
  if (clip.height != cfg_.latent_height || clip.width != cfg_.latent_width ||
      clip.channels != cfg_.latent_channels)
    throw std::invalid_argument("patchify: clip shape does not match config");
  Mat out(static_cast<Eigen::Index>(clip.frames) * gh * gw, cfg_.patch_dim());
  Eigen::Index row = 0;
  for (int t = 0; t < clip.frames; ++t)
    for (int gy = 0; gy < gh; ++gy)
      for (int gx = 0; gx < gw; ++gx) {
        Eigen::Index col = 0;
        for (int py = 0; py < p; ++py)
          for (int px = 0; px < p; ++px)
            for (int ch = 0; ch < c; ++ch)
              out(row, col++) = clip.at(t, gy * p + py, gx * p + px, ch);
        ++row;
      }
  return out;
}

LatentClip Model::unpatchify(const Mat& tokens, int frames) const {
  const int p = cfg_.patch, gh = cfg_.grid_h(), gw = cfg_.grid_w(), c = cfg_.latent_channels;
  if (tokens.rows() != static_cast<Eigen::Index>(frames) * gh * gw || tokens.cols() != cfg_.patch_dim())
    throw std::invalid_argument("unpatchify: token array shape mismatch");
  LatentClip clip(frames, cfg_.latent_height, cfg_.latent_width, c);
  Eigen::Index row = 0;
  for (int t = 0; t < frames; ++t)
    for (int gy = 0; gy < gh; ++gy)
      for (int gx = 0; gx < gw; ++gx) {
        Eigen::Index col = 0;
        for (int py = 0; py < p; ++py)
          for (int px = 0; px < p; ++px)
            for (int ch = 0; ch < c; ++ch)
              clip.at(t, gy * p + py, gx * p + px, ch) = tokens(row, col++);
        ++row;
      }
  return clip;
}

namespace {

Mat time_features(double t, int d) {
  Mat f = Mat::Zero(1, d);
  const int half = d / 2;
  for (int j = 0; j < half; ++j) {
    const double ang = 1000.0 * t * std::pow(10000.0, -static_cast<double>(j) / half);
    f(0, j) = std::sin(ang);
    f(0, half + j) = std::cos(ang);
  }
  return f;
}

}  // namespace

struct Model::Ctx {
  Tape& tape;
  const Model& m;
  TokenLayout layout;
  MaskMat allow_full;     // over the whole layout
  RopePhases phases;      // per head_dim, rows follow the layout
  Var video, text, audio;
  Var temb;
  bool audio_dropped = false;
  std::map<std::string, Var> pv;

  Ctx(Tape& t, const Model& mm) : tape(t), m(mm) {}

  Var P(const std::string& name) {
    auto it = pv.find(name);
    if (it == pv.end()) throw std::logic_error("unknown parameter: " + name);
    return it->second;
  }
};

namespace {

struct ModVecs {
  Var shift1, scale1, gate1, shift2, scale2, gate2;
};

ModVecs modulation(Model::Ctx& ctx, const std::string& prefix) {
  auto& tp = ctx.tape;
  const int d = ctx.m.config().hidden_dim;
  Var mod = tp.add_rowvec(tp.matmul(ctx.temb, ctx.P(prefix + "mod.w")), ctx.P(prefix + "mod.b"));
  return {tp.slice_cols(mod, 0, d),     tp.slice_cols(mod, d, d),     tp.slice_cols(mod, 2 * d, d),
          tp.slice_cols(mod, 3 * d, d), tp.slice_cols(mod, 4 * d, d), tp.slice_cols(mod, 5 * d, d)};
}

// x * (1 + scale) + shift, row-broadcast
Var modulate(Tape& tp, Var x, Var scale, Var shift) {
  return tp.add_rowvec(tp.add(x, tp.rowwise_mul(x, scale)), shift);
}

Var gated(Tape& tp, Var residual, Var update, Var gate) {
  return tp.add(residual, tp.add(update, tp.rowwise_mul(update, gate)));
}

Var ffn(Model::Ctx& ctx, Var x, const std::string& prefix) {
  auto& tp = ctx.tape;
  Var h = tp.add_rowvec(tp.matmul(x, ctx.P(prefix + "ffn.w1")), ctx.P(prefix + "ffn.b1"));
  h = tp.gelu(h);
  return tp.add_rowvec(tp.matmul(h, ctx.P(prefix + "ffn.w2")), ctx.P(prefix + "ffn.b2"));
}

// Multi-head attention over pre-projected q/k/v with rotary phases applied
// per head. Rows of q index the queries, rows of k/v the keys.
Var multihead_attention(Tape& tp, const ModelConfig& cfg, Var q, Var k, Var v,
                        const Mat& q_cos, const Mat& q_sin, const Mat& k_cos, const Mat& k_sin,
                        const MaskMat& allow) {
  const int dh = cfg.head_dim();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(cfg.heads);
  for (int h = 0; h < cfg.heads; ++h) {
    Var qh = tp.rope_rotate(tp.slice_cols(q, h * dh, dh), q_cos, q_sin);
    Var kh = tp.rope_rotate(tp.slice_cols(k, h * dh, dh), k_cos, k_sin);
    Var vh = tp.slice_cols(v, h * dh, dh);
    Var scores = tp.scale(tp.matmul_nt(qh, kh), inv_sqrt);
    Var probs = tp.softmax_rows_masked(scores, allow);
    heads.push_back(tp.matmul(probs, vh));
  }
  return tp.concat_cols(heads);
}

}  // namespace

Var Model::block_taped(Ctx& ctx, int block) const {
  auto& tp = ctx.tape;
  const std::string bi = ".blk" + std::to_string(block) + ".";
  const int nv = ctx.layout.n_video, nt = ctx.layout.n_text, na = ctx.layout.n_audio;

  const bool symmetric = cfg_.audio_injection == AudioInjection::kSymmetricBranch;

  struct BranchState {
    std::string name;
    Var* tokens;
    ModVecs mod;
    Var q, k, v;
  };
  std::vector<BranchState> branches;
  branches.push_back({"video", &ctx.video, {}, {}, {}, {}});
  branches.push_back({"text", &ctx.text, {}, {}, {}, {}});
  if (symmetric) branches.push_back({"audio", &ctx.audio, {}, {}, {}, {}});

  for (auto& b : branches) {
    const std::string prefix = b.name + bi;
    b.mod = modulation(ctx, prefix);
    Var h = modulate(tp, tp.layernorm_rows(*b.tokens), b.mod.scale1, b.mod.shift1);
    b.q = tp.add_rowvec(tp.matmul(h, ctx.P(prefix + "attn.wq")), ctx.P(prefix + "attn.bq"));
    b.k = tp.add_rowvec(tp.matmul(h, ctx.P(prefix + "attn.wk")), ctx.P(prefix + "attn.bk"));
    b.v = tp.add_rowvec(tp.matmul(h, ctx.P(prefix + "attn.wv")), ctx.P(prefix + "attn.bv"));
  }

  std::vector<Var> qs, ks, vs;
  for (auto& b : branches) {
    qs.push_back(b.q);
    ks.push_back(b.k);
    vs.push_back(b.v);
  }
  Var q = tp.concat_rows(qs), k = tp.concat_rows(ks), v = tp.concat_rows(vs);

  const int n_shared = symmetric ? nv + nt + na : nv + nt;
  const Mat cos_s = ctx.phases.cos_m.topRows(n_shared);
  const Mat sin_s = ctx.phases.sin_m.topRows(n_shared);
  const MaskMat allow_s = ctx.allow_full.topLeftCorner(n_shared, n_shared);

  Var attn_out = multihead_attention(tp, cfg_, q, k, v, cos_s, sin_s, cos_s, sin_s, allow_s);

  int row = 0;
  for (auto& b : branches) {
    const std::string prefix = b.name + bi;
    const int n = static_cast<int>(tp.val(*b.tokens).rows());
    Var ctx_b = tp.slice_rows(attn_out, row, n);
    row += n;
    Var out = tp.add_rowvec(tp.matmul(ctx_b, ctx.P(prefix + "attn.wo")), ctx.P(prefix + "attn.bo"));
    *b.tokens = gated(tp, *b.tokens, out, b.mod.gate1);
  }

  if (!symmetric && na > 0 && !ctx.audio_dropped) {
    // per-layer cross-attention: video queries, audio keys/values (read-only)
    const std::string vx = "video" + bi + "xattn.";
    const std::string ax = "audio" + bi + "xattn.";
    Var hq = tp.layernorm_rows(ctx.video);
    Var q2 = tp.add_rowvec(tp.matmul(hq, ctx.P(vx + "wq")), ctx.P(vx + "bq"));
    Var k2 = tp.add_rowvec(tp.matmul(ctx.audio, ctx.P(ax + "wk")), ctx.P(ax + "bk"));
    Var v2 = tp.add_rowvec(tp.matmul(ctx.audio, ctx.P(ax + "wv")), ctx.P(ax + "bv"));
    const Mat q_cos = ctx.phases.cos_m.topRows(nv), q_sin = ctx.phases.sin_m.topRows(nv);
    const Mat k_cos = ctx.phases.cos_m.bottomRows(na), k_sin = ctx.phases.sin_m.bottomRows(na);
    const MaskMat cross_allow = ctx.allow_full.block(0, nv + nt, nv, na);
    Var xout = multihead_attention(tp, cfg_, q2, k2, v2, q_cos, q_sin, k_cos, k_sin, cross_allow);
    xout = tp.add_rowvec(tp.matmul(xout, ctx.P(vx + "wo")), ctx.P(vx + "bo"));
    ctx.video = tp.add(ctx.video, xout);
  }

  for (auto& b : branches) {
    const std::string prefix = b.name + bi;
    Var h = modulate(tp, tp.layernorm_rows(*b.tokens), b.mod.scale2, b.mod.shift2);
    *b.tokens = gated(tp, *b.tokens, ffn(ctx, h, prefix), b.mod.gate2);
  }
  return ctx.video;
}

Model::Taped Model::forward_taped(Tape& tape, const LatentClip& noised, double t,
                                  const ConditionSet& cond) const {
  cfg_.validate();
  const int T = cfg_.latent_frames;
  if (noised.frames != T || noised.height != cfg_.latent_height ||
      noised.width != cfg_.latent_width || noised.channels != cfg_.latent_channels)
    throw std::invalid_argument("forward: latent clip shape does not match config");
  if (!noised.all_finite()) throw std::invalid_argument("forward: non-finite latents");
  if (cond.pseudo_flag && !cond.last_frame.has_value())
    throw std::invalid_argument("forward: pseudo_flag requires last_frame");
  if (!std::isfinite(t)) throw std::invalid_argument("forward: non-finite time");

  for (int id : cond.text_tokens)
    if (id < 0 || id >= cfg_.text_vocab) throw std::invalid_argument("forward: text token out of vocab");
  const int n_text = static_cast<int>(cond.text_tokens.size());
  if (n_text > cfg_.max_text_len) throw std::invalid_argument("forward: text too long");

  std::vector<int> speaker_ids;
  for (const auto& sm : cond.speaker_masks) speaker_ids.push_back(sm.speaker_id);

  Ctx ctx(tape, *this);
  ctx.layout = build_token_layout(cfg_, n_text, noised.cond_mask, cond.pseudo_flag, speaker_ids);

  Taped result;
  // parameter leaves, in name order
  for (const auto& [name, mat] : params_.arrays) {
    Var v = tape.leaf(mat);
    ctx.pv.emplace(name, v);
    result.param_vars.emplace_back(name, v);
  }

  // --- video tokens ---
  Mat patches = patchify(noised);
  if (cond.pseudo_flag) {
    LatentClip pseudo(1, cfg_.latent_height, cfg_.latent_width, cfg_.latent_channels);
    pseudo.set_frame(0, *cond.last_frame);
    Mat pp = patchify(pseudo);
    Mat joined(patches.rows() + pp.rows(), patches.cols());
    joined << patches, pp;
    patches = std::move(joined);
  }
  Var patch_in = tape.constant(std::move(patches));
  ctx.video = tape.add_rowvec(tape.matmul(patch_in, ctx.P("video.patch_embed.w")),
                              ctx.P("video.patch_embed.b"));
  Eigen::VectorXd cond_sel = Eigen::VectorXd::Zero(ctx.layout.n_video);
  for (int i = 0; i < ctx.layout.n_video; ++i)
    if (ctx.layout.tokens[i].cond) cond_sel(i) = 1.0;
  ctx.video = tape.add_scaled_rowvec(ctx.video, cond_sel, ctx.P("video.cond_embed"));

  // --- text tokens ---
  if (n_text > 0) {
    ctx.text = tape.gather_rows(ctx.P("text.embed"), cond.text_tokens);
  } else {
    ctx.text = tape.constant(Mat::Zero(0, cfg_.hidden_dim));
  }
  if (!cond.text_positions.empty()) {
    if (static_cast<int>(cond.text_positions.size()) != n_text)
      throw std::invalid_argument("forward: text_positions size mismatch");
    for (int i = 0; i < n_text; ++i)
      ctx.layout.tokens[ctx.layout.n_video + i].temporal = cond.text_positions[i];
  }

  // --- audio tokens ---
  const int aw = cfg_.audio_dim + cfg_.reasoning_dim;
  Mat afeat;
  if (cond.speaker_masks.empty()) {
    afeat = Mat::Zero(T, aw);
    if (cond.audio_features.size() > 0) {
      if (cond.audio_features.rows() != T || cond.audio_features.cols() != cfg_.audio_dim)
        throw std::invalid_argument("forward: audio feature shape mismatch");
      afeat.leftCols(cfg_.audio_dim) = cond.audio_features;
    }
    if (cond.reasoning_latents.has_value()) {
      if (cfg_.reasoning_dim == 0)
        throw std::invalid_argument("forward: reasoning latents supplied but reasoning_dim is 0");
      if (cond.reasoning_latents->rows() != T || cond.reasoning_latents->cols() != cfg_.reasoning_dim)
        throw std::invalid_argument("forward: reasoning latent shape mismatch");
      afeat.rightCols(cfg_.reasoning_dim) = *cond.reasoning_latents;
    }
  } else {
    if (cond.reasoning_latents.has_value())
      throw std::invalid_argument("forward: reasoning latents unsupported with speaker masks");
    afeat = Mat::Zero(static_cast<Eigen::Index>(T) * cond.speaker_masks.size(), aw);
    Eigen::Index r = 0;
    for (const auto& sm : cond.speaker_masks) {
      if (sm.audio_features.rows() != T || sm.audio_features.cols() != cfg_.audio_dim)
        throw std::invalid_argument("forward: speaker audio feature shape mismatch");
      afeat.block(r, 0, T, cfg_.audio_dim) = sm.audio_features;
      r += T;
    }
  }
  ctx.audio_dropped = cond.audio_dropped;
  if (ctx.audio_dropped) afeat.setZero();
  ctx.audio = tape.matmul(tape.constant(std::move(afeat)), ctx.P("audio.proj"));

  // --- positions, permissions, timestep ---
  ctx.phases = compute_rope_phases(rope_positions(cfg_, ctx.layout, cond.pseudo_flag), cfg_.head_dim());
  ctx.allow_full = build_attention_mask(cfg_, ctx.layout, cond.speaker_masks);
  if (ctx.audio_dropped) {
    // video/text never see audio tokens; audio rows keep their targets so the
    // (dead-end) audio stream still has non-empty attention rows
    const int n_va = ctx.layout.n_video + ctx.layout.n_text;
    ctx.allow_full.block(0, n_va, n_va, ctx.layout.n_audio).setZero();
  }

  Var tfeat = tape.constant(time_features(t, cfg_.hidden_dim));
  Var temb = tape.add_rowvec(tape.matmul(tfeat, ctx.P("shared.time.w1")), ctx.P("shared.time.b1"));
  temb = tape.silu(temb);
  ctx.temb = tape.add_rowvec(tape.matmul(temb, ctx.P("shared.time.w2")), ctx.P("shared.time.b2"));

  for (int i = 0; i < cfg_.depth; ++i) block_taped(ctx, i);

  // --- velocity head over the T generated frames ---
  // the head is time-modulated: the velocity field must scale with t even
  // when the blocks are near-identity
  Var gen = tape.slice_rows(ctx.video, 0, T * cfg_.tokens_per_frame());
  Var hmod = tape.add_rowvec(tape.matmul(ctx.temb, ctx.P("video.head.mod.w")),
                             ctx.P("video.head.mod.b"));
  Var h = modulate(tape, tape.layernorm_rows(gen), tape.slice_cols(hmod, cfg_.hidden_dim, cfg_.hidden_dim),
                   tape.slice_cols(hmod, 0, cfg_.hidden_dim));
  Var vel = tape.add_rowvec(tape.matmul(h, ctx.P("video.head.w")), ctx.P("video.head.b"));
  Var skip_gate = tape.add_rowvec(tape.matmul(ctx.temb, ctx.P("video.head.skip.w")),
                                  ctx.P("video.head.skip.b"));
  Var gen_patches = tape.slice_rows(patch_in, 0, T * cfg_.tokens_per_frame());
  result.velocity_tokens = tape.add(vel, tape.rowwise_mul(gen_patches, skip_gate));
  result.layout = ctx.layout;
  return result;
}

LatentClip Model::forward(const LatentClip& noised, double t, const ConditionSet& cond) const {
  Tape tape;
  Taped taped = forward_taped(tape, noised, t, cond);
  return unpatchify(tape.val(taped.velocity_tokens), cfg_.latent_frames);
}

Model::BlockTokens Model::run_block(int block, const BlockTokens& tokens, double t,
                                    const TokenLayout& layout, const MaskMat& allow) const {
  Tape tape;
  Ctx ctx(tape, *this);
  ctx.layout = layout;
  ctx.allow_full = allow;
  bool pseudo = false;
  for (const auto& tok : layout.tokens) pseudo = pseudo || tok.pseudo;
  ctx.phases = compute_rope_phases(rope_positions(cfg_, layout, pseudo), cfg_.head_dim());
  for (const auto& [name, mat] : params_.arrays) ctx.pv.emplace(name, tape.constant(mat));

  ctx.video = tape.constant(tokens.video);
  ctx.text = tape.constant(tokens.text);
  ctx.audio = tape.constant(tokens.audio);

  Var tfeat = tape.constant(time_features(t, cfg_.hidden_dim));
  Var temb = tape.add_rowvec(tape.matmul(tfeat, ctx.P("shared.time.w1")), ctx.P("shared.time.b1"));
  temb = tape.silu(temb);
  ctx.temb = tape.add_rowvec(tape.matmul(temb, ctx.P("shared.time.w2")), ctx.P("shared.time.b2"));

  block_taped(ctx, block);
  return {tape.val(ctx.video), tape.val(ctx.text), tape.val(ctx.audio)};
}

std::pair<Mat, TokenLayout> Model::embed_video(const LatentClip& clip) const {
  if (clip.frames != cfg_.latent_frames)
    throw std::invalid_argument("embed_video: frame count mismatch");
  Mat patches = patchify(clip);
  Mat tokens = patches * params_.arrays.at("video.patch_embed.w");
  tokens.rowwise() += params_.arrays.at("video.patch_embed.b").row(0);
  TokenLayout layout =
      build_token_layout(cfg_, 0, clip.cond_mask, false, {}, /*include_audio=*/false);
  const Mat& ce = params_.arrays.at("video.cond_embed");
  for (int i = 0; i < layout.n_video; ++i)
    if (layout.tokens[i].cond) tokens.row(i) += ce.row(0);
  return {tokens, layout};
}

Mat Model::embed_audio(const Mat& features, const std::optional<Mat>& reasoning) const {
  if (features.rows() != cfg_.latent_frames || features.cols() != cfg_.audio_dim)
    throw std::invalid_argument("embed_audio: feature shape mismatch");
  Mat in = Mat::Zero(cfg_.latent_frames, cfg_.audio_dim + cfg_.reasoning_dim);
  in.leftCols(cfg_.audio_dim) = features;
  if (reasoning.has_value()) {
    if (reasoning->rows() != cfg_.latent_frames)
      throw std::invalid_argument("embed_audio: reasoning frame count mismatch");
    if (reasoning->cols() != cfg_.reasoning_dim)
      throw std::invalid_argument("embed_audio: reasoning dim mismatch");
    in.rightCols(cfg_.reasoning_dim) = *reasoning;
  }
  return in * params_.arrays.at("audio.proj");
}

}  // namespace avatar::mmdit
