// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/se_model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "lse/common.hpp"
#include "lse/ops.hpp"

namespace lse {

void SEConfig::validate() const {
  check_arg(n_blocks >= 1, "se: n_blocks must be >= 1");
  check_arg(embed_dim >= 1, "se: embed_dim must be >= 1");
  check_arg(n_heads >= 1 && embed_dim % n_heads == 0,
            "se: embed_dim " + std::to_string(embed_dim) + " must be divisible by n_heads " +
                std::to_string(n_heads));
  check_arg(ffn_mult >= 1, "se: ffn_mult must be >= 1");
  check_arg(modulation_kernel >= 1 && modulation_kernel % 2 == 1,
            "se: modulation_kernel must be odd, got " + std::to_string(modulation_kernel));
}

namespace {

Tensor uniform_init(std::vector<std::int64_t> shape, std::int64_t fan_in, std::mt19937_64& rng,
                    double gain = 1.0) {
  const double bound = gain * std::sqrt(1.0 / static_cast<double>(fan_in));
  return Tensor::rand_uniform(std::move(shape), rng, -bound, bound);
}

}  // namespace

SEModel::SEModel(SEConfig cfg, int latent_dim, std::uint64_t seed)
    : cfg_(cfg), latent_dim_(latent_dim) {
  cfg_.validate();
  check_arg(latent_dim >= 1, "se: latent_dim must be >= 1");
  std::mt19937_64 rng(seed);
  const std::int64_t d = latent_dim, e = cfg_.embed_dim;
  const std::int64_t hidden = e * cfg_.ffn_mult;
  const std::int64_t k = cfg_.modulation_kernel;

  in_w = uniform_init({e, d}, d, rng);
  in_b = Tensor::zeros({e});
  for (int b = 0; b < cfg_.n_blocks; ++b) {
    TransformerBlock blk;
    blk.ln1_gamma = Tensor::full({e}, 1.0);
    blk.ln1_beta = Tensor::zeros({e});
    blk.wq = uniform_init({e, e}, e, rng);
    blk.bq = Tensor::zeros({e});
    blk.wk = uniform_init({e, e}, e, rng);
    blk.bk = Tensor::zeros({e});
    blk.wv = uniform_init({e, e}, e, rng);
    blk.bv = Tensor::zeros({e});
    // residual-branch outputs start small so a fresh stack is near-identity
    blk.wo = uniform_init({e, e}, e, rng, 0.1);
    blk.bo = Tensor::zeros({e});
    blk.ln2_gamma = Tensor::full({e}, 1.0);
    blk.ln2_beta = Tensor::zeros({e});
    blk.w1 = uniform_init({hidden, e}, e, rng);
    blk.b1 = Tensor::zeros({hidden});
    blk.w2 = uniform_init({e, hidden}, hidden, rng, 0.1);
    blk.b2 = Tensor::zeros({e});
    blocks.push_back(std::move(blk));
  }
  modulation.gate_w = uniform_init({e, e, k}, e * k, rng);
  modulation.gate_b = Tensor::zeros({e});
  modulation.feat_w = uniform_init({e, e, k}, e * k, rng);
  modulation.feat_b = Tensor::zeros({e});
  modulation.feat_alpha = Tensor::full({e}, 1.0);
  modulation.out_alpha = Tensor::full({e}, 1.0);
  out_w = uniform_init({d, e}, e, rng, 0.1);
  out_b = Tensor::zeros({d});
}

Tensor sinusoidal_positions(std::int64_t dim, std::int64_t frames) {
  Tensor pe = Tensor::zeros({dim, frames});
  for (std::int64_t c = 0; c < dim; ++c) {
    const double exponent = static_cast<double>(2 * (c / 2)) / static_cast<double>(dim);
    const double inv_freq = std::pow(10000.0, -exponent);
    for (std::int64_t t = 0; t < frames; ++t) {
      const double angle = static_cast<double>(t) * inv_freq;
      pe.data()[c * frames + t] = (c % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Tensor SEModel::transformer_block_forward(const TransformerBlock& blk, const Tensor& x) const {
  const std::int64_t e = cfg_.embed_dim;
  const std::int64_t heads = cfg_.n_heads;
  const std::int64_t head_dim = e / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Tensor n1 = layer_norm_cols(x, blk.ln1_gamma, blk.ln1_beta);
  Tensor q = add_channel_bias(matmul(blk.wq, n1), blk.bq);
  Tensor k = add_channel_bias(matmul(blk.wk, n1), blk.bk);
  Tensor v = add_channel_bias(matmul(blk.wv, n1), blk.bv);
  std::vector<Tensor> head_outs;
  head_outs.reserve(static_cast<std::size_t>(heads));
  for (std::int64_t h = 0; h < heads; ++h) {
    Tensor qh = slice_rows(q, h * head_dim, head_dim);
    Tensor kh = slice_rows(k, h * head_dim, head_dim);
    Tensor vh = slice_rows(v, h * head_dim, head_dim);
    Tensor scores = scale(matmul(transpose(qh), kh), att_scale);  // [T,T]
    Tensor weights = softmax_rows(scores);
    head_outs.push_back(matmul(vh, transpose(weights)));  // [head_dim,T]
  }
  Tensor attn = add_channel_bias(matmul(blk.wo, concat_rows(head_outs)), blk.bo);
  Tensor mid = add(x, attn);

  Tensor n2 = layer_norm_cols(mid, blk.ln2_gamma, blk.ln2_beta);
  Tensor hidden = gelu(add_channel_bias(matmul(blk.w1, n2), blk.b1));
  Tensor ffn = add_channel_bias(matmul(blk.w2, hidden), blk.b2);
  return add(mid, ffn);
}

Tensor SEModel::modulation_forward(const Tensor& x) const {
  const std::int64_t pad = (cfg_.modulation_kernel - 1) / 2;
  Tensor gate = sigmoid(conv1d(x, modulation.gate_w, modulation.gate_b, 1, pad));
  Tensor feat = snake(conv1d(x, modulation.feat_w, modulation.feat_b, 1, pad),
                      modulation.feat_alpha);
  return snake(mul(gate, feat), modulation.out_alpha);
}

Tensor SEModel::forward(const Tensor& y_e) const {
  check_arg(y_e.defined() && y_e.rank() == 2,
            "se_forward: expects [D,T], got " +
                (y_e.defined() ? shape_str(y_e.shape()) : std::string("<empty>")));
  check_arg(y_e.dim(0) == latent_dim_,
            "se_forward: input channels " + std::to_string(y_e.dim(0)) +
                " do not match model latent_dim " + std::to_string(latent_dim_));
  check_arg(y_e.dim(1) >= 1, "se_forward: empty time axis");
  check_arg(y_e.all_finite(), "se_forward: input contains non-finite values");

  Tensor h = add_channel_bias(matmul(in_w, y_e), in_b);
  if (cfg_.positional_encoding)
    h = add(h, sinusoidal_positions(cfg_.embed_dim, y_e.dim(1)));
  for (const TransformerBlock& blk : blocks) h = transformer_block_forward(blk, h);
  h = modulation_forward(h);
  return add_channel_bias(matmul(out_w, h), out_b);
}

std::vector<NamedParam> SEModel::parameters() {
  std::vector<NamedParam> out;
  out.push_back({"se.in_proj.weight", in_w});
  out.push_back({"se.in_proj.bias", in_b});
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = "se.block" + std::to_string(i);
    TransformerBlock& b = blocks[i];
    out.push_back({p + ".ln1.gamma", b.ln1_gamma});
    out.push_back({p + ".ln1.beta", b.ln1_beta});
    out.push_back({p + ".attn.wq", b.wq});
    out.push_back({p + ".attn.bq", b.bq});
    out.push_back({p + ".attn.wk", b.wk});
    out.push_back({p + ".attn.bk", b.bk});
    out.push_back({p + ".attn.wv", b.wv});
    out.push_back({p + ".attn.bv", b.bv});
    out.push_back({p + ".attn.wo", b.wo});
    out.push_back({p + ".attn.bo", b.bo});
    out.push_back({p + ".ln2.gamma", b.ln2_gamma});
    out.push_back({p + ".ln2.beta", b.ln2_beta});
    out.push_back({p + ".ffn.w1", b.w1});
    out.push_back({p + ".ffn.b1", b.b1});
    out.push_back({p + ".ffn.w2", b.w2});
    out.push_back({p + ".ffn.b2", b.b2});
  }
  out.push_back({"se.mod.gate.weight", modulation.gate_w});
  out.push_back({"se.mod.gate.bias", modulation.gate_b});
  out.push_back({"se.mod.feat.weight", modulation.feat_w});
  out.push_back({"se.mod.feat.bias", modulation.feat_b});
  out.push_back({"se.mod.feat.alpha", modulation.feat_alpha});
  out.push_back({"se.mod.out.alpha", modulation.out_alpha});
  out.push_back({"se.out_proj.weight", out_w});
  out.push_back({"se.out_proj.bias", out_b});
  return out;
}

std::int64_t SEModel::parameter_count() {
  auto params = parameters();
  return total_param_count(params);
}

}  // namespace lse
