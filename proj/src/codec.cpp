// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/codec.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "lse/common.hpp"
#include "lse/ops.hpp"

namespace lse {

namespace {

std::int64_t ceil_div2(std::int64_t s) { return (s + 1) / 2; }

// variance-preserving: Var(w) = 1/fan_in, so activation scale survives the
// full encoder/decoder stack instead of decaying per layer
Tensor init_conv_weight(std::vector<std::int64_t> shape, std::int64_t fan_in,
                        std::mt19937_64& rng) {
  const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
  return Tensor::rand_uniform(std::move(shape), rng, -bound, bound);
}

}  // namespace

std::int64_t CodecConfig::stride_product() const {
  std::int64_t s = 1;
  for (int v : strides) s *= v;
  return s;
}

void CodecConfig::validate() const {
  check_arg(sample_rate > 0, "codec: sample_rate must be positive");
  check_arg(!strides.empty(), "codec: at least one stride stage required");
  for (int s : strides)
    check_arg(s >= 1, "codec: strides must be >= 1, got " + std::to_string(s));
  check_arg(base_channels >= 1, "codec: base_channels must be >= 1");
  check_arg(latent_dim >= 1, "codec: latent_dim must be >= 1");
  check_arg(n_codebooks >= 1, "codec: n_codebooks must be >= 1");
  check_arg(codebook_size >= 2, "codec: codebook_size must be >= 2");
  check_arg(snake_alpha_init > 0.0, "codec: snake_alpha_init must be positive");
}

CodecModel::CodecModel(CodecConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  const int n_stages = static_cast<int>(cfg_.strides.size());
  const std::int64_t d = cfg_.latent_dim;

  // encoder: 1 -> base, then double channels per strided stage, then -> D
  std::int64_t ch = cfg_.base_channels;
  encoder.conv_in = {init_conv_weight({ch, 1, 7}, 7, rng), Tensor::zeros({ch}), 1, 3};
  for (int i = 0; i < n_stages; ++i) {
    const std::int64_t s = cfg_.strides[static_cast<std::size_t>(i)];
    const std::int64_t p = ceil_div2(s);
    const std::int64_t k = s + 2 * p;
    const std::int64_t next = ch * 2;
    encoder.stage_act.push_back({Tensor::full({ch}, cfg_.snake_alpha_init)});
    encoder.stage_down.push_back(
        {init_conv_weight({next, ch, k}, ch * k, rng), Tensor::zeros({next}), s, p});
    ch = next;
  }
  encoder.out_act = {Tensor::full({ch}, cfg_.snake_alpha_init)};
  encoder.conv_out = {init_conv_weight({d, ch, 3}, ch * 3, rng), Tensor::zeros({d}), 1, 1};

  // decoder mirrors the encoder: D -> top channels, halve per stage, -> 1
  decoder.conv_in = {init_conv_weight({ch, d, 7}, d * 7, rng), Tensor::zeros({ch}), 1, 3};
  for (int i = n_stages - 1; i >= 0; --i) {
    const std::int64_t s = cfg_.strides[static_cast<std::size_t>(i)];
    const std::int64_t p = ceil_div2(s);
    const std::int64_t k = s + 2 * p;
    const std::int64_t next = ch / 2;
    decoder.stage_act.push_back({Tensor::full({ch}, cfg_.snake_alpha_init)});
    decoder.stage_up.push_back(
        {init_conv_weight({ch, next, k}, ch * k, rng), Tensor::zeros({next}), s, p});
    ch = next;
  }
  decoder.out_act = {Tensor::full({ch}, cfg_.snake_alpha_init)};
  decoder.conv_out = {init_conv_weight({1, ch, 7}, ch * 7, rng), Tensor::zeros({1}), 1, 3};

  for (int q = 0; q < cfg_.n_codebooks; ++q) {
    Tensor cb = Tensor::randn({cfg_.codebook_size, d}, rng, 0.3);
    for (std::int64_t j = 0; j < d; ++j) cb.data()[j] = 0.0;  // reserved zero codeword
    rvq.codebooks.push_back(cb);
  }
}

Tensor CodecModel::encode(const Tensor& wave) const {
  check_arg(wave.defined() && wave.rank() == 1, "encode: expects a 1-d waveform");
  const std::int64_t length = wave.dim(0);
  const std::int64_t s = stride_product();
  check_arg(length > 0, "encode: empty input");
  check_arg(length % s == 0, "encode: input length " + std::to_string(length) +
                                 " is not a multiple of the stride product " + std::to_string(s));
  Tensor h = reshape(wave, {1, length});
  h = conv1d(h, encoder.conv_in.weight, encoder.conv_in.bias, 1, encoder.conv_in.padding);
  for (std::size_t i = 0; i < encoder.stage_down.size(); ++i) {
    h = snake(h, encoder.stage_act[i].alpha);
    const ConvSpec& cs = encoder.stage_down[i];
    h = conv1d(h, cs.weight, cs.bias, cs.stride, cs.padding);
  }
  h = snake(h, encoder.out_act.alpha);
  h = conv1d(h, encoder.conv_out.weight, encoder.conv_out.bias, 1, encoder.conv_out.padding);
  return h;
}

QuantizeResult CodecModel::quantize(const Tensor& latent) const {
  check_arg(latent.defined() && latent.rank() == 2 && latent.dim(0) == cfg_.latent_dim,
            "quantize: latent must be [D,T] with D=" + std::to_string(cfg_.latent_dim));
  check_arg(latent.all_finite(), "quantize: latent contains non-finite values");
  const std::int64_t d = latent.dim(0), t_dim = latent.dim(1);
  const std::int64_t k_size = cfg_.codebook_size;

  QuantizeResult result;
  result.codes.assign(static_cast<std::size_t>(cfg_.n_codebooks),
                      std::vector<std::int32_t>(static_cast<std::size_t>(t_dim), 0));

  // greedy nearest-neighbor per stage on the running residual
  std::vector<double> residual(latent.values());
  for (int q = 0; q < cfg_.n_codebooks; ++q) {
    const Tensor& cb = rvq.codebooks[static_cast<std::size_t>(q)];
    for (std::int64_t t = 0; t < t_dim; ++t) {
      std::int32_t best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::int64_t k = 0; k < k_size; ++k) {
        const double* cw = cb.data() + k * d;
        double dist = 0.0;
        for (std::int64_t j = 0; j < d; ++j) {
          const double diff = residual[static_cast<std::size_t>(j * t_dim + t)] - cw[j];
          dist += diff * diff;
        }
        if (dist < best_dist) {
          best_dist = dist;
          best = static_cast<std::int32_t>(k);
        }
      }
      result.codes[static_cast<std::size_t>(q)][static_cast<std::size_t>(t)] = best;
      const double* cw = cb.data() + best * d;
      for (std::int64_t j = 0; j < d; ++j)
        residual[static_cast<std::size_t>(j * t_dim + t)] -= cw[j];
    }
  }

  Tensor q_values = decode_codes(result.codes);
  result.quantized = straight_through(latent, q_values.values());

  Tensor q_const = Tensor::from(q_values.shape(), q_values.values());
  result.commit_loss = sq_mean(sub(latent, q_const));

  // codebook pathway: differentiable in the codeword vectors only
  Tensor latent_const = Tensor::from(latent.shape(), latent.values());
  Tensor q_diff;
  for (int q = 0; q < cfg_.n_codebooks; ++q) {
    Tensor stage = embed_rows(rvq.codebooks[static_cast<std::size_t>(q)],
                              result.codes[static_cast<std::size_t>(q)]);
    q_diff = q == 0 ? stage : add(q_diff, stage);
  }
  result.codebook_loss = sq_mean(sub(q_diff, latent_const));
  return result;
}

Tensor CodecModel::decode(const Tensor& quantized) const {
  check_arg(quantized.defined() && quantized.rank() == 2 &&
                quantized.dim(0) == cfg_.latent_dim,
            "decode: input must be [D,T] with D=" + std::to_string(cfg_.latent_dim));
  Tensor h = conv1d(quantized, decoder.conv_in.weight, decoder.conv_in.bias, 1,
                    decoder.conv_in.padding);
  for (std::size_t i = 0; i < decoder.stage_up.size(); ++i) {
    h = snake(h, decoder.stage_act[i].alpha);
    const ConvSpec& cs = decoder.stage_up[i];
    h = conv_transpose1d(h, cs.weight, cs.bias, cs.stride, cs.padding);
  }
  h = snake(h, decoder.out_act.alpha);
  h = conv1d(h, decoder.conv_out.weight, decoder.conv_out.bias, 1, decoder.conv_out.padding);
  h = tanh(h);
  return reshape(h, {h.dim(1)});
}

Tensor CodecModel::decode_codes(const std::vector<std::vector<std::int32_t>>& codes) const {
  check_arg(codes.size() == static_cast<std::size_t>(cfg_.n_codebooks),
            "decode_codes: expected " + std::to_string(cfg_.n_codebooks) + " code rows, got " +
                std::to_string(codes.size()));
  const std::int64_t t_dim = static_cast<std::int64_t>(codes[0].size());
  const std::int64_t d = cfg_.latent_dim;
  Tensor out = Tensor::zeros({d, t_dim});
  for (int q = 0; q < cfg_.n_codebooks; ++q) {
    const auto& row = codes[static_cast<std::size_t>(q)];
    check_arg(static_cast<std::int64_t>(row.size()) == t_dim,
              "decode_codes: ragged code rows");
    const Tensor& cb = rvq.codebooks[static_cast<std::size_t>(q)];
    for (std::int64_t t = 0; t < t_dim; ++t) {
      const std::int32_t code = row[static_cast<std::size_t>(t)];
      check_arg(code >= 0 && code < cfg_.codebook_size,
                "decode_codes: code " + std::to_string(code) + " out of range");
      const double* cw = cb.data() + code * d;
      for (std::int64_t j = 0; j < d; ++j) out.data()[j * t_dim + t] += cw[j];
    }
  }
  return out;
}

std::vector<NamedParam> CodecModel::parameters() {
  std::vector<NamedParam> out;
  auto conv = [&out](const std::string& prefix, ConvSpec& c) {
    out.push_back({prefix + ".weight", c.weight});
    out.push_back({prefix + ".bias", c.bias});
  };
  conv("codec.enc.conv_in", encoder.conv_in);
  for (std::size_t i = 0; i < encoder.stage_down.size(); ++i) {
    out.push_back({"codec.enc.stage" + std::to_string(i) + ".alpha",
                   encoder.stage_act[i].alpha});
    conv("codec.enc.stage" + std::to_string(i) + ".down", encoder.stage_down[i]);
  }
  out.push_back({"codec.enc.out.alpha", encoder.out_act.alpha});
  conv("codec.enc.conv_out", encoder.conv_out);
  conv("codec.dec.conv_in", decoder.conv_in);
  for (std::size_t i = 0; i < decoder.stage_up.size(); ++i) {
    out.push_back({"codec.dec.stage" + std::to_string(i) + ".alpha",
                   decoder.stage_act[i].alpha});
    conv("codec.dec.stage" + std::to_string(i) + ".up", decoder.stage_up[i]);
  }
  out.push_back({"codec.dec.out.alpha", decoder.out_act.alpha});
  conv("codec.dec.conv_out", decoder.conv_out);
  for (std::size_t q = 0; q < rvq.codebooks.size(); ++q)
    out.push_back({"codec.rvq.codebook" + std::to_string(q), rvq.codebooks[q]});
  return out;
}

void CodecModel::set_trainable(bool trainable) {
  auto params = parameters();
  set_requires_grad(params, trainable);
}

void CodecModel::mask_frozen_codeword_grads() {
  for (Tensor& cb : rvq.codebooks) {
    if (!cb.has_grad()) continue;
    const std::int64_t d = cb.dim(1);
    for (std::int64_t j = 0; j < d; ++j) cb.grad()[static_cast<std::size_t>(j)] = 0.0;
  }
}

void CodecModel::init_codebooks_from_latents(const std::vector<Tensor>& latents,
                                             std::uint64_t seed) {
  const std::int64_t d = cfg_.latent_dim;
  std::vector<std::vector<double>> pool;
  for (const Tensor& latent : latents) {
    check_arg(latent.rank() == 2 && latent.dim(0) == d,
              "init_codebooks_from_latents: latents must be [D,T]");
    for (std::int64_t t = 0; t < latent.dim(1); ++t) {
      std::vector<double> col(static_cast<std::size_t>(d));
      for (std::int64_t j = 0; j < d; ++j)
        col[static_cast<std::size_t>(j)] = latent.at(j, t);
      pool.push_back(std::move(col));
    }
  }
  check_arg(!pool.empty(), "init_codebooks_from_latents: empty latent pool");

  std::mt19937_64 rng(seed);
  for (Tensor& cb : rvq.codebooks) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::int64_t k = 1; k < cfg_.codebook_size; ++k) {
      const std::vector<double>& col = pool[pick(rng)];
      for (std::int64_t j = 0; j < d; ++j) cb.at(k, j) = col[static_cast<std::size_t>(j)];
    }
    // next stage draws from this stage's residuals
    for (std::vector<double>& col : pool) {
      std::int64_t best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::int64_t k = 0; k < cfg_.codebook_size; ++k) {
        double dist = 0.0;
        for (std::int64_t j = 0; j < d; ++j) {
          const double diff = col[static_cast<std::size_t>(j)] - cb.at(k, j);
          dist += diff * diff;
        }
        if (dist < best_dist) {
          best_dist = dist;
          best = k;
        }
      }
      for (std::int64_t j = 0; j < d; ++j) col[static_cast<std::size_t>(j)] -= cb.at(best, j);
    }
  }
}

Tensor pad_to_multiple(const Tensor& wave, std::int64_t multiple) {
  check_arg(wave.defined() && wave.rank() == 1, "pad_to_multiple: expects a 1-d waveform");
  check_arg(multiple >= 1, "pad_to_multiple: multiple must be >= 1");
  const std::int64_t length = wave.dim(0);
  const std::int64_t padded = ((length + multiple - 1) / multiple) * multiple;
  if (padded == length) return wave;
  std::vector<double> data(wave.values());
  data.resize(static_cast<std::size_t>(padded), 0.0);
  return Tensor::from({padded}, std::move(data));
}

}  // namespace lse
