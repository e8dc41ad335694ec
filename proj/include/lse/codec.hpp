// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <vector>

#include "lse/params.hpp"
#include "lse/tensor.hpp"

namespace lse {

struct CodecConfig {
  int sample_rate = 16000;
  std::vector<int> strides = {2, 4, 5, 8};  // product = total time compression
  int base_channels = 16;
  int latent_dim = 64;    // D
  int n_codebooks = 4;    // N_q
  int codebook_size = 64; // K, includes the frozen all-zeros codeword at index 0
  double snake_alpha_init = 1.0;
  // pretraining loss weights
  double wave_l1_weight = 1.0;
  double mel_l2_weight = 1.0;
  double commit_weight = 0.25;
  double codebook_weight = 1.0;

  std::int64_t stride_product() const;
  void validate() const;
};

struct ConvSpec {
  Tensor weight;  // conv1d [C_out,C_in,k]; conv_transpose1d [C_in,C_out,k]
  Tensor bias;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
};

struct SnakeSpec {
  Tensor alpha;  // [C]
};

struct EncoderState {
  ConvSpec conv_in;
  std::vector<SnakeSpec> stage_act;
  std::vector<ConvSpec> stage_down;
  SnakeSpec out_act;
  ConvSpec conv_out;
};

struct DecoderState {
  ConvSpec conv_in;
  std::vector<SnakeSpec> stage_act;
  std::vector<ConvSpec> stage_up;  // transposed convs
  SnakeSpec out_act;
  ConvSpec conv_out;
};

struct ResidualVQ {
  std::vector<Tensor> codebooks;  // N_q tensors of shape [K,D]
};

struct QuantizeResult {
  Tensor quantized;  // [D,T]; values are the exact codeword sums, gradient
                     // w.r.t. the input latent is the straight-through identity
  std::vector<std::vector<std::int32_t>> codes;  // [N_q][T]
  Tensor commit_loss;    // mean ||latent - sg(quantized)||^2, grads into latent
  Tensor codebook_loss;  // mean ||sg(latent) - quantized||^2, grads into codebooks
};

/// Miniature DAC-style codec: strided-conv encoder to a [D,T] latent,
/// greedy residual VQ, transposed-conv decoder back to a waveform. Every
/// strided stage uses kernel = stride + 2*padding so that encode/decode are
/// exact length inverses on multiples of the stride product.
class CodecModel {
 public:
  CodecModel(CodecConfig cfg, std::uint64_t seed);

  const CodecConfig& config() const { return cfg_; }
  std::int64_t stride_product() const { return cfg_.stride_product(); }

  /// wave [L] -> latent [D, L/S]; L must be a positive multiple of S.
  Tensor encode(const Tensor& wave) const;

  /// Greedy stage-by-stage residual quantization; ties select the lowest
  /// codeword index. Index 0 of every codebook is the all-zeros codeword, so
  /// the residual norm never increases across stages.
  QuantizeResult quantize(const Tensor& latent) const;

  /// quantized [D,T] -> wave [T*S], tanh-bounded to [-1,1].
  Tensor decode(const Tensor& quantized) const;

  /// Codeword sum for stored codes; bit-identical to QuantizeResult::quantized.
  Tensor decode_codes(const std::vector<std::vector<std::int32_t>>& codes) const;

  std::vector<NamedParam> parameters();
  void set_trainable(bool trainable);
  /// Clears gradient entries of the reserved all-zeros codewords so the
  /// optimizer never moves them.
  void mask_frozen_codeword_grads();

  /// Seeds codewords 1..K-1 of every stage from real latent frames (stage i
  /// samples the residuals left by stages < i), leaving index 0 at zero.
  /// Without this a cold codebook sits far from the latents and every frame
  /// quantizes to the zero codeword, stalling pretraining.
  void init_codebooks_from_latents(const std::vector<Tensor>& latents, std::uint64_t seed);

  EncoderState encoder;
  DecoderState decoder;
  ResidualVQ rvq;

 private:
  CodecConfig cfg_;
};

/// Right-pad with zeros to the next multiple of `multiple` (no-op when
/// already aligned). Used by the enhance pipeline; output is truncated back
/// to the original length after decoding.
Tensor pad_to_multiple(const Tensor& wave, std::int64_t multiple);

}  // namespace lse
