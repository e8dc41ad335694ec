// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <vector>

#include "lse/params.hpp"
#include "lse/tensor.hpp"

namespace lse {

struct SEConfig {
  int n_blocks = 8;
  int embed_dim = 256;  // E
  int n_heads = 4;
  int ffn_mult = 4;
  int modulation_kernel = 3;
  bool positional_encoding = true;

  void validate() const;
};

struct TransformerBlock {
  Tensor ln1_gamma, ln1_beta;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_gamma, ln2_beta;
  Tensor w1, b1, w2, b2;
};

struct ModulationBlock {
  Tensor gate_w, gate_b;   // conv path that gates through a sigmoid
  Tensor feat_w, feat_b;   // conv path through a snake activation
  Tensor feat_alpha;
  Tensor out_alpha;        // snake after the gated product
};

/// Latent-space enhancement network: input projection D->E, pre-norm
/// transformer stack with sinusoidal positions, gated modulation block,
/// single output projection E->D. Time length is preserved.
class SEModel {
 public:
  SEModel(SEConfig cfg, int latent_dim, std::uint64_t seed);

  /// y_e [D,T] -> y_h [D,T]
  Tensor forward(const Tensor& y_e) const;

  Tensor transformer_block_forward(const TransformerBlock& block, const Tensor& x) const;
  Tensor modulation_forward(const Tensor& x) const;

  std::vector<NamedParam> parameters();
  std::int64_t parameter_count();

  const SEConfig& config() const { return cfg_; }
  int latent_dim() const { return latent_dim_; }

  Tensor in_w, in_b;
  std::vector<TransformerBlock> blocks;
  ModulationBlock modulation;
  Tensor out_w, out_b;

 private:
  SEConfig cfg_;
  int latent_dim_ = 0;
};

/// Sinusoidal positions, shape [dim, frames]; constant (never trained).
Tensor sinusoidal_positions(std::int64_t dim, std::int64_t frames);

}  // namespace lse
