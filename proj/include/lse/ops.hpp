// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "lse/tensor.hpp"

namespace lse {

// Elementwise; operands must have identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

// y[c,t] = x[c,t] + b[c]
Tensor add_channel_bias(const Tensor& x, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, std::vector<std::int64_t> shape);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor gelu(const Tensor& x);

/// snake(x) = x + sin^2(alpha*x)/alpha with one alpha per channel.
/// x: [C,T], alpha: [C], alpha > 0 elementwise.
Tensor snake(const Tensor& x, const Tensor& alpha);

/// Softmax over the last dimension of a 2-d tensor; each row sums to 1.
Tensor softmax_rows(const Tensor& x);

/// Normalizes every column (one frame's feature vector) of x: [C,T] to zero
/// mean / unit variance, then applies per-channel affine gamma/beta.
Tensor layer_norm_cols(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps = 1e-12);

Tensor mean(const Tensor& x);
Tensor abs_mean(const Tensor& x);  // L1: mean |x_i|
Tensor sq_mean(const Tensor& x);   // L2: mean x_i^2

/// out[c,t] = bias[c] + sum_{i,j} weight[c,i,j] * input[i, t*stride + j - padding]
/// input: [C_in,T], weight: [C_out,C_in,k], zero padding outside bounds.
/// T_out = floor((T + 2*padding - k)/stride) + 1
Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              std::int64_t stride, std::int64_t padding);

/// Adjoint of conv1d's linear map. weight: [C_in,C_out,k] so conv1d and
/// conv_transpose1d with the same underlying array are exact adjoints.
/// T_out = (T-1)*stride - 2*padding + k
Tensor conv_transpose1d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        std::int64_t stride, std::int64_t padding);

Tensor slice_rows(const Tensor& x, std::int64_t row0, std::int64_t count);
Tensor concat_rows(const std::vector<Tensor>& parts);

/// Forward takes `values` verbatim; backward passes the output gradient to
/// `src` unchanged (straight-through estimator).
Tensor straight_through(const Tensor& src, std::vector<double> values);

/// out[:,t] = codebook[codes[t],:] for codebook [K,D]; backward scatter-adds
/// into the selected rows.
Tensor embed_rows(const Tensor& codebook, const std::vector<std::int32_t>& codes);

}  // namespace lse
