// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/losses.hpp"

#include <string>

#include "lse/common.hpp"
#include "lse/ops.hpp"

namespace lse {

void LossWeights::validate() const {
  check_arg(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0,
            "loss weights must be non-negative");
}

Tensor emb_loss(const Tensor& x_e, const Tensor& y_h) {
  check_arg(x_e.shape() == y_h.shape(),
            "emb_loss: latent shape mismatch " + shape_str(x_e.shape()) + " vs " +
                shape_str(y_h.shape()));
  return abs_mean(sub(x_e, y_h));
}

Tensor time_loss(const Tensor& x_out, const Tensor& y_out) {
  check_arg(x_out.numel() == y_out.numel(),
            "time_loss: waveform length mismatch " + std::to_string(x_out.numel()) + " vs " +
                std::to_string(y_out.numel()));
  return abs_mean(sub(x_out, y_out));
}

Tensor freq_loss(const Tensor& x_out, const Tensor& y_out, const MelTransform& mel) {
  check_arg(x_out.numel() == y_out.numel(),
            "freq_loss: waveform length mismatch " + std::to_string(x_out.numel()) + " vs " +
                std::to_string(y_out.numel()));
  return sq_mean(sub(mel(x_out), mel(y_out)));
}

Tensor overall_loss(const Tensor& l_emb, const Tensor& l_time, const Tensor& l_freq,
                    const LossWeights& w) {
  w.validate();
  return add(add(scale(l_emb, w.alpha), scale(l_time, w.beta)), scale(l_freq, w.gamma));
}

double overall_loss_value(double l_emb, double l_time, double l_freq, const LossWeights& w) {
  // same association order as the tensor path
  return (l_emb * w.alpha + l_time * w.beta) + l_freq * w.gamma;
}

Targets make_targets(const Tensor& x_in, const CodecModel& codec) {
  NoGradGuard no_grad;
  Targets t;
  t.x_e = codec.encode(x_in);
  QuantizeResult q = codec.quantize(t.x_e);
  t.x_out = codec.decode(q.quantized);
  return t;
}

}  // namespace lse
