// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "lse/codec.hpp"
#include "lse/dsp.hpp"
#include "lse/tensor.hpp"

namespace lse {

struct LossWeights {
  double alpha = 1.0;
  double beta = 500.0;
  double gamma = 1.0 / 11.0;

  void validate() const;
};

struct LossBreakdown {
  double l_emb = 0.0;
  double l_time = 0.0;
  double l_freq = 0.0;
  double l_overall = 0.0;
};

/// Mean absolute difference over all D*T latent entries.
Tensor emb_loss(const Tensor& x_e, const Tensor& y_h);

/// Mean absolute sample difference between two waveforms.
Tensor time_loss(const Tensor& x_out, const Tensor& y_out);

/// Mean squared difference of mel spectrograms.
Tensor freq_loss(const Tensor& x_out, const Tensor& y_out, const MelTransform& mel);

/// alpha*l_emb + beta*l_time + gamma*l_freq
Tensor overall_loss(const Tensor& l_emb, const Tensor& l_time, const Tensor& l_freq,
                    const LossWeights& w);
double overall_loss_value(double l_emb, double l_time, double l_freq, const LossWeights& w);

struct Targets {
  Tensor x_e;    // clean latent [D,T]
  Tensor x_out;  // clean speech after a full codec round trip, [L]
};

/// Clean-target path through the frozen codec; no gradients are recorded.
Targets make_targets(const Tensor& x_in, const CodecModel& codec);

}  // namespace lse
