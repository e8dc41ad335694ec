// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <vector>

#include "lse/tensor.hpp"

namespace lse {

struct MelConfig {
  int sample_rate = 16000;
  int n_fft = 1024;
  int hop = 256;
  int n_mels = 80;
  double f_min = 0.0;
  double f_max = 8000.0;
  double power = 2.0;  // spectrogram exponent; 2 = power spectrum

  void validate() const;
  std::int64_t frames_for(std::int64_t samples) const;
};

/// Hann-windowed STFT magnitude^power through a triangular mel filterbank.
/// Spectra are amplitude-calibrated (a full-scale sinusoid at a bin center
/// gives |X| close to 1) so loss magnitudes stay O(1). Differentiable; uses a
/// radix-2 FFT when n_fft is a power of two and the direct DFT otherwise.
class MelTransform {
 public:
  explicit MelTransform(const MelConfig& cfg);

  Tensor operator()(const Tensor& wave) const;

  const MelConfig& config() const;
  /// Filterbank weights, row-major [n_mels, n_fft/2 + 1].
  const std::vector<double>& filterbank() const;
  std::int64_t n_bins() const;

 private:
  struct State;
  std::shared_ptr<const State> state_;
};

/// One-shot convenience wrapper around MelTransform.
Tensor mel_spectrogram(const Tensor& wave, const MelConfig& cfg);

// Real-input DFT, bins 0..N/2, X[k] = sum_t x[t] exp(-2*pi*i*k*t/N).
// The direct path is the correctness oracle for the radix-2 path.
void rdft_direct(const std::vector<double>& x, std::vector<double>& re, std::vector<double>& im);
void rdft_radix2(const std::vector<double>& x, std::vector<double>& re, std::vector<double>& im);

// In-place complex radix-2 FFT; sign=-1 forward, +1 unnormalized inverse.
void fft_inplace(std::vector<double>& re, std::vector<double>& im, int sign);

/// Gain g so that clean + g*noise has the requested SNR:
/// g = sqrt(P_clean / (P_noise * 10^(snr_db/10))). Rejects silent noise.
double snr_gain(const Tensor& clean, const Tensor& noise, double target_snr_db);

/// 10*log10(P_a / P_b); both signals must be non-silent.
double measured_snr_db(const Tensor& signal, const Tensor& noise);

/// Scale-invariant SNR: estimate is projected onto the reference, and the
/// energy ratio of the projection to the residual is reported in dB, capped
/// at +60 (floored at -120 to keep reports finite). Rejects zero reference.
double si_snr_db(const Tensor& reference, const Tensor& estimate);

}  // namespace lse
