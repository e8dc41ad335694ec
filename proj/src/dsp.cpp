// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lse/common.hpp"

namespace lse {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(std::int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

void MelConfig::validate() const {
  check_arg(sample_rate > 0, "mel: sample_rate must be positive");
  check_arg(n_fft >= 2, "mel: n_fft must be >= 2, got " + std::to_string(n_fft));
  check_arg(hop >= 1 && hop <= n_fft,
            "mel: hop must lie in [1, n_fft], got " + std::to_string(hop));
  check_arg(n_mels >= 1, "mel: n_mels must be >= 1");
  check_arg(f_min >= 0.0 && f_min < f_max, "mel: need 0 <= f_min < f_max");
  check_arg(f_max <= sample_rate / 2.0 + 1e-9,
            "mel: f_max " + std::to_string(f_max) + " exceeds Nyquist " +
                std::to_string(sample_rate / 2.0));
  check_arg(power > 0.0, "mel: power must be positive");
}

std::int64_t MelConfig::frames_for(std::int64_t samples) const {
  check_arg(samples >= n_fft, "mel: input of " + std::to_string(samples) +
                                  " samples is shorter than one frame (n_fft=" +
                                  std::to_string(n_fft) + ")");
  return (samples - n_fft) / hop + 1;
}

void fft_inplace(std::vector<double>& re, std::vector<double>& im, int sign) {
  const std::size_t n = re.size();
  check_arg(is_pow2(static_cast<std::int64_t>(n)) && im.size() == n,
            "fft_inplace: size must be a power of two");
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * kPi / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (std::size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::size_t a = i + j, b = i + j + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

void rdft_direct(const std::vector<double>& x, std::vector<double>& re, std::vector<double>& im) {
  const std::size_t n = x.size();
  check_arg(n >= 2, "rdft_direct: input too short");
  const std::size_t bins = n / 2 + 1;
  re.assign(bins, 0.0);
  im.assign(bins, 0.0);
  // one exact table entry per root of unity; indexed by (k*t) mod n
  std::vector<double> cos_tab(n), sin_tab(n);
  for (std::size_t j = 0; j < n; ++j) {
    cos_tab[j] = std::cos(2.0 * kPi * static_cast<double>(j) / static_cast<double>(n));
    sin_tab[j] = std::sin(2.0 * kPi * static_cast<double>(j) / static_cast<double>(n));
  }
  for (std::size_t k = 0; k < bins; ++k) {
    double sr = 0.0, si = 0.0;
    std::size_t idx = 0;
    for (std::size_t t = 0; t < n; ++t) {
      sr += x[t] * cos_tab[idx];
      si -= x[t] * sin_tab[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    re[k] = sr;
    im[k] = si;
  }
}

void rdft_radix2(const std::vector<double>& x, std::vector<double>& re, std::vector<double>& im) {
  const std::size_t n = x.size();
  check_arg(is_pow2(static_cast<std::int64_t>(n)), "rdft_radix2: size must be a power of two");
  std::vector<double> cre(x), cim(n, 0.0);
  fft_inplace(cre, cim, -1);
  const std::size_t bins = n / 2 + 1;
  re.assign(cre.begin(), cre.begin() + static_cast<std::ptrdiff_t>(bins));
  im.assign(cim.begin(), cim.begin() + static_cast<std::ptrdiff_t>(bins));
}

struct MelTransform::State {
  MelConfig cfg;
  std::int64_t bins = 0;
  double coef = 1.0;                 // 2 / sum(window)
  std::vector<double> window;        // Hann, periodic
  std::vector<double> filters;       // [n_mels, bins]
  bool use_fft = false;
  std::vector<double> cos_tab, sin_tab;  // direct path, indexed by (k*t) mod n_fft

  void rdft(const std::vector<double>& frame, std::vector<double>& re,
            std::vector<double>& im) const {
    if (use_fft) {
      std::vector<double> cre(frame), cim(frame.size(), 0.0);
      fft_inplace(cre, cim, -1);
      re.assign(cre.begin(), cre.begin() + bins);
      im.assign(cim.begin(), cim.begin() + bins);
    } else {
      const std::size_t n = frame.size();
      re.assign(static_cast<std::size_t>(bins), 0.0);
      im.assign(static_cast<std::size_t>(bins), 0.0);
      for (std::int64_t k = 0; k < bins; ++k) {
        double sr = 0.0, si = 0.0;
        std::size_t idx = 0;
        for (std::size_t t = 0; t < n; ++t) {
          sr += frame[t] * cos_tab[idx];
          si -= frame[t] * sin_tab[idx];
          idx += static_cast<std::size_t>(k);
          if (idx >= n) idx -= n;
        }
        re[static_cast<std::size_t>(k)] = sr;
        im[static_cast<std::size_t>(k)] = si;
      }
    }
  }

  // adjoint of the frame -> (re, im) map: dframe[t] = sum_k gre[k]cos + gim[k]*(-sin)
  void rdft_adjoint(const std::vector<double>& gre, const std::vector<double>& gim,
                    std::vector<double>& dframe) const {
    const std::size_t n = static_cast<std::size_t>(cfg.n_fft);
    dframe.assign(n, 0.0);
    if (use_fft) {
      std::vector<double> hre(n, 0.0), him(n, 0.0);
      for (std::int64_t k = 0; k < bins; ++k) {
        hre[static_cast<std::size_t>(k)] = gre[static_cast<std::size_t>(k)];
        him[static_cast<std::size_t>(k)] = gim[static_cast<std::size_t>(k)];
      }
      fft_inplace(hre, him, +1);  // sum_k H[k] e^{+i w k t}
      for (std::size_t t = 0; t < n; ++t) dframe[t] = hre[t];
    } else {
      for (std::int64_t k = 0; k < bins; ++k) {
        const double gr = gre[static_cast<std::size_t>(k)];
        const double gi = gim[static_cast<std::size_t>(k)];
        if (gr == 0.0 && gi == 0.0) continue;
        std::size_t idx = 0;
        for (std::size_t t = 0; t < n; ++t) {
          dframe[t] += gr * cos_tab[idx] - gi * sin_tab[idx];
          idx += static_cast<std::size_t>(k);
          if (idx >= n) idx -= n;
        }
      }
    }
  }
};

MelTransform::MelTransform(const MelConfig& cfg) {
  cfg.validate();
  auto st = std::make_shared<State>();
  st->cfg = cfg;
  st->bins = cfg.n_fft / 2 + 1;
  st->use_fft = is_pow2(cfg.n_fft);

  const std::size_t n = static_cast<std::size_t>(cfg.n_fft);
  st->window.resize(n);
  double wsum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    st->window[t] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(t) / static_cast<double>(n));
    wsum += st->window[t];
  }
  st->coef = 2.0 / wsum;

  if (!st->use_fft) {
    st->cos_tab.resize(n);
    st->sin_tab.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      st->cos_tab[j] = std::cos(2.0 * kPi * static_cast<double>(j) / static_cast<double>(n));
      st->sin_tab[j] = std::sin(2.0 * kPi * static_cast<double>(j) / static_cast<double>(n));
    }
  }

  // triangular filters, n_mels+2 edges uniform on the mel scale
  const double mel_lo = hz_to_mel(cfg.f_min), mel_hi = hz_to_mel(cfg.f_max);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels) + 2);
  for (std::size_t m = 0; m < edges.size(); ++m)
    edges[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(m) /
                                      static_cast<double>(cfg.n_mels + 1));
  st->filters.assign(static_cast<std::size_t>(cfg.n_mels * st->bins), 0.0);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[static_cast<std::size_t>(m)];
    const double center = edges[static_cast<std::size_t>(m) + 1];
    const double right = edges[static_cast<std::size_t>(m) + 2];
    for (std::int64_t k = 0; k < st->bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
      double w = 0.0;
      if (f > left && f < right)
        w = f <= center ? (f - left) / (center - left) : (right - f) / (right - center);
      st->filters[static_cast<std::size_t>(m * st->bins + k)] = w;
    }
  }
  state_ = std::move(st);
}

const MelConfig& MelTransform::config() const { return state_->cfg; }
const std::vector<double>& MelTransform::filterbank() const { return state_->filters; }
std::int64_t MelTransform::n_bins() const { return state_->bins; }

Tensor MelTransform::operator()(const Tensor& wave) const {
  check_arg(wave.defined() && wave.rank() == 1,
            "mel: expects a 1-d waveform, got " +
                (wave.defined() ? shape_str(wave.shape()) : std::string("<empty>")));
  const auto& st = *state_;
  const MelConfig& cfg = st.cfg;
  const std::int64_t length = wave.dim(0);
  const std::int64_t n_frames = cfg.frames_for(length);
  const std::int64_t bins = st.bins;

  const bool taped = detail::taping_enabled() && wave.requires_grad();

  Tensor out = Tensor::zeros({cfg.n_mels, n_frames});
  // saved spectra for backward: [frame][bin]
  std::vector<std::vector<double>> saved_re, saved_im, saved_magsq;
  if (taped) {
    saved_re.resize(static_cast<std::size_t>(n_frames));
    saved_im.resize(static_cast<std::size_t>(n_frames));
    if (cfg.power != 2.0) saved_magsq.resize(static_cast<std::size_t>(n_frames));
  }

  std::vector<double> frame(static_cast<std::size_t>(cfg.n_fft));
  std::vector<double> re, im, spec(static_cast<std::size_t>(bins));
  for (std::int64_t fidx = 0; fidx < n_frames; ++fidx) {
    const double* base = wave.data() + fidx * cfg.hop;
    for (std::int64_t t = 0; t < cfg.n_fft; ++t)
      frame[static_cast<std::size_t>(t)] = base[t] * st.window[static_cast<std::size_t>(t)];
    st.rdft(frame, re, im);
    for (std::int64_t k = 0; k < bins; ++k) {
      re[static_cast<std::size_t>(k)] *= st.coef;
      im[static_cast<std::size_t>(k)] *= st.coef;
      const double magsq = re[static_cast<std::size_t>(k)] * re[static_cast<std::size_t>(k)] +
                           im[static_cast<std::size_t>(k)] * im[static_cast<std::size_t>(k)];
      spec[static_cast<std::size_t>(k)] =
          cfg.power == 2.0 ? magsq : std::pow(magsq, cfg.power / 2.0);
      if (taped && cfg.power != 2.0)
        saved_magsq[static_cast<std::size_t>(fidx)].push_back(magsq);
    }
    for (int m = 0; m < cfg.n_mels; ++m) {
      const double* frow = st.filters.data() + m * bins;
      double acc = 0.0;
      for (std::int64_t k = 0; k < bins; ++k) acc += frow[k] * spec[static_cast<std::size_t>(k)];
      out.data()[m * n_frames + fidx] = acc;
    }
    if (taped) {
      saved_re[static_cast<std::size_t>(fidx)] = re;
      saved_im[static_cast<std::size_t>(fidx)] = im;
    }
  }

  if (taped) {
    out.set_requires_grad(true);
    auto wi = wave.impl_, oi = out.impl_;
    auto st_ptr = state_;
    Tape::active()->record("mel_spectrogram",
                           [wi, oi, st_ptr, n_frames, bins, saved_re = std::move(saved_re),
                            saved_im = std::move(saved_im),
                            saved_magsq = std::move(saved_magsq)] {
      const double* g = detail::grad_read_ptr(oi.get());
      if (!g) return;
      double* gw = detail::grad_accum_ptr(wi.get());
      if (!gw) return;
      const auto& st = *st_ptr;
      const MelConfig& cfg = st.cfg;
      std::vector<double> gspec(static_cast<std::size_t>(bins));
      std::vector<double> gre(static_cast<std::size_t>(bins)), gim(static_cast<std::size_t>(bins));
      std::vector<double> dframe;
      for (std::int64_t fidx = 0; fidx < n_frames; ++fidx) {
        // d(mel)/d(spec): transpose filterbank
        for (std::int64_t k = 0; k < bins; ++k) {
          double acc = 0.0;
          for (int m = 0; m < cfg.n_mels; ++m)
            acc += st.filters[static_cast<std::size_t>(m * bins + k)] * g[m * n_frames + fidx];
          gspec[static_cast<std::size_t>(k)] = acc;
        }
        const auto& re = saved_re[static_cast<std::size_t>(fidx)];
        const auto& im = saved_im[static_cast<std::size_t>(fidx)];
        for (std::int64_t k = 0; k < bins; ++k) {
          double dmagsq = gspec[static_cast<std::size_t>(k)];
          if (cfg.power != 2.0) {
            const double magsq = saved_magsq[static_cast<std::size_t>(fidx)]
                                            [static_cast<std::size_t>(k)];
            dmagsq *= magsq > 0.0
                          ? (cfg.power / 2.0) * std::pow(magsq, cfg.power / 2.0 - 1.0)
                          : 0.0;
          }
          gre[static_cast<std::size_t>(k)] = 2.0 * re[static_cast<std::size_t>(k)] * dmagsq;
          gim[static_cast<std::size_t>(k)] = 2.0 * im[static_cast<std::size_t>(k)] * dmagsq;
        }
        st.rdft_adjoint(gre, gim, dframe);
        double* target = gw + fidx * cfg.hop;
        for (std::int64_t t = 0; t < cfg.n_fft; ++t)
          target[t] += st.coef * st.window[static_cast<std::size_t>(t)] *
                       dframe[static_cast<std::size_t>(t)];
      }
    });
  }
  return out;
}

Tensor mel_spectrogram(const Tensor& wave, const MelConfig& cfg) {
  return MelTransform(cfg)(wave);
}

namespace {

double power_of(const Tensor& x) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i) acc += x.data()[i] * x.data()[i];
  return acc / static_cast<double>(x.numel());
}

}  // namespace

double snr_gain(const Tensor& clean, const Tensor& noise, double target_snr_db) {
  check_arg(clean.numel() == noise.numel(),
            "snr_gain: length mismatch, " + std::to_string(clean.numel()) + " vs " +
                std::to_string(noise.numel()));
  const double p_noise = power_of(noise);
  check_arg(p_noise > 0.0, "snr_gain: noise is silent");
  const double p_clean = power_of(clean);
  return std::sqrt(p_clean / (p_noise * std::pow(10.0, target_snr_db / 10.0)));
}

double measured_snr_db(const Tensor& signal, const Tensor& noise) {
  const double ps = power_of(signal), pn = power_of(noise);
  check_arg(ps > 0.0 && pn > 0.0, "measured_snr_db: silent input");
  return 10.0 * std::log10(ps / pn);
}

double si_snr_db(const Tensor& reference, const Tensor& estimate) {
  check_arg(reference.numel() == estimate.numel(),
            "si_snr: length mismatch, " + std::to_string(reference.numel()) + " vs " +
                std::to_string(estimate.numel()));
  const std::int64_t n = reference.numel();
  double dot = 0.0, ref_sq = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    dot += estimate.data()[i] * reference.data()[i];
    ref_sq += reference.data()[i] * reference.data()[i];
  }
  check_arg(ref_sq > 0.0, "si_snr: reference is silent");
  const double proj = dot / ref_sq;
  double target_sq = 0.0, err_sq = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double s = proj * reference.data()[i];
    const double e = estimate.data()[i] - s;
    target_sq += s * s;
    err_sq += e * e;
  }
  if (err_sq == 0.0) return 60.0;
  double v = 10.0 * std::log10(target_sq / err_sq);
  if (!std::isfinite(v)) v = -120.0;
  return std::min(v, 60.0);
}

}  // namespace lse
