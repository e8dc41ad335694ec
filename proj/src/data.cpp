// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>

#include "lse/common.hpp"
#include "lse/dsp.hpp"

namespace lse {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr std::uint64_t kSaltUtterance = 0x5eed7753ULL;
constexpr std::uint64_t kSaltValSplit = 0x7a11ULL;
constexpr std::uint64_t kSaltOrder = 0x04d3eULL;
constexpr std::uint64_t kSaltValItem = 0xfeedULL;

std::int64_t sample_count(double duration, int sample_rate) {
  const double exact = duration * sample_rate;
  const double rounded = std::round(exact);
  check_arg(std::abs(exact - rounded) < 1e-6,
            "utterance duration " + std::to_string(duration) + " s at " +
                std::to_string(sample_rate) + " Hz is not an integer sample count");
  check_arg(rounded >= 1.0, "utterance duration too short");
  return static_cast<std::int64_t>(rounded);
}

void normalize_peak(std::vector<double>& x, double peak) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m > 0.0) {
    const double s = peak / m;
    for (double& v : x) v *= s;
  }
}

// frequency-domain shaping of white noise; `gain(f_hz)` applies to both
// halves of the spectrum symmetrically so the result stays real
std::vector<double> shaped_noise(std::int64_t length, int sample_rate, std::mt19937_64& rng,
                                 const std::function<double(double)>& gain) {
  std::int64_t padded = 1;
  while (padded < length) padded <<= 1;
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> re(static_cast<std::size_t>(padded)), im(static_cast<std::size_t>(padded), 0.0);
  for (double& v : re) v = dist(rng);
  fft_inplace(re, im, -1);
  for (std::int64_t k = 0; k < padded; ++k) {
    const std::int64_t k_eff = std::min(k, padded - k);
    const double f = static_cast<double>(k_eff) * sample_rate / static_cast<double>(padded);
    const double g = k == 0 ? 0.0 : gain(f);
    re[static_cast<std::size_t>(k)] *= g;
    im[static_cast<std::size_t>(k)] *= g;
  }
  fft_inplace(re, im, +1);
  std::vector<double> out(static_cast<std::size_t>(length));
  for (std::int64_t i = 0; i < length; ++i)
    out[static_cast<std::size_t>(i)] = re[static_cast<std::size_t>(i)] / static_cast<double>(padded);
  return out;
}

}  // namespace

void SnrRange::validate() const {
  check_arg(low_db <= high_db, "snr range: low " + std::to_string(low_db) +
                                   " exceeds high " + std::to_string(high_db));
}

Tensor gen_clean(const UtteranceSpec& spec, int sample_rate) {
  check_arg(spec.kind == UtteranceKind::kPseudoSpeech || spec.kind == UtteranceKind::kToneStack,
            "gen_clean: spec kind is not a clean kind");
  const std::int64_t length = sample_count(spec.duration, sample_rate);
  std::mt19937_64 rng(spec.seed);
  std::vector<double> x(static_cast<std::size_t>(length), 0.0);

  if (spec.kind == UtteranceKind::kToneStack) {
    std::uniform_real_distribution<double> f0_dist(100.0, 400.0);
    const double f0 = spec.f0 > 0.0 ? spec.f0 : f0_dist(rng);
    const int n_harm = 4;
    for (std::int64_t t = 0; t < length; ++t) {
      const double time = static_cast<double>(t) / sample_rate;
      double v = 0.0;
      for (int h = 1; h <= n_harm; ++h) v += std::sin(kTwoPi * f0 * h * time) / h;
      x[static_cast<std::size_t>(t)] = v;
    }
  } else {
    std::uniform_real_distribution<double> f0_dist(90.0, 250.0);
    std::uniform_int_distribution<int> harm_dist(3, 6);
    std::uniform_real_distribution<double> amp_dist(0.6, 1.0);
    std::uniform_real_distribution<double> drift_rate_dist(0.5, 2.0);
    std::uniform_real_distribution<double> syllable_dist(2.0, 5.0);
    std::uniform_real_distribution<double> phase_dist(0.0, kTwoPi);
    const double f0 = f0_dist(rng);
    const int n_harm = harm_dist(rng);
    std::vector<double> amps(static_cast<std::size_t>(n_harm));
    for (int h = 0; h < n_harm; ++h)
      amps[static_cast<std::size_t>(h)] = amp_dist(rng) / static_cast<double>(h + 1);
    const double drift_rate = drift_rate_dist(rng);
    const double drift_phase = phase_dist(rng);
    const double syllable_rate = syllable_dist(rng);
    const double syllable_phase = phase_dist(rng);

    double phase = phase_dist(rng);
    const double edge = 0.02;  // fade in/out, seconds
    const double total = static_cast<double>(length) / sample_rate;
    for (std::int64_t t = 0; t < length; ++t) {
      const double time = static_cast<double>(t) / sample_rate;
      const double f = f0 * (1.0 + 0.03 * std::sin(kTwoPi * drift_rate * time + drift_phase));
      phase += kTwoPi * f / sample_rate;
      double v = 0.0;
      for (int h = 0; h < n_harm; ++h)
        v += amps[static_cast<std::size_t>(h)] * std::sin(static_cast<double>(h + 1) * phase);
      double env = 0.15 + 0.85 * (0.5 - 0.5 * std::cos(kTwoPi * syllable_rate * time +
                                                       syllable_phase));
      env *= std::min(1.0, time / edge) * std::min(1.0, (total - time) / edge);
      x[static_cast<std::size_t>(t)] = env * v;
    }
  }
  normalize_peak(x, 0.6);
  return Tensor::from({length}, std::move(x));
}

Tensor gen_noise(const UtteranceSpec& spec, int sample_rate) {
  const std::int64_t length = sample_count(spec.duration, sample_rate);
  std::mt19937_64 rng(spec.seed);
  std::vector<double> x;
  switch (spec.kind) {
    case UtteranceKind::kWhite: {
      std::normal_distribution<double> dist(0.0, 1.0);
      x.resize(static_cast<std::size_t>(length));
      for (double& v : x) v = dist(rng);
      break;
    }
    case UtteranceKind::kPink:
      x = shaped_noise(length, sample_rate, rng,
                       [](double f) { return 1.0 / std::sqrt(std::max(f, 1.0)); });
      break;
    case UtteranceKind::kBandLimited: {
      std::uniform_real_distribution<double> lo_dist(200.0, 2000.0);
      std::uniform_real_distribution<double> width_dist(2.0, 6.0);
      const double lo = lo_dist(rng);
      const double hi = std::min(lo * width_dist(rng), 0.45 * sample_rate);
      x = shaped_noise(length, sample_rate, rng,
                       [lo, hi](double f) { return (f >= lo && f <= hi) ? 1.0 : 0.0; });
      break;
    }
    default:
      check_arg(false, "gen_noise: spec kind is not a noise kind");
  }
  normalize_peak(x, 0.9);
  return Tensor::from({length}, std::move(x));
}

MixturePair make_mixture(const Tensor& clean, const Tensor& noise, const SnrRange& range,
                         std::mt19937_64& rng) {
  range.validate();
  check_arg(clean.numel() == noise.numel(),
            "make_mixture: length mismatch " + std::to_string(clean.numel()) + " vs " +
                std::to_string(noise.numel()));
  std::uniform_real_distribution<double> snr_dist(range.low_db, range.high_db);
  const double snr_db = snr_dist(rng);
  const double g = snr_gain(clean, noise, snr_db);

  const std::int64_t n = clean.numel();
  std::vector<double> noisy(static_cast<std::size_t>(n));
  double peak = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    noisy[static_cast<std::size_t>(i)] = clean.data()[i] + g * noise.data()[i];
    peak = std::max(peak, std::abs(noisy[static_cast<std::size_t>(i)]));
  }
  std::vector<double> clean_out(clean.values());
  if (peak > 0.99) {
    // scale both signals by the same factor so the realized SNR is unchanged
    const double s = 0.99 / peak;
    for (double& v : noisy) v *= s;
    for (double& v : clean_out) v *= s;
  }
  return {Tensor::from(clean.shape(), std::move(clean_out)),
          Tensor::from(clean.shape(), std::move(noisy)), snr_db};
}

void DataConfig::validate() const {
  check_arg(n_utterances >= 1, "data: n_utterances must be >= 1");
  check_arg(sample_rate > 0, "data: sample_rate must be positive");
  check_arg(duration_s > 0.0 && crop_s > 0.0 && crop_s <= duration_s,
            "data: need 0 < crop_s <= duration_s");
  check_arg(batch_size >= 1, "data: batch_size must be >= 1");
  snr.validate();
}

std::int64_t DataConfig::crop_samples() const {
  return sample_count(crop_s, sample_rate);
}

SyntheticDataset::SyntheticDataset(const DataConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  clean_.reserve(static_cast<std::size_t>(cfg_.n_utterances));
  noise_.reserve(static_cast<std::size_t>(cfg_.n_utterances));
  for (int i = 0; i < cfg_.n_utterances; ++i) {
    const std::uint64_t utt_seed = mix_seed({cfg_.seed, kSaltUtterance, static_cast<std::uint64_t>(i)});
    utt_seeds_.push_back(utt_seed);

    UtteranceSpec clean_spec;
    clean_spec.seed = mix_seed({utt_seed, 0});
    clean_spec.duration = cfg_.duration_s;
    clean_spec.kind = (i % 8 == 7) ? UtteranceKind::kToneStack : UtteranceKind::kPseudoSpeech;
    clean_.push_back(gen_clean(clean_spec, cfg_.sample_rate));

    UtteranceSpec noise_spec;
    noise_spec.seed = mix_seed({utt_seed, 1});
    noise_spec.duration = cfg_.duration_s;
    noise_spec.kind = (i % 3 == 0)   ? UtteranceKind::kWhite
                      : (i % 3 == 1) ? UtteranceKind::kPink
                                     : UtteranceKind::kBandLimited;
    noise_.push_back(gen_noise(noise_spec, cfg_.sample_rate));

    if (mix_seed({utt_seed, kSaltValSplit}) % 10 == 0)
      val_indices_.push_back(i);
    else
      train_indices_.push_back(i);
  }
  // the hash split can leave either side empty on tiny corpora
  if (val_indices_.empty() && train_indices_.size() >= 2) {
    val_indices_.push_back(train_indices_.back());
    train_indices_.pop_back();
  }
  check_state(!train_indices_.empty(), "dataset has no training utterances");
}

int SyntheticDataset::batches_per_epoch() const {
  return std::max(1, train_size() / cfg_.batch_size);
}

MixturePair SyntheticDataset::cropped_pair(int index, std::mt19937_64& rng) const {
  const Tensor& clean = clean_[static_cast<std::size_t>(index)];
  const Tensor& noise = noise_[static_cast<std::size_t>(index)];
  const std::int64_t crop = cfg_.crop_samples();
  const std::int64_t full = clean.numel();
  std::uniform_int_distribution<std::int64_t> offset_dist(0, full - crop);
  const std::int64_t off = offset_dist(rng);
  Tensor c = Tensor::from({crop}, std::vector<double>(clean.data() + off, clean.data() + off + crop));
  Tensor n = Tensor::from({crop}, std::vector<double>(noise.data() + off, noise.data() + off + crop));
  return make_mixture(c, n, cfg_.snr, rng);
}

Batch SyntheticDataset::train_batch(int epoch, int batch_idx) const {
  check_arg(epoch >= 0 && batch_idx >= 0, "train_batch: negative epoch or batch index");
  std::vector<int> order = train_indices_;
  std::mt19937_64 order_rng(mix_seed({cfg_.seed, kSaltOrder, static_cast<std::uint64_t>(epoch)}));
  std::shuffle(order.begin(), order.end(), order_rng);

  Batch batch;
  for (int b = 0; b < cfg_.batch_size; ++b) {
    const std::size_t pos = (static_cast<std::size_t>(batch_idx) * cfg_.batch_size + b) %
                            order.size();
    const int index = order[pos];
    std::mt19937_64 item_rng(mix_seed({cfg_.seed, static_cast<std::uint64_t>(epoch),
                                       static_cast<std::uint64_t>(index)}));
    batch.items.push_back(cropped_pair(index, item_rng));
  }
  return batch;
}

MixturePair SyntheticDataset::val_item(int i) const {
  check_arg(i >= 0 && i < val_size(), "val_item: index out of range");
  const int index = val_indices_[static_cast<std::size_t>(i)];
  std::mt19937_64 rng(mix_seed({cfg_.seed, kSaltValItem, static_cast<std::uint64_t>(index)}));
  return cropped_pair(index, rng);
}

std::uint64_t SyntheticDataset::corpus_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint64_t s : utt_seeds_) {
    for (int b = 0; b < 8; ++b) {
      h ^= (s >> (8 * b)) & 0xffULL;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::vector<std::string> load_manifest(const std::string& path) {
  std::ifstream in(path);
  check_arg(in.good(), "manifest: cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace lse
