// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lse/tensor.hpp"

namespace lse {

struct SnrRange {
  double low_db = -5.0;
  double high_db = 20.0;

  void validate() const;
};

enum class UtteranceKind { kPseudoSpeech, kToneStack, kWhite, kPink, kBandLimited };

struct UtteranceSpec {
  std::uint64_t seed = 0;
  double duration = 1.0;  // seconds
  UtteranceKind kind = UtteranceKind::kPseudoSpeech;
  double f0 = 0.0;  // tone_stack fundamental in Hz; 0 draws one from the seed
};

/// Deterministic synthetic clean speech: pseudo_speech is 3-6 harmonics with
/// pitch drift and a syllable-rate amplitude envelope; tone_stack is a plain
/// harmonic stack. Values stay in [-1, 1].
Tensor gen_clean(const UtteranceSpec& spec, int sample_rate);

/// white / pink (-3 dB per octave shaping) / band_limited noise.
Tensor gen_noise(const UtteranceSpec& spec, int sample_rate);

struct MixturePair {
  Tensor clean;
  Tensor noisy;
  double snr_db = 0.0;
};

/// noisy = clean + g*noise at an SNR drawn uniformly from `range`; both
/// signals are rescaled together if the mixture peak exceeds 0.99 so the
/// realized SNR is preserved.
MixturePair make_mixture(const Tensor& clean, const Tensor& noise, const SnrRange& range,
                         std::mt19937_64& rng);

struct Batch {
  std::vector<MixturePair> items;
};

struct DataConfig {
  int n_utterances = 200;
  double duration_s = 1.0;
  double crop_s = 0.5;  // fixed-length training crops
  int sample_rate = 16000;
  SnrRange snr;
  int batch_size = 4;
  std::uint64_t seed = 0;

  void validate() const;
  std::int64_t crop_samples() const;
};

/// Synthetic corpus with deterministic on-the-fly mixing. Every (epoch,
/// index) pair has its own RNG stream, so the k-th batch of epoch e is
/// bit-identical across runs regardless of generation order. Roughly 10% of
/// utterances are assigned to the validation split by a hash of their seed.
class SyntheticDataset {
 public:
  explicit SyntheticDataset(const DataConfig& cfg);

  const DataConfig& config() const { return cfg_; }
  int train_size() const { return static_cast<int>(train_indices_.size()); }
  int val_size() const { return static_cast<int>(val_indices_.size()); }
  int batches_per_epoch() const;

  Batch train_batch(int epoch, int batch_idx) const;
  /// Validation crops are epoch-independent so curves are comparable.
  MixturePair val_item(int i) const;
  /// Full-length clean utterance (codec pretraining corpus).
  const Tensor& clean_utterance(int index) const { return clean_[static_cast<std::size_t>(index)]; }
  std::vector<int> train_indices() const { return train_indices_; }

  /// FNV-1a over the utterance spec seeds; identifies the corpus in manifests.
  std::uint64_t corpus_hash() const;

 private:
  MixturePair cropped_pair(int index, std::mt19937_64& rng) const;

  DataConfig cfg_;
  std::vector<Tensor> clean_, noise_;
  std::vector<std::uint64_t> utt_seeds_;
  std::vector<int> train_indices_, val_indices_;
};

/// One path per line; blank lines and lines starting with '#' are skipped.
std::vector<std::string> load_manifest(const std::string& path);

}  // namespace lse
