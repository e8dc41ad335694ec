// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lse/codec.hpp"
#include "lse/data.hpp"
#include "lse/dsp.hpp"
#include "lse/losses.hpp"
#include "lse/params.hpp"
#include "lse/se_model.hpp"

namespace lse {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Standard Adam with bias correction. Parameters without an allocated
/// gradient buffer are treated as having zero gradient. A non-finite
/// gradient aborts the run naming the parameter.
class Adam {
 public:
  Adam(std::vector<NamedParam> params, double lr, AdamConfig cfg = {});

  void zero_grad();
  void step();
  std::int64_t steps() const { return t_; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  std::vector<NamedParam> params_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
  double lr_;
  AdamConfig cfg_;
};

enum class Ablation { kAll, kEmbOnly, kTimeFreqOnly };

std::string ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& name);

struct TrainConfig {
  double lr = 1.5e-4;
  int epochs = 70;
  int batch_size = 4;
  std::uint64_t seed = 0;
  LossWeights weights;
  Ablation ablation = Ablation::kAll;
  double grad_clip = 0.0;  // 0 disables clipping
  double lr_decay = 1.0;   // per-epoch multiplier, 1 disables the schedule
  int checkpoint_every = 0;

  void validate() const;
};

struct TrainHistory {
  std::vector<LossBreakdown> train;  // per-epoch means of the components the
                                     // arm computes (others recorded as 0)
  std::vector<LossBreakdown> val;    // val[0] is the pre-training evaluation
};

struct SETrainResult {
  TrainHistory history;
  double initial_val_l_emb = 0.0;
  double final_val_l_emb = 0.0;
};

/// Called after each epoch; `is_best` marks a new best validation loss.
using EpochCallback = std::function<void(int epoch, const LossBreakdown& val, bool is_best)>;

/// Trains the SE module against a frozen codec. Asserts bit-equality of all
/// codec parameters before/after; history follows cfg.ablation.
SETrainResult train_se(CodecModel& codec, SEModel& se, const SyntheticDataset& data,
                       const MelTransform& mel, const TrainConfig& cfg,
                       const EpochCallback& on_epoch = nullptr);

/// Full validation breakdown (all three components, whatever the arm).
LossBreakdown validate_se(const CodecModel& codec, const SEModel& se,
                          const SyntheticDataset& data, const MelTransform& mel,
                          const LossWeights& weights);

struct PretrainResult {
  std::vector<double> epoch_loss;  // per-epoch mean training objective
  double initial_val_mel = 0.0;    // reconstruction mel L2 on the val split
  double final_val_mel = 0.0;
};

/// Codec pretraining on the clean half of the corpus: wave L1 + mel L2 +
/// commitment + codebook terms, weights from the codec config.
PretrainResult pretrain_codec(CodecModel& codec, const SyntheticDataset& data,
                              const MelTransform& mel, const TrainConfig& cfg);

struct EvalRow {
  double snr_db = 0.0;  // mixture SNR of the pair (NaN for file pairs)
  double si_snr_noisy_db = 0.0;
  double si_snr_enhanced_db = 0.0;
  double improvement_db = 0.0;
  double mel_distance = 0.0;
  double latent_l1 = 0.0;
};

/// Per-pair metrics against the codec-transmitted clean target x_out.
/// Passing se == nullptr bypasses enhancement (codec round trip only).
std::vector<EvalRow> evaluate_pairs(const CodecModel& codec, const SEModel* se,
                                    const MelTransform& mel,
                                    const std::vector<MixturePair>& pairs);

struct AblationArm {
  std::string name;
  double initial_val_l_emb = 0.0;
  double final_val_l_emb = 0.0;
  double median_improvement_db = 0.0;
  double mean_mel_distance = 0.0;
  TrainHistory history;
  std::shared_ptr<SEModel> model;
};

struct AblationResult {
  std::vector<AblationArm> arms;  // emb_only, time_freq_only, all
};

/// Trains three SE models from bit-identical initial weights, differing only
/// in the loss configuration.
AblationResult run_ablation(CodecModel& codec, const SEConfig& se_cfg, std::uint64_t se_seed,
                            const SyntheticDataset& data, const MelTransform& mel,
                            const TrainConfig& cfg);

// ---- small shared utilities ----

double median(std::vector<double> values);
void write_text_atomic(const std::string& path, const std::string& content);
std::string history_csv(const std::vector<LossBreakdown>& rows, int first_epoch);
std::string ablation_csv(const AblationResult& result);
std::string eval_csv(const std::vector<EvalRow>& rows);

}  // namespace lse
