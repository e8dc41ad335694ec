// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lse/common.hpp"
#include "lse/ops.hpp"

namespace lse {

Adam::Adam(std::vector<NamedParam> params, double lr, AdamConfig cfg)
    : params_(std::move(params)), lr_(lr), cfg_(cfg) {
  check_arg(lr > 0.0, "adam: learning rate must be positive");
  for (const NamedParam& p : params_) {
    m_.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0);
    v_.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0);
  }
}

void Adam::zero_grad() {
  for (NamedParam& p : params_) p.tensor.zero_grad();
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = params_[pi].tensor;
    const bool has_grad = p.has_grad();
    const double* g = has_grad ? p.impl_->grad.data() : nullptr;
    double* m = m_[pi].data();
    double* v = v_[pi].data();
    double* x = p.data();
    const std::int64_t n = p.numel();
    for (std::int64_t i = 0; i < n; ++i) {
      const double gi = g ? g[i] : 0.0;
      if (!std::isfinite(gi))
        throw std::runtime_error("adam: non-finite gradient in parameter " + params_[pi].name +
                                 " at index " + std::to_string(i));
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      x[i] -= lr_ * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kAll: return "all";
    case Ablation::kEmbOnly: return "emb_only";
    case Ablation::kTimeFreqOnly: return "time_freq_only";
  }
  return "?";
}

Ablation ablation_from_name(const std::string& name) {
  if (name == "all") return Ablation::kAll;
  if (name == "emb_only") return Ablation::kEmbOnly;
  if (name == "time_freq_only") return Ablation::kTimeFreqOnly;
  throw std::invalid_argument("unknown ablation arm '" + name +
                              "' (expected all | emb_only | time_freq_only)");
}

void TrainConfig::validate() const {
  check_arg(lr > 0.0, "train: lr must be positive");
  check_arg(epochs >= 0, "train: epochs must be >= 0");
  check_arg(batch_size >= 1, "train: batch_size must be >= 1");
  check_arg(grad_clip >= 0.0, "train: grad_clip must be >= 0");
  check_arg(lr_decay > 0.0 && lr_decay <= 1.0, "train: lr_decay must lie in (0,1]");
  check_arg(checkpoint_every >= 0, "train: checkpoint_every must be >= 0");
  weights.validate();
}

namespace {

LossWeights arm_weights(const LossWeights& base, Ablation arm) {
  LossWeights w = base;
  if (arm == Ablation::kEmbOnly) {
    w.beta = 0.0;
    w.gamma = 0.0;
  } else if (arm == Ablation::kTimeFreqOnly) {
    w.alpha = 0.0;
  }
  return w;
}

void clip_gradients(std::vector<NamedParam>& params, double max_norm) {
  double sq = 0.0;
  for (NamedParam& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.impl_->grad) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double s = max_norm / norm;
  for (NamedParam& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double& g : p.tensor.impl_->grad) g *= s;
  }
}

Tensor constant_copy(const Tensor& t) { return Tensor::from(t.shape(), t.values()); }

}  // namespace

LossBreakdown validate_se(const CodecModel& codec, const SEModel& se,
                          const SyntheticDataset& data, const MelTransform& mel,
                          const LossWeights& weights) {
  NoGradGuard no_grad;
  check_state(data.val_size() > 0, "validate_se: dataset has no validation split");
  LossBreakdown sum;
  for (int i = 0; i < data.val_size(); ++i) {
    MixturePair pair = data.val_item(i);
    Targets targets = make_targets(pair.clean, codec);
    Tensor y_e = codec.encode(pair.noisy);
    Tensor y_h = se.forward(y_e);
    QuantizeResult q = codec.quantize(y_h);
    Tensor y_out = codec.decode(q.quantized);
    sum.l_emb += emb_loss(targets.x_e, y_h).item();
    sum.l_time += time_loss(targets.x_out, y_out).item();
    sum.l_freq += freq_loss(targets.x_out, y_out, mel).item();
  }
  const double n = static_cast<double>(data.val_size());
  LossBreakdown out;
  out.l_emb = sum.l_emb / n;
  out.l_time = sum.l_time / n;
  out.l_freq = sum.l_freq / n;
  out.l_overall = overall_loss_value(out.l_emb, out.l_time, out.l_freq, weights);
  return out;
}

SETrainResult train_se(CodecModel& codec, SEModel& se, const SyntheticDataset& data,
                       const MelTransform& mel, const TrainConfig& cfg,
                       const EpochCallback& on_epoch) {
  cfg.validate();
  codec.set_trainable(false);
  auto codec_params = codec.parameters();
  const std::vector<double> codec_snapshot = snapshot_params(codec_params);

  auto se_params = se.parameters();
  set_requires_grad(se_params, true);
  Adam adam(se_params, cfg.lr);

  const LossWeights ew = arm_weights(cfg.weights, cfg.ablation);
  const bool need_audio = cfg.ablation != Ablation::kEmbOnly;

  SETrainResult result;
  result.history.val.push_back(validate_se(codec, se, data, mel, ew));
  result.initial_val_l_emb = result.history.val[0].l_emb;

  double best_val = result.history.val[0].l_overall;
  const int batches = data.batches_per_epoch();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.lr_decay < 1.0) adam.set_lr(cfg.lr * std::pow(cfg.lr_decay, epoch));
    LossBreakdown train_sum;
    for (int bi = 0; bi < batches; ++bi) {
      Batch batch = data.train_batch(epoch, bi);
      TapeScope scope;
      adam.zero_grad();
      Tensor total;
      for (const MixturePair& item : batch.items) {
        Tensor y_e, mel_x;
        Targets targets;
        {
          NoGradGuard no_grad;
          y_e = codec.encode(item.noisy);
          targets = make_targets(item.clean, codec);
          if (need_audio) mel_x = mel(targets.x_out);
        }
        Tensor y_h = se.forward(y_e);
        Tensor l_emb = emb_loss(constant_copy(targets.x_e), y_h);
        Tensor l_time = Tensor::scalar(0.0);
        Tensor l_freq = Tensor::scalar(0.0);
        if (need_audio) {
          QuantizeResult q = codec.quantize(y_h);
          Tensor y_out = codec.decode(q.quantized);
          l_time = time_loss(constant_copy(targets.x_out), y_out);
          l_freq = sq_mean(sub(mel(y_out), mel_x));
        }
        Tensor item_loss = overall_loss(l_emb, l_time, l_freq, ew);
        total = total.defined() ? add(total, item_loss) : item_loss;
        train_sum.l_emb += l_emb.item();
        train_sum.l_time += l_time.item();
        train_sum.l_freq += l_freq.item();
        train_sum.l_overall += item_loss.item();
      }
      Tensor loss = scale(total, 1.0 / static_cast<double>(batch.items.size()));
      if (!std::isfinite(loss.item()))
        throw std::runtime_error("train_se: loss diverged (non-finite) at epoch " +
                                 std::to_string(epoch) + " batch " + std::to_string(bi));
      scope.tape().backward(loss);
      if (cfg.grad_clip > 0.0) clip_gradients(se_params, cfg.grad_clip);
      adam.step();
    }
    const double denom = static_cast<double>(batches * cfg.batch_size);
    LossBreakdown train_row;
    train_row.l_emb = train_sum.l_emb / denom;
    train_row.l_time = train_sum.l_time / denom;
    train_row.l_freq = train_sum.l_freq / denom;
    train_row.l_overall = overall_loss_value(train_row.l_emb, train_row.l_time,
                                             train_row.l_freq, ew);
    result.history.train.push_back(train_row);

    LossBreakdown val = validate_se(codec, se, data, mel, ew);
    result.history.val.push_back(val);
    const bool is_best = val.l_overall < best_val;
    if (is_best) best_val = val.l_overall;
    if (on_epoch) on_epoch(epoch, val, is_best);
    log_info("train_se epoch " + std::to_string(epoch) + " train " +
             std::to_string(train_row.l_overall) + " val " + std::to_string(val.l_overall) +
             " val_l_emb " + std::to_string(val.l_emb));
  }
  result.final_val_l_emb = result.history.val.back().l_emb;

  check_state(params_bit_equal(codec_params, codec_snapshot),
              "train_se: codec parameters changed during SE training");
  return result;
}

namespace {

double validate_codec_mel(const CodecModel& codec, const SyntheticDataset& data,
                          const MelTransform& mel) {
  NoGradGuard no_grad;
  double sum = 0.0;
  const int n = std::max(1, data.val_size());
  for (int i = 0; i < n; ++i) {
    MixturePair pair = data.val_size() > 0 ? data.val_item(i)
                                           : MixturePair{data.clean_utterance(0), {}, 0.0};
    Tensor x = pair.clean;
    QuantizeResult q = codec.quantize(codec.encode(x));
    Tensor recon = codec.decode(q.quantized);
    sum += freq_loss(x, recon, mel).item();
  }
  return sum / static_cast<double>(n);
}

}  // namespace

PretrainResult pretrain_codec(CodecModel& codec, const SyntheticDataset& data,
                              const MelTransform& mel, const TrainConfig& cfg) {
  cfg.validate();
  codec.set_trainable(true);
  auto params = codec.parameters();
  Adam adam(params, cfg.lr);
  const CodecConfig& ccfg = codec.config();

  if (cfg.epochs > 0) {
    // cold codebooks never match real latent scales; seed them from data
    NoGradGuard no_grad;
    std::vector<Tensor> latents;
    const int warm_batches = std::min(4, data.batches_per_epoch());
    for (int bi = 0; bi < warm_batches; ++bi)
      for (const MixturePair& item : data.train_batch(0, bi).items)
        latents.push_back(codec.encode(item.clean));
    codec.init_codebooks_from_latents(latents, mix_seed({cfg.seed, 0xcb00}));
  }

  PretrainResult result;
  result.initial_val_mel = validate_codec_mel(codec, data, mel);

  const int batches = data.batches_per_epoch();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.lr_decay < 1.0) adam.set_lr(cfg.lr * std::pow(cfg.lr_decay, epoch));
    double epoch_sum = 0.0;
    for (int bi = 0; bi < batches; ++bi) {
      Batch batch = data.train_batch(epoch, bi);
      TapeScope scope;
      adam.zero_grad();
      Tensor total;
      for (const MixturePair& item : batch.items) {
        const Tensor& x = item.clean;
        Tensor mel_x;
        {
          NoGradGuard no_grad;
          mel_x = mel(x);
        }
        Tensor x_e = codec.encode(x);
        QuantizeResult q = codec.quantize(x_e);
        Tensor recon = codec.decode(q.quantized);
        Tensor l_wave = abs_mean(sub(recon, x));
        Tensor l_mel = sq_mean(sub(mel(recon), mel_x));
        Tensor item_loss = add(add(scale(l_wave, ccfg.wave_l1_weight),
                                   scale(l_mel, ccfg.mel_l2_weight)),
                               add(scale(q.commit_loss, ccfg.commit_weight),
                                   scale(q.codebook_loss, ccfg.codebook_weight)));
        total = total.defined() ? add(total, item_loss) : item_loss;
      }
      Tensor loss = scale(total, 1.0 / static_cast<double>(batch.items.size()));
      if (!std::isfinite(loss.item()))
        throw std::runtime_error("pretrain_codec: loss diverged (non-finite) at epoch " +
                                 std::to_string(epoch) + " batch " + std::to_string(bi));
      scope.tape().backward(loss);
      if (cfg.grad_clip > 0.0) clip_gradients(params, cfg.grad_clip);
      codec.mask_frozen_codeword_grads();
      adam.step();
      epoch_sum += loss.item();
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
    log_info("pretrain_codec epoch " + std::to_string(epoch) + " loss " +
             std::to_string(result.epoch_loss.back()));
  }
  result.final_val_mel = validate_codec_mel(codec, data, mel);
  return result;
}

std::vector<EvalRow> evaluate_pairs(const CodecModel& codec, const SEModel* se,
                                    const MelTransform& mel,
                                    const std::vector<MixturePair>& pairs) {
  NoGradGuard no_grad;
  std::vector<EvalRow> rows;
  rows.reserve(pairs.size());
  for (const MixturePair& pair : pairs) {
    Targets targets = make_targets(pair.clean, codec);
    Tensor y_e = codec.encode(pair.noisy);
    Tensor y_h = se ? se->forward(y_e) : y_e;
    QuantizeResult q = codec.quantize(y_h);
    Tensor y_out = codec.decode(q.quantized);

    EvalRow row;
    row.snr_db = pair.snr_db;
    row.si_snr_noisy_db = si_snr_db(targets.x_out, pair.noisy);
    row.si_snr_enhanced_db = si_snr_db(targets.x_out, y_out);
    row.improvement_db = row.si_snr_enhanced_db - row.si_snr_noisy_db;
    row.mel_distance = freq_loss(targets.x_out, y_out, mel).item();
    row.latent_l1 = emb_loss(targets.x_e, y_h).item();
    rows.push_back(row);
  }
  return rows;
}

AblationResult run_ablation(CodecModel& codec, const SEConfig& se_cfg, std::uint64_t se_seed,
                            const SyntheticDataset& data, const MelTransform& mel,
                            const TrainConfig& cfg) {
  AblationResult result;
  for (Ablation arm : {Ablation::kEmbOnly, Ablation::kTimeFreqOnly, Ablation::kAll}) {
    SEModel se(se_cfg, codec.config().latent_dim, se_seed);
    TrainConfig arm_cfg = cfg;
    arm_cfg.ablation = arm;
    log_info("ablation arm " + ablation_name(arm));
    SETrainResult train = train_se(codec, se, data, mel, arm_cfg);

    std::vector<MixturePair> val_pairs;
    for (int i = 0; i < data.val_size(); ++i) val_pairs.push_back(data.val_item(i));
    std::vector<EvalRow> eval = evaluate_pairs(codec, &se, mel, val_pairs);
    std::vector<double> improvements;
    double mel_sum = 0.0;
    for (const EvalRow& r : eval) {
      improvements.push_back(r.improvement_db);
      mel_sum += r.mel_distance;
    }

    AblationArm out;
    out.name = ablation_name(arm);
    out.initial_val_l_emb = train.initial_val_l_emb;
    out.final_val_l_emb = train.final_val_l_emb;
    out.median_improvement_db = median(std::move(improvements));
    out.mean_mel_distance = eval.empty() ? 0.0 : mel_sum / static_cast<double>(eval.size());
    out.history = std::move(train.history);
    result.arms.push_back(std::move(out));
  }
  return result;
}

double median(std::vector<double> values) {
  check_arg(!values.empty(), "median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    check_state(f.good(), "cannot open " + tmp);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    check_state(f.good(), "short write to " + tmp);
  }
  check_state(std::rename(tmp.c_str(), path.c_str()) == 0,
              "cannot rename " + tmp + " to " + path);
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string history_csv(const std::vector<LossBreakdown>& rows, int first_epoch) {
  std::ostringstream os;
  os << "epoch,l_emb,l_time,l_freq,l_overall\n";
  int epoch = first_epoch;
  for (const LossBreakdown& r : rows) {
    os << epoch++ << "," << fmt_double(r.l_emb) << "," << fmt_double(r.l_time) << ","
       << fmt_double(r.l_freq) << "," << fmt_double(r.l_overall) << "\n";
  }
  return os.str();
}

std::string ablation_csv(const AblationResult& result) {
  std::ostringstream os;
  os << "arm,initial_val_l_emb,final_val_l_emb,median_si_snr_improvement_db,mean_mel_distance\n";
  for (const AblationArm& arm : result.arms) {
    os << arm.name << "," << fmt_double(arm.initial_val_l_emb) << ","
       << fmt_double(arm.final_val_l_emb) << "," << fmt_double(arm.median_improvement_db)
       << "," << fmt_double(arm.mean_mel_distance) << "\n";
  }
  return os.str();
}

std::string eval_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream os;
  os << "index,snr_db,si_snr_noisy_db,si_snr_enhanced_db,si_snr_improvement_db,"
        "mel_distance,latent_l1\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const EvalRow& r = rows[i];
    os << i << "," << fmt_double(r.snr_db) << "," << fmt_double(r.si_snr_noisy_db) << ","
       << fmt_double(r.si_snr_enhanced_db) << "," << fmt_double(r.improvement_db) << ","
       << fmt_double(r.mel_distance) << "," << fmt_double(r.latent_l1) << "\n";
  }
  return os.str();
}

}  // namespace lse
