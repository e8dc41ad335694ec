// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lse/checkpoint.hpp"
#include "lse/codec.hpp"
#include "lse/common.hpp"
#include "lse/data.hpp"
#include "lse/dsp.hpp"
#include "lse/losses.hpp"
#include "lse/perf.hpp"
#include "lse/run_config.hpp"
#include "lse/se_model.hpp"
#include "lse/trainer.hpp"
#include "lse/wav.hpp"

namespace {

using namespace lse;

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig{} : RunConfig::load_file(opts.config_path);
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.train.seed = *opts.seed;
    cfg.data.seed = *opts.seed;
  }
  log_info("resolved config: " + cfg.to_json().dump());
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file (flags override file values)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "global seed; makes the run fully deterministic");
}

nlohmann::json checkpoint_config(const RunConfig& cfg) { return cfg.to_json(); }

CodecModel codec_from_checkpoint(const Checkpoint& ckpt, RunConfig& cfg) {
  cfg = RunConfig::from_json(ckpt.config);
  CodecModel codec(cfg.codec, cfg.codec_init_seed());
  auto params = codec.parameters();
  // only codec.* entries are required here
  for (NamedParam& p : params) {
    const Tensor* src = ckpt.find(p.name);
    check_arg(src != nullptr, "checkpoint: missing parameter " + p.name);
    check_arg(src->shape() == p.tensor.shape(), "checkpoint: shape mismatch for " + p.name);
    p.tensor.values() = src->values();
  }
  return codec;
}

std::optional<SEModel> se_from_checkpoint(const Checkpoint& ckpt, const RunConfig& cfg) {
  bool any_se = false;
  for (const NamedParam& p : ckpt.params)
    if (p.name.rfind("se.", 0) == 0) any_se = true;
  if (!any_se) return std::nullopt;
  SEModel se(cfg.se, cfg.codec.latent_dim, cfg.se_init_seed());
  auto params = se.parameters();
  for (NamedParam& p : params) {
    const Tensor* src = ckpt.find(p.name);
    check_arg(src != nullptr, "checkpoint: missing parameter " + p.name);
    check_arg(src->shape() == p.tensor.shape(), "checkpoint: shape mismatch for " + p.name);
    p.tensor.values() = src->values();
  }
  return se;
}

std::vector<NamedParam> combined_params(CodecModel& codec, SEModel* se) {
  std::vector<NamedParam> params = codec.parameters();
  if (se) {
    auto se_params = se->parameters();
    params.insert(params.end(), se_params.begin(), se_params.end());
  }
  return params;
}

std::vector<MixturePair> synthetic_eval_pairs(const RunConfig& cfg, int count,
                                              std::uint64_t salt) {
  // a held-out pool: same generator family, disjoint seed namespace
  DataConfig dc = cfg.data;
  dc.n_utterances = count;
  dc.seed = mix_seed({cfg.seed, salt});
  SyntheticDataset held_out(dc);
  std::vector<MixturePair> pairs;
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(mix_seed({dc.seed, 0xe7a1, static_cast<std::uint64_t>(i)}));
    const Tensor& clean = held_out.clean_utterance(i);
    UtteranceSpec noise_spec;
    noise_spec.seed = mix_seed({dc.seed, 0x0015e, static_cast<std::uint64_t>(i)});
    noise_spec.duration = dc.duration_s;
    noise_spec.kind = (i % 3 == 0)   ? UtteranceKind::kWhite
                      : (i % 3 == 1) ? UtteranceKind::kPink
                                     : UtteranceKind::kBandLimited;
    Tensor noise = gen_noise(noise_spec, dc.sample_rate);
    pairs.push_back(make_mixture(clean, noise, dc.snr, rng));
  }
  return pairs;
}

int cmd_pretrain_codec(const CommonOpts& common, const std::string& out_path,
                       const std::string& history_path, std::optional<int> epochs,
                       std::optional<int> utterances) {
  RunConfig cfg = resolve_config(common);
  if (epochs) cfg.train.epochs = *epochs;
  if (utterances) cfg.data.n_utterances = *utterances;

  SyntheticDataset data(cfg.data);
  MelTransform mel(cfg.mel);
  CodecModel codec(cfg.codec, cfg.codec_init_seed());
  PretrainResult result = pretrain_codec(codec, data, mel, cfg.train);

  auto params = codec.parameters();
  save_checkpoint(out_path, checkpoint_config(cfg), params);
  if (!history_path.empty()) {
    std::ostringstream os;
    os << "epoch,loss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", result.epoch_loss[e]);
      os << e << "," << buf << "\n";
    }
    write_text_atomic(history_path, os.str());
  }
  std::printf("pretrained codec saved to %s (val mel %.6f -> %.6f)\n", out_path.c_str(),
              result.initial_val_mel, result.final_val_mel);
  return 0;
}

int cmd_train_se(const CommonOpts& common, const std::string& codec_path,
                 const std::string& out_path, const std::string& history_path,
                 const std::string& val_history_path, const std::string& manifest_path,
                 std::optional<int> epochs, const std::string& ablation) {
  RunConfig cfg;
  Checkpoint codec_ckpt = load_checkpoint(codec_path);
  CodecModel codec = codec_from_checkpoint(codec_ckpt, cfg);
  // the training run's own config (seed, epochs, ...) comes from flags/file;
  // the codec architecture is pinned by the checkpoint
  RunConfig run_cfg = resolve_config(common);
  run_cfg.codec = cfg.codec;
  cfg = run_cfg;
  if (epochs) cfg.train.epochs = *epochs;
  if (!ablation.empty()) cfg.train.ablation = ablation_from_name(ablation);

  SyntheticDataset data(cfg.data);
  MelTransform mel(cfg.mel);
  SEModel se(cfg.se, cfg.codec.latent_dim, cfg.se_init_seed());

  EpochCallback on_epoch = nullptr;
  if (cfg.train.checkpoint_every > 0) {
    on_epoch = [&](int epoch, const LossBreakdown&, bool is_best) {
      if ((epoch + 1) % cfg.train.checkpoint_every == 0) {
        auto params = combined_params(codec, &se);
        save_checkpoint(out_path + ".epoch" + std::to_string(epoch), checkpoint_config(cfg),
                        params);
      }
      if (is_best) {
        auto params = combined_params(codec, &se);
        save_checkpoint(out_path + ".best", checkpoint_config(cfg), params);
      }
    };
  }
  SETrainResult result = train_se(codec, se, data, mel, cfg.train, on_epoch);

  auto params = combined_params(codec, &se);
  save_checkpoint(out_path, checkpoint_config(cfg), params);
  if (!history_path.empty())
    write_text_atomic(history_path, history_csv(result.history.train, 1));
  if (!val_history_path.empty())
    write_text_atomic(val_history_path, history_csv(result.history.val, 0));
  if (!manifest_path.empty()) {
    nlohmann::json manifest = {
        {"config", cfg.to_json()},
        {"seed", cfg.seed},
        {"corpus_hash", data.corpus_hash()},
        {"final_metrics",
         {{"val_l_emb", result.final_val_l_emb},
          {"val_l_overall", result.history.val.back().l_overall}}}};
    write_text_atomic(manifest_path, manifest.dump(2) + "\n");
  }
  std::printf("trained SE saved to %s (val l_emb %.6f -> %.6f)\n", out_path.c_str(),
              result.initial_val_l_emb, result.final_val_l_emb);
  return 0;
}

int cmd_enhance(const std::string& ckpt_path, const std::string& in_path,
                const std::string& out_path) {
  RunConfig cfg;
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  CodecModel codec = codec_from_checkpoint(ckpt, cfg);
  std::optional<SEModel> se = se_from_checkpoint(ckpt, cfg);
  check_arg(se.has_value(), "enhance: checkpoint " + ckpt_path +
                                " holds no SE parameters; train one with train-se");

  WavData wav = wav_read(in_path);
  check_arg(wav.sample_rate == cfg.codec.sample_rate,
            "enhance: input sample rate " + std::to_string(wav.sample_rate) +
                " does not match the codec's " + std::to_string(cfg.codec.sample_rate));
  EnhanceTiming timing;
  Tensor enhanced = enhance_wave(codec, *se, wav.wave, &timing);
  wav_write(out_path, enhanced, wav.sample_rate);

  const double audio_s = static_cast<double>(wav.wave.numel()) / wav.sample_rate;
  std::printf("enhanced %s -> %s (%.2f s audio)\n", in_path.c_str(), out_path.c_str(), audio_s);
  std::printf("rtf %.6f (wall %.4f s; encode %.4f, se %.4f, quantize %.4f, decode %.4f)\n",
              compute_rtf(timing.total_s, audio_s), timing.total_s, timing.encode_s,
              timing.se_s, timing.quantize_s, timing.decode_s);
  return 0;
}

int cmd_evaluate(const CommonOpts& common, const std::string& ckpt_path,
                 const std::string& out_csv, int synthetic, bool bypass_se,
                 const std::string& clean_manifest, const std::string& noisy_manifest) {
  RunConfig cfg;
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  CodecModel codec = codec_from_checkpoint(ckpt, cfg);
  std::optional<SEModel> se = se_from_checkpoint(ckpt, cfg);
  if (common.seed) cfg.seed = *common.seed;
  check_arg(bypass_se || se.has_value(),
            "evaluate: checkpoint holds no SE parameters (use --bypass-se for a codec-only "
            "round trip)");

  std::vector<MixturePair> pairs;
  if (!clean_manifest.empty() || !noisy_manifest.empty()) {
    check_arg(!clean_manifest.empty() && !noisy_manifest.empty(),
              "evaluate: --clean-manifest and --noisy-manifest must be given together");
    auto clean_paths = load_manifest(clean_manifest);
    auto noisy_paths = load_manifest(noisy_manifest);
    check_arg(clean_paths.size() == noisy_paths.size(),
              "evaluate: manifests differ in length (" + std::to_string(clean_paths.size()) +
                  " vs " + std::to_string(noisy_paths.size()) + ")");
    const std::int64_t s = codec.stride_product();
    for (std::size_t i = 0; i < clean_paths.size(); ++i) {
      WavData c = wav_read(clean_paths[i]);
      WavData n = wav_read(noisy_paths[i]);
      check_arg(c.sample_rate == cfg.codec.sample_rate && n.sample_rate == cfg.codec.sample_rate,
                "evaluate: sample rate mismatch in pair " + std::to_string(i));
      check_arg(c.wave.numel() == n.wave.numel(),
                "evaluate: length mismatch in pair " + std::to_string(i));
      MixturePair pair;
      pair.clean = pad_to_multiple(c.wave, s);
      pair.noisy = pad_to_multiple(n.wave, s);
      pair.snr_db = std::nan("");
      pairs.push_back(std::move(pair));
    }
  } else {
    pairs = synthetic_eval_pairs(cfg, synthetic, 0x4e1d);
  }

  std::vector<EvalRow> rows =
      evaluate_pairs(codec, bypass_se ? nullptr : &*se, MelTransform(cfg.mel), pairs);
  write_text_atomic(out_csv, eval_csv(rows));

  std::vector<double> improvements;
  for (const EvalRow& r : rows) improvements.push_back(r.improvement_db);
  std::printf("evaluated %zu pairs -> %s (median SI-SNR improvement %.3f dB)\n", rows.size(),
              out_csv.c_str(), improvements.empty() ? 0.0 : median(improvements));
  return 0;
}

int cmd_profile(const CommonOpts& common, double duration_s, int runs,
                const std::string& out_csv) {
  RunConfig cfg = resolve_config(common);
  CodecModel codec(cfg.codec, cfg.codec_init_seed());
  SEModel se(cfg.se, cfg.codec.latent_dim, cfg.se_init_seed());

  const std::int64_t samples =
      static_cast<std::int64_t>(std::llround(duration_s * cfg.codec.sample_rate));
  MacReport ours = count_se_macs(cfg.codec, cfg.se, samples);
  TimeBaselineConfig baseline{cfg.se, 8, 16};
  MacReport theirs = count_baseline_macs(baseline, samples);
  MacReport codec_macs = count_codec_macs(cfg.codec, samples);

  std::printf("SE module MACs (codec excluded):\n%s\n", ours.table().c_str());
  std::printf("time-domain baseline MACs:\n%s\n", theirs.table().c_str());
  std::printf("codec MACs (shared by both pipelines):\n%s\n", codec_macs.table().c_str());
  std::printf("baseline/latent MAC ratio: %.2f\n",
              static_cast<double>(theirs.total) / static_cast<double>(ours.total));

  std::vector<EfficiencyRow> rows =
      compare_efficiency(codec, se, baseline, {duration_s}, runs);
  RtfResult rtf = measure_rtf(codec, se, Tensor::zeros({samples}), runs);
  std::printf("rtf (median of %d runs): %.6f  wall median %.4f s mean %.4f s min %.4f max %.4f\n",
              rtf.runs, rtf.rtf, rtf.wall_median_s, rtf.wall_mean_s, rtf.wall_min_s,
              rtf.wall_max_s);
  for (const StageTiming& st : rtf.stages)
    std::printf("  stage %-9s %.4f s\n", st.stage.c_str(), st.seconds);
  std::printf("  stage sum %.4f s of %.4f s end-to-end\n", rtf.stage_sum_s, rtf.wall_median_s);
  if (!out_csv.empty()) write_text_atomic(out_csv, efficiency_csv(rows));
  return 0;
}

int cmd_ablate(const CommonOpts& common, const std::string& codec_path,
               const std::string& out_csv, std::optional<int> epochs) {
  RunConfig cfg;
  Checkpoint codec_ckpt = load_checkpoint(codec_path);
  CodecModel codec = codec_from_checkpoint(codec_ckpt, cfg);
  RunConfig run_cfg = resolve_config(common);
  run_cfg.codec = cfg.codec;
  cfg = run_cfg;
  if (epochs) cfg.train.epochs = *epochs;

  SyntheticDataset data(cfg.data);
  MelTransform mel(cfg.mel);
  AblationResult result = run_ablation(codec, cfg.se, cfg.se_init_seed(), data, mel, cfg.train);
  write_text_atomic(out_csv, ablation_csv(result));
  std::printf("%s", ablation_csv(result).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent-domain speech enhancement with a miniature neural audio codec"};
  app.require_subcommand(1);

  CommonOpts pretrain_common, train_common, eval_common, profile_common, ablate_common;

  auto* pretrain = app.add_subcommand("pretrain-codec", "train the miniature codec on clean audio");
  std::string pretrain_out, pretrain_history;
  std::optional<int> pretrain_epochs, pretrain_utts;
  add_common(pretrain, pretrain_common);
  pretrain->add_option("--out", pretrain_out, "output checkpoint path")->required();
  pretrain->add_option("--history", pretrain_history, "per-epoch loss CSV");
  pretrain->add_option("--epochs", pretrain_epochs, "override train.epochs");
  pretrain->add_option("--utterances", pretrain_utts, "override data.n_utterances");

  auto* train = app.add_subcommand("train-se", "train the SE module against a frozen codec");
  std::string train_codec, train_out, train_history, train_val_history, train_manifest,
      train_ablation;
  std::optional<int> train_epochs;
  add_common(train, train_common);
  train->add_option("--codec", train_codec, "pretrained codec checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "output checkpoint path")->required();
  train->add_option("--history", train_history, "training loss CSV (epoch,l_emb,l_time,l_freq,l_overall)");
  train->add_option("--val-history", train_val_history, "validation loss CSV");
  train->add_option("--run-manifest", train_manifest, "run manifest JSON");
  train->add_option("--epochs", train_epochs, "override train.epochs");
  train->add_option("--ablation", train_ablation, "loss arm: all | emb_only | time_freq_only");

  auto* enhance = app.add_subcommand("enhance", "denoise a WAV file through the latent pipeline");
  std::string enhance_ckpt, enhance_in, enhance_out;
  enhance->add_option("--checkpoint", enhance_ckpt, "codec+SE checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  enhance->add_option("--in", enhance_in, "input 16-bit mono WAV")
      ->required()
      ->check(CLI::ExistingFile);
  enhance->add_option("--out", enhance_out, "output WAV path")->required();

  auto* evaluate = app.add_subcommand("evaluate", "SI-SNR / mel / latent metrics on a held-out set");
  std::string eval_ckpt, eval_csv_path = "eval.csv", eval_clean_manifest, eval_noisy_manifest;
  int eval_synthetic = 50;
  bool eval_bypass = false;
  add_common(evaluate, eval_common);
  evaluate->add_option("--checkpoint", eval_ckpt, "codec+SE checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_csv_path, "output CSV path");
  evaluate->add_option("--synthetic", eval_synthetic, "number of synthetic held-out pairs");
  evaluate->add_flag("--bypass-se", eval_bypass, "evaluate the codec round trip without SE");
  evaluate->add_option("--clean-manifest", eval_clean_manifest, "file of clean WAV paths");
  evaluate->add_option("--noisy-manifest", eval_noisy_manifest, "file of noisy WAV paths");

  auto* profile = app.add_subcommand("profile", "MAC counts and real-time factor");
  double profile_duration = 10.0;
  int profile_runs = 5;
  std::string profile_csv;
  add_common(profile, profile_common);
  profile->add_option("--duration", profile_duration, "input duration in seconds");
  profile->add_option("--runs", profile_runs, "timing runs (>= 5)");
  profile->add_option("--out", profile_csv, "efficiency CSV path");

  auto* ablate = app.add_subcommand("ablate", "three-arm loss ablation (emb / time+freq / all)");
  std::string ablate_codec, ablate_out = "ablation.csv";
  std::optional<int> ablate_epochs;
  add_common(ablate, ablate_common);
  ablate->add_option("--codec", ablate_codec, "pretrained codec checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  ablate->add_option("--out", ablate_out, "output CSV path");
  ablate->add_option("--epochs", ablate_epochs, "override train.epochs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pretrain->parsed())
      return cmd_pretrain_codec(pretrain_common, pretrain_out, pretrain_history, pretrain_epochs,
                                pretrain_utts);
    if (train->parsed())
      return cmd_train_se(train_common, train_codec, train_out, train_history, train_val_history,
                          train_manifest, train_epochs, train_ablation);
    if (enhance->parsed()) return cmd_enhance(enhance_ckpt, enhance_in, enhance_out);
    if (evaluate->parsed())
      return cmd_evaluate(eval_common, eval_ckpt, eval_csv_path, eval_synthetic, eval_bypass,
                          eval_clean_manifest, eval_noisy_manifest);
    if (profile->parsed())
      return cmd_profile(profile_common, profile_duration, profile_runs, profile_csv);
    if (ablate->parsed()) return cmd_ablate(ablate_common, ablate_codec, ablate_out, ablate_epochs);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
