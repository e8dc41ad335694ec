// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/run_config.hpp"

#include <fstream>
#include <set>

#include "lse/common.hpp"

namespace lse {

namespace {

void expect_keys(const nlohmann::json& j, const std::set<std::string>& known,
                 const std::string& context) {
  check_arg(j.is_object(), "config: section '" + context + "' must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    check_arg(known.count(it.key()) == 1,
              "config: unknown key '" + it.key() + "' in section '" + context + "'");
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::uint64_t RunConfig::codec_init_seed() const { return mix_seed({seed, 0xc0dec}); }
std::uint64_t RunConfig::se_init_seed() const { return mix_seed({seed, 0x5e}); }

nlohmann::json RunConfig::to_json() const {
  return {
      {"version", version},
      {"seed", seed},
      {"codec",
       {{"sample_rate", codec.sample_rate},
        {"strides", codec.strides},
        {"base_channels", codec.base_channels},
        {"latent_dim", codec.latent_dim},
        {"n_codebooks", codec.n_codebooks},
        {"codebook_size", codec.codebook_size},
        {"snake_alpha_init", codec.snake_alpha_init},
        {"wave_l1_weight", codec.wave_l1_weight},
        {"mel_l2_weight", codec.mel_l2_weight},
        {"commit_weight", codec.commit_weight},
        {"codebook_weight", codec.codebook_weight}}},
      {"se",
       {{"n_blocks", se.n_blocks},
        {"embed_dim", se.embed_dim},
        {"n_heads", se.n_heads},
        {"ffn_mult", se.ffn_mult},
        {"modulation_kernel", se.modulation_kernel},
        {"positional_encoding", se.positional_encoding}}},
      {"train",
       {{"lr", train.lr},
        {"epochs", train.epochs},
        {"batch_size", train.batch_size},
        {"weights",
         {{"alpha", train.weights.alpha},
          {"beta", train.weights.beta},
          {"gamma", train.weights.gamma}}},
        {"ablation", ablation_name(train.ablation)},
        {"grad_clip", train.grad_clip},
        {"lr_decay", train.lr_decay},
        {"checkpoint_every", train.checkpoint_every}}},
      {"mel",
       {{"sample_rate", mel.sample_rate},
        {"n_fft", mel.n_fft},
        {"hop", mel.hop},
        {"n_mels", mel.n_mels},
        {"f_min", mel.f_min},
        {"f_max", mel.f_max},
        {"power", mel.power}}},
      {"data",
       {{"n_utterances", data.n_utterances},
        {"duration_s", data.duration_s},
        {"crop_s", data.crop_s},
        {"sample_rate", data.sample_rate},
        {"snr_low_db", data.snr.low_db},
        {"snr_high_db", data.snr.high_db},
        {"batch_size", data.batch_size}}},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  expect_keys(j, {"version", "seed", "codec", "se", "train", "mel", "data"}, "<top>");
  RunConfig cfg;
  check_arg(j.contains("version"), "config: missing required key 'version'");
  cfg.version = j.at("version").get<int>();
  check_arg(cfg.version == 1,
            "config: unsupported version " + std::to_string(cfg.version) + " (expected 1)");
  maybe(j, "seed", cfg.seed);

  if (j.contains("codec")) {
    const auto& c = j.at("codec");
    expect_keys(c,
                {"sample_rate", "strides", "base_channels", "latent_dim", "n_codebooks",
                 "codebook_size", "snake_alpha_init", "wave_l1_weight", "mel_l2_weight",
                 "commit_weight", "codebook_weight"},
                "codec");
    maybe(c, "sample_rate", cfg.codec.sample_rate);
    maybe(c, "strides", cfg.codec.strides);
    maybe(c, "base_channels", cfg.codec.base_channels);
    maybe(c, "latent_dim", cfg.codec.latent_dim);
    maybe(c, "n_codebooks", cfg.codec.n_codebooks);
    maybe(c, "codebook_size", cfg.codec.codebook_size);
    maybe(c, "snake_alpha_init", cfg.codec.snake_alpha_init);
    maybe(c, "wave_l1_weight", cfg.codec.wave_l1_weight);
    maybe(c, "mel_l2_weight", cfg.codec.mel_l2_weight);
    maybe(c, "commit_weight", cfg.codec.commit_weight);
    maybe(c, "codebook_weight", cfg.codec.codebook_weight);
  }
  if (j.contains("se")) {
    const auto& s = j.at("se");
    expect_keys(s,
                {"n_blocks", "embed_dim", "n_heads", "ffn_mult", "modulation_kernel",
                 "positional_encoding"},
                "se");
    maybe(s, "n_blocks", cfg.se.n_blocks);
    maybe(s, "embed_dim", cfg.se.embed_dim);
    maybe(s, "n_heads", cfg.se.n_heads);
    maybe(s, "ffn_mult", cfg.se.ffn_mult);
    maybe(s, "modulation_kernel", cfg.se.modulation_kernel);
    maybe(s, "positional_encoding", cfg.se.positional_encoding);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    expect_keys(t,
                {"lr", "epochs", "batch_size", "weights", "ablation", "grad_clip", "lr_decay",
                 "checkpoint_every"},
                "train");
    maybe(t, "lr", cfg.train.lr);
    maybe(t, "epochs", cfg.train.epochs);
    maybe(t, "batch_size", cfg.train.batch_size);
    if (t.contains("weights")) {
      const auto& w = t.at("weights");
      expect_keys(w, {"alpha", "beta", "gamma"}, "train.weights");
      maybe(w, "alpha", cfg.train.weights.alpha);
      maybe(w, "beta", cfg.train.weights.beta);
      maybe(w, "gamma", cfg.train.weights.gamma);
    }
    if (t.contains("ablation"))
      cfg.train.ablation = ablation_from_name(t.at("ablation").get<std::string>());
    maybe(t, "grad_clip", cfg.train.grad_clip);
    maybe(t, "lr_decay", cfg.train.lr_decay);
    maybe(t, "checkpoint_every", cfg.train.checkpoint_every);
  }
  if (j.contains("mel")) {
    const auto& m = j.at("mel");
    expect_keys(m, {"sample_rate", "n_fft", "hop", "n_mels", "f_min", "f_max", "power"}, "mel");
    maybe(m, "sample_rate", cfg.mel.sample_rate);
    maybe(m, "n_fft", cfg.mel.n_fft);
    maybe(m, "hop", cfg.mel.hop);
    maybe(m, "n_mels", cfg.mel.n_mels);
    maybe(m, "f_min", cfg.mel.f_min);
    maybe(m, "f_max", cfg.mel.f_max);
    maybe(m, "power", cfg.mel.power);
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    expect_keys(d,
                {"n_utterances", "duration_s", "crop_s", "sample_rate", "snr_low_db",
                 "snr_high_db", "batch_size"},
                "data");
    maybe(d, "n_utterances", cfg.data.n_utterances);
    maybe(d, "duration_s", cfg.data.duration_s);
    maybe(d, "crop_s", cfg.data.crop_s);
    maybe(d, "sample_rate", cfg.data.sample_rate);
    maybe(d, "snr_low_db", cfg.data.snr.low_db);
    maybe(d, "snr_high_db", cfg.data.snr.high_db);
    maybe(d, "batch_size", cfg.data.batch_size);
  }
  cfg.train.seed = cfg.seed;
  cfg.data.seed = cfg.seed;
  cfg.data.batch_size = cfg.train.batch_size;
  cfg.codec.validate();
  cfg.se.validate();
  cfg.train.validate();
  cfg.mel.validate();
  cfg.data.validate();
  return cfg;
}

RunConfig RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  check_arg(in.good(), "config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: " + path + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

}  // namespace lse
