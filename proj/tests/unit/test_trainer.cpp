// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include <doctest.h>

#include "lse/checkpoint.hpp"
#include "lse/ops.hpp"
#include "lse/run_config.hpp"
#include "lse/trainer.hpp"

using namespace lse;

namespace {

RunConfig tiny_run_config() {
  RunConfig cfg;
  cfg.seed = 1234;
  cfg.codec.strides = {2, 2};
  cfg.codec.base_channels = 4;
  cfg.codec.latent_dim = 8;
  cfg.codec.n_codebooks = 2;
  cfg.codec.codebook_size = 8;
  cfg.se.n_blocks = 1;
  cfg.se.embed_dim = 8;
  cfg.se.n_heads = 2;
  cfg.se.ffn_mult = 2;
  cfg.mel.sample_rate = 16000;
  cfg.mel.n_fft = 128;
  cfg.mel.hop = 64;
  cfg.mel.n_mels = 8;
  cfg.mel.f_max = 8000.0;
  cfg.data.n_utterances = 12;
  cfg.data.duration_s = 0.04;  // 640 samples
  cfg.data.crop_s = 0.02;      // 320 samples, multiple of S=4
  cfg.data.batch_size = 2;
  cfg.data.seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 2;
  cfg.train.lr = 1e-3;
  return cfg;
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged while t advances") {
  Tensor p = Tensor::from({3}, {1.0, -2.0, 0.5}, true);
  std::vector<double> before = p.values();
  Adam adam({{"p", p}}, 1e-3);
  p.grad();  // allocated, all zeros
  adam.step();
  CHECK(adam.steps() == 1);
  CHECK(std::memcmp(p.data(), before.data(), 3 * sizeof(double)) == 0);
}

TEST_CASE("adam: first step magnitude is close to lr") {
  const double lr = 1.5e-4;
  Tensor p = Tensor::from({1}, {0.7}, true);
  Adam adam({{"p", p}}, lr);
  p.grad()[0] = 0.3;
  adam.step();
  const double delta = std::abs(0.7 - p.data()[0]);
  CHECK(delta >= 0.99 * lr);
  CHECK(delta <= lr);
  CHECK(p.data()[0] < 0.7);  // moved against the gradient
}

TEST_CASE("adam: non-finite gradients abort naming the parameter") {
  Tensor p = Tensor::from({2}, {0.0, 0.0}, true);
  Adam adam({{"se.block0.attn.wq", p}}, 1e-3);
  p.grad()[1] = std::nan("");
  CHECK_THROWS_WITH_AS(adam.step(), doctest::Contains("se.block0.attn.wq"),
                       std::runtime_error);
}

TEST_CASE("adam: identical runs are bit-identical after 10 steps") {
  auto run = [] {
    std::mt19937_64 rng(5);
    Tensor p = Tensor::rand_uniform({16}, rng, -1.0, 1.0, true);
    Adam adam({{"p", p}}, 3e-3);
    for (int s = 0; s < 10; ++s) {
      adam.zero_grad();
      std::mt19937_64 grad_rng(100 + s);
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      for (double& g : p.grad()) g = dist(grad_rng);
      adam.step();
    }
    return p.values();
  };
  std::vector<double> a = run(), b = run();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("train_se with zero epochs changes nothing and reports the initial validation") {
  RunConfig cfg = tiny_run_config();
  cfg.train.epochs = 0;
  CodecModel codec(cfg.codec, cfg.codec_init_seed());
  SEModel se(cfg.se, cfg.codec.latent_dim, cfg.se_init_seed());
  SyntheticDataset data(cfg.data);
  MelTransform mel(cfg.mel);

  auto se_params = se.parameters();
  const std::vector<double> before = snapshot_params(se_params);
  SETrainResult result = train_se(codec, se, data, mel, cfg.train);
  CHECK(params_bit_equal(se_params, before));
  REQUIRE(result.history.val.size() == 1);
  CHECK(result.initial_val_l_emb == result.final_val_l_emb);
  CHECK(result.history.train.empty());
}

TEST_CASE("train_se leaves every codec parameter bit-identical") {
  RunConfig cfg = tiny_run_config();
  CodecModel codec(cfg.codec, cfg.codec_init_seed());
  SEModel se(cfg.se, cfg.codec.latent_dim, cfg.se_init_seed());
  SyntheticDataset data(cfg.data);
  MelTransform mel(cfg.mel);

  auto codec_params = codec.parameters();
  const std::vector<double> before = snapshot_params(codec_params);
  SETrainResult result = train_se(codec, se, data, mel, cfg.train);
  CHECK(params_bit_equal(codec_params, before));
  CHECK(result.history.train.size() == 2);
  CHECK(result.history.val.size() == 3);
  for (const LossBreakdown& row : result.history.train) {
    CHECK(std::isfinite(row.l_overall));
    CHECK(row.l_emb >= 0.0);
    CHECK(row.l_time >= 0.0);
    CHECK(row.l_freq >= 0.0);
  }
}

TEST_CASE("train_se is bit-deterministic for a fixed seed") {
  auto run = [] {
    RunConfig cfg = tiny_run_config();
    CodecModel codec(cfg.codec, cfg.codec_init_seed());
    SEModel se(cfg.se, cfg.codec.latent_dim, cfg.se_init_seed());
    SyntheticDataset data(cfg.data);
    MelTransform mel(cfg.mel);
    train_se(codec, se, data, mel, cfg.train);
    auto params = se.parameters();
    return snapshot_params(params);
  };
  std::vector<double> a = run(), b = run();
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("gradient of the overall loss reaches every SE parameter") {
  RunConfig cfg = tiny_run_config();
  CodecModel codec(cfg.codec, cfg.codec_init_seed());
  SEModel se(cfg.se, cfg.codec.latent_dim, cfg.se_init_seed());
  SyntheticDataset data(cfg.data);
  MelTransform mel(cfg.mel);

  auto se_params = se.parameters();
  set_requires_grad(se_params, true);
  codec.set_trainable(false);

  MixturePair pair = data.train_batch(0, 0).items[0];
  TapeScope scope;
  Targets targets = make_targets(pair.clean, codec);
  Tensor y_e;
  {
    NoGradGuard no_grad;
    y_e = codec.encode(pair.noisy);
  }
  Tensor y_h = se.forward(y_e);
  Tensor l_emb = emb_loss(Tensor::from(targets.x_e.shape(), targets.x_e.values()), y_h);
  QuantizeResult q = codec.quantize(y_h);
  Tensor y_out = codec.decode(q.quantized);
  Tensor l_time = time_loss(Tensor::from(targets.x_out.shape(), targets.x_out.values()), y_out);
  Tensor l_freq = freq_loss(Tensor::from(targets.x_out.shape(), targets.x_out.values()), y_out,
                            mel);
  Tensor loss = overall_loss(l_emb, l_time, l_freq, cfg.train.weights);
  scope.tape().backward(loss);

  for (const NamedParam& p : se_params) {
    REQUIRE_MESSAGE(p.tensor.has_grad(), p.name);
    double norm = 0.0;
    for (double g : p.tensor.impl_->grad) norm += std::abs(g);
    CHECK_MESSAGE(norm > 0.0, p.name);
  }
}

TEST_CASE("zeroing beta and gamma reproduces pure latent-space training") {
  RunConfig cfg = tiny_run_config();
  CodecModel codec(cfg.codec, cfg.codec_init_seed());
  SyntheticDataset data(cfg.data);
  MelTransform mel(cfg.mel);

  auto grads_for = [&](Ablation arm) {
    SEModel se(cfg.se, cfg.codec.latent_dim, cfg.se_init_seed());
    auto params = se.parameters();
    set_requires_grad(params, true);
    codec.set_trainable(false);
    MixturePair pair = data.train_batch(0, 0).items[0];
    TapeScope scope;
    Targets targets = make_targets(pair.clean, codec);
    Tensor y_e;
    {
      NoGradGuard no_grad;
      y_e = codec.encode(pair.noisy);
    }
    Tensor y_h = se.forward(y_e);
    Tensor l_emb = emb_loss(Tensor::from(targets.x_e.shape(), targets.x_e.values()), y_h);
    LossWeights w = cfg.train.weights;
    Tensor loss;
    if (arm == Ablation::kEmbOnly) {
      loss = scale(l_emb, w.alpha);  // the emb_only arm skips the audio path
    } else {
      w.beta = 0.0;
      w.gamma = 0.0;
      QuantizeResult q = codec.quantize(y_h);
      Tensor y_out = codec.decode(q.quantized);
      Tensor l_time =
          time_loss(Tensor::from(targets.x_out.shape(), targets.x_out.values()), y_out);
      Tensor l_freq =
          freq_loss(Tensor::from(targets.x_out.shape(), targets.x_out.values()), y_out, mel);
      loss = overall_loss(l_emb, l_time, l_freq, w);
    }
    scope.tape().backward(loss);
    std::vector<double> grads;
    for (const NamedParam& p : params) {
      if (p.tensor.has_grad())
        grads.insert(grads.end(), p.tensor.impl_->grad.begin(), p.tensor.impl_->grad.end());
      else
        grads.insert(grads.end(), static_cast<std::size_t>(p.tensor.numel()), 0.0);
    }
    return grads;
  };

  std::vector<double> direct = grads_for(Ablation::kEmbOnly);
  std::vector<double> zero_weighted = grads_for(Ablation::kAll);
  REQUIRE(direct.size() == zero_weighted.size());
  for (std::size_t i = 0; i < direct.size(); ++i)
    CHECK(direct[i] == doctest::Approx(zero_weighted[i]).epsilon(1e-12));
}

TEST_CASE("pretrain_codec with zero epochs returns the model unchanged") {
  RunConfig cfg = tiny_run_config();
  cfg.train.epochs = 0;
  CodecModel codec(cfg.codec, cfg.codec_init_seed());
  SyntheticDataset data(cfg.data);
  MelTransform mel(cfg.mel);
  auto params = codec.parameters();
  const std::vector<double> before = snapshot_params(params);
  PretrainResult result = pretrain_codec(codec, data, mel, cfg.train);
  CHECK(params_bit_equal(params, before));
  CHECK(result.epoch_loss.empty());
  CHECK(result.initial_val_mel == result.final_val_mel);
}

TEST_CASE("pretrain_codec keeps the reserved zero codewords frozen") {
  RunConfig cfg = tiny_run_config();
  cfg.train.epochs = 2;
  CodecModel codec(cfg.codec, cfg.codec_init_seed());
  SyntheticDataset data(cfg.data);
  MelTransform mel(cfg.mel);
  pretrain_codec(codec, data, mel, cfg.train);
  for (const Tensor& cb : codec.rvq.codebooks)
    for (std::int64_t j = 0; j < cb.dim(1); ++j) CHECK(cb.at(0, j) == 0.0);
}

TEST_CASE("checkpoint round trip is byte-exact") {
  RunConfig cfg = tiny_run_config();
  CodecModel codec(cfg.codec, cfg.codec_init_seed());
  auto params = codec.parameters();

  const std::string p1 = "test_ckpt_a.bin", p2 = "test_ckpt_b.bin";
  save_checkpoint(p1, cfg.to_json(), params);
  Checkpoint loaded = load_checkpoint(p1);
  CHECK(loaded.params.size() == params.size());
  save_checkpoint(p2, loaded.config, loaded.params);

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  const std::string b1 = slurp(p1), b2 = slurp(p2);
  REQUIRE(!b1.empty());
  CHECK(b1 == b2);

  // loading back into a model reproduces the float32-rounded values
  CodecModel other(cfg.codec, 999);
  auto other_params = other.parameters();
  fill_params(loaded, other_params);
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::int64_t j = 0; j < params[i].tensor.numel(); ++j)
      CHECK(other_params[i].tensor.data()[j] ==
            static_cast<double>(static_cast<float>(params[i].tensor.data()[j])));

  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("checkpoint loader rejects junk and mismatched shapes") {
  const std::string path = "test_ckpt_bad.bin";
  {
    std::ofstream f(path, std::ios::binary);
    f << "not a checkpoint at all";
  }
  CHECK_THROWS_AS(load_checkpoint(path), std::invalid_argument);
  std::remove(path.c_str());

  RunConfig cfg = tiny_run_config();
  CodecModel codec(cfg.codec, 1);
  auto params = codec.parameters();
  save_checkpoint(path, cfg.to_json(), params);
  Checkpoint ckpt = load_checkpoint(path);
  std::vector<NamedParam> wrong = {{"codec.enc.conv_in.weight", Tensor::zeros({2, 2})}};
  CHECK_THROWS_AS(fill_params(ckpt, wrong), std::invalid_argument);
  std::vector<NamedParam> missing = {{"no.such.param", Tensor::zeros({1})}};
  CHECK_THROWS_AS(fill_params(ckpt, missing), std::invalid_argument);
  std::remove(path.c_str());
}

TEST_CASE("history CSV has the pinned schema") {
  std::vector<LossBreakdown> rows = {{0.5, 0.25, 0.125, 126.0}};
  const std::string csv = history_csv(rows, 1);
  CHECK(csv.rfind("epoch,l_emb,l_time,l_freq,l_overall\n", 0) == 0);
  CHECK(csv.find("1,0.5,0.25,0.125,126\n") != std::string::npos);
}

TEST_CASE("run config JSON round trips and rejects unknown keys") {
  RunConfig cfg = tiny_run_config();
  RunConfig back = RunConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());

  nlohmann::json bad = cfg.to_json();
  bad["codec"]["oops"] = 1;
  CHECK_THROWS_WITH_AS(RunConfig::from_json(bad), doctest::Contains("oops"),
                       std::invalid_argument);

  nlohmann::json no_version = cfg.to_json();
  no_version.erase("version");
  CHECK_THROWS_AS(RunConfig::from_json(no_version), std::invalid_argument);

  nlohmann::json wrong_version = cfg.to_json();
  wrong_version["version"] = 2;
  CHECK_THROWS_AS(RunConfig::from_json(wrong_version), std::invalid_argument);
}
