// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <cstring>
#include <random>

#include <doctest.h>

#include "lse/codec.hpp"
#include "lse/ops.hpp"

using namespace lse;

namespace {

CodecConfig tiny_config() {
  CodecConfig cfg;
  cfg.strides = {2, 2};
  cfg.base_channels = 4;
  cfg.latent_dim = 8;
  cfg.n_codebooks = 2;
  cfg.codebook_size = 8;
  return cfg;
}

double column_norm(const std::vector<double>& flat, std::int64_t d, std::int64_t t_dim,
                   std::int64_t t) {
  double acc = 0.0;
  for (std::int64_t j = 0; j < d; ++j) {
    const double v = flat[static_cast<std::size_t>(j * t_dim + t)];
    acc += v * v;
  }
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("encode compresses time by the stride product") {
  CodecConfig cfg;  // default strides 2*4*5*8 = 320
  cfg.base_channels = 2;
  cfg.latent_dim = 4;
  CodecModel codec(cfg, 1);
  REQUIRE(codec.stride_product() == 320);

  CHECK(codec.encode(Tensor::zeros({3200})).shape() == std::vector<std::int64_t>{4, 10});
  CHECK(codec.encode(Tensor::zeros({320})).shape() == std::vector<std::int64_t>{4, 1});

  CodecModel small(tiny_config(), 2);
  CHECK(small.encode(Tensor::zeros({16})).shape() == std::vector<std::int64_t>{8, 4});

  CHECK_THROWS_AS(codec.encode(Tensor::zeros({0})), std::invalid_argument);
  CHECK_THROWS_AS(codec.encode(Tensor::zeros({321})), std::invalid_argument);
}

TEST_CASE("quantize snaps an exact codeword to itself") {
  CodecConfig cfg = tiny_config();
  cfg.n_codebooks = 1;
  CodecModel codec(cfg, 3);
  Tensor& cb = codec.rvq.codebooks[0];

  Tensor latent = Tensor::zeros({cfg.latent_dim, 1});
  for (std::int64_t j = 0; j < cfg.latent_dim; ++j) latent.data()[j] = cb.at(3, j);

  QuantizeResult q = codec.quantize(latent);
  CHECK(q.codes[0][0] == 3);
  for (std::int64_t j = 0; j < cfg.latent_dim; ++j)
    CHECK(q.quantized.data()[j] == cb.at(3, j));
  CHECK(q.commit_loss.item() == 0.0);
}

TEST_CASE("greedy RVQ matches a brute-force oracle over all code paths") {
  CodecConfig cfg = tiny_config();
  cfg.latent_dim = 2;
  cfg.n_codebooks = 2;
  cfg.codebook_size = 2;  // codeword 0 is the reserved zero vector
  CodecModel codec(cfg, 5);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor latent = Tensor::zeros({2, 3});
    for (std::int64_t i = 0; i < latent.numel(); ++i) latent.data()[i] = dist(rng);
    QuantizeResult q = codec.quantize(latent);

    for (std::int64_t t = 0; t < 3; ++t) {
      // enumerate all K^N_q = 4 code paths from scratch
      double best_stage0 = std::numeric_limits<double>::infinity();
      int pick0 = -1;
      for (int k0 = 0; k0 < 2; ++k0) {
        double d0 = 0.0;
        for (std::int64_t j = 0; j < 2; ++j) {
          const double r = latent.at(j, t) - codec.rvq.codebooks[0].at(k0, j);
          d0 += r * r;
        }
        if (d0 < best_stage0) {
          best_stage0 = d0;
          pick0 = k0;
        }
      }
      double best_stage1 = std::numeric_limits<double>::infinity();
      int pick1 = -1;
      for (int k1 = 0; k1 < 2; ++k1) {
        double d1 = 0.0;
        for (std::int64_t j = 0; j < 2; ++j) {
          const double r = latent.at(j, t) - codec.rvq.codebooks[0].at(pick0, j) -
                           codec.rvq.codebooks[1].at(k1, j);
          d1 += r * r;
        }
        if (d1 < best_stage1) {
          best_stage1 = d1;
          pick1 = k1;
        }
      }
      CHECK(q.codes[0][static_cast<std::size_t>(t)] == pick0);
      CHECK(q.codes[1][static_cast<std::size_t>(t)] == pick1);
      for (std::int64_t j = 0; j < 2; ++j)
        CHECK(q.quantized.at(j, t) == codec.rvq.codebooks[0].at(pick0, j) +
                                          codec.rvq.codebooks[1].at(pick1, j));
    }
  }
}

TEST_CASE("single-stage quantization is idempotent") {
  CodecConfig cfg = tiny_config();
  cfg.n_codebooks = 1;
  CodecModel codec(cfg, 7);
  std::mt19937_64 rng(11);
  Tensor latent = Tensor::rand_uniform({cfg.latent_dim, 5}, rng, -1.0, 1.0);
  QuantizeResult q1 = codec.quantize(latent);
  QuantizeResult q2 = codec.quantize(q1.quantized);
  CHECK(q1.codes == q2.codes);
  CHECK(std::memcmp(q1.quantized.data(), q2.quantized.data(),
                    static_cast<std::size_t>(q1.quantized.numel()) * sizeof(double)) == 0);
}

TEST_CASE("residual energy never increases across stages") {
  CodecConfig cfg = tiny_config();
  cfg.n_codebooks = 4;
  CodecModel codec(cfg, 13);
  std::mt19937_64 rng(17);
  Tensor latent = Tensor::rand_uniform({cfg.latent_dim, 6}, rng, -2.0, 2.0);
  QuantizeResult q = codec.quantize(latent);

  const std::int64_t d = cfg.latent_dim, t_dim = 6;
  std::vector<double> residual(latent.values());
  for (int stage = 0; stage < cfg.n_codebooks; ++stage) {
    for (std::int64_t t = 0; t < t_dim; ++t) {
      const double before = column_norm(residual, d, t_dim, t);
      const std::int32_t code = q.codes[static_cast<std::size_t>(stage)][static_cast<std::size_t>(t)];
      for (std::int64_t j = 0; j < d; ++j)
        residual[static_cast<std::size_t>(j * t_dim + t)] -=
            codec.rvq.codebooks[static_cast<std::size_t>(stage)].at(code, j);
      const double after = column_norm(residual, d, t_dim, t);
      CHECK(after <= before + 1e-15);
    }
  }
}

TEST_CASE("codes alone reproduce the quantized tensor bit-exactly") {
  CodecModel codec(tiny_config(), 19);
  std::mt19937_64 rng(23);
  Tensor latent = Tensor::rand_uniform({8, 7}, rng, -1.5, 1.5);
  QuantizeResult q = codec.quantize(latent);
  Tensor rebuilt = codec.decode_codes(q.codes);
  CHECK(std::memcmp(rebuilt.data(), q.quantized.data(),
                    static_cast<std::size_t>(rebuilt.numel()) * sizeof(double)) == 0);
}

TEST_CASE("quantize backward is the straight-through identity") {
  CodecModel codec(tiny_config(), 29);
  std::mt19937_64 rng(31);
  Tensor weights = Tensor::rand_uniform({8, 4}, rng, -1.0, 1.0);

  auto grad_through = [&](bool through_quantizer) {
    std::mt19937_64 latent_rng(77);
    Tensor latent = Tensor::rand_uniform({8, 4}, latent_rng, -1.0, 1.0);
    latent.set_requires_grad(true);
    TapeScope scope;
    Tensor path = through_quantizer ? codec.quantize(latent).quantized : latent;
    Tensor loss = mean(mul(path, Tensor::from(weights.shape(), weights.values())));
    scope.tape().backward(loss);
    return latent.impl_->grad;
  };
  std::vector<double> g_quant = grad_through(true);
  std::vector<double> g_direct = grad_through(false);
  REQUIRE(g_quant.size() == g_direct.size());
  CHECK(std::memcmp(g_quant.data(), g_direct.data(), g_quant.size() * sizeof(double)) == 0);
}

TEST_CASE("decode inverts the encoder's length arithmetic") {
  CodecConfig cfg;
  cfg.base_channels = 2;
  cfg.latent_dim = 4;
  CodecModel codec(cfg, 37);
  CHECK(codec.decode(Tensor::zeros({4, 10})).shape() == std::vector<std::int64_t>{3200});

  // fresh models have zero biases, so a zero latent maps to digital silence
  Tensor out = codec.decode(Tensor::zeros({4, 2}));
  for (std::int64_t i = 0; i < out.numel(); ++i) CHECK(out.data()[i] == 0.0);

  CodecModel small(tiny_config(), 41);
  std::mt19937_64 rng(43);
  Tensor wave = Tensor::rand_uniform({640}, rng, -0.8, 0.8);
  Tensor latent = small.encode(wave);
  QuantizeResult q = small.quantize(latent);
  Tensor recon = small.decode(q.quantized);
  CHECK(recon.shape() == wave.shape());
  for (std::int64_t i = 0; i < recon.numel(); ++i) {
    CHECK(recon.data()[i] <= 1.0);
    CHECK(recon.data()[i] >= -1.0);
  }
}

TEST_CASE("pad_to_multiple pads right with zeros and truncation undoes it") {
  Tensor w = Tensor::from({5}, {1.0, 2.0, 3.0, 4.0, 5.0});
  Tensor p = pad_to_multiple(w, 4);
  REQUIRE(p.numel() == 8);
  for (std::int64_t i = 0; i < 5; ++i) CHECK(p.data()[i] == w.data()[i]);
  for (std::int64_t i = 5; i < 8; ++i) CHECK(p.data()[i] == 0.0);
  CHECK(pad_to_multiple(w, 5).impl_ == w.impl_);  // aligned input passes through
}
