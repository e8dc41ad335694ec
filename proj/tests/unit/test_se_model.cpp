// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cstring>
#include <random>

#include <doctest.h>

#include "lse/autodiff.hpp"
#include "lse/ops.hpp"
#include "lse/se_model.hpp"

using namespace lse;

namespace {

SEConfig tiny_config() {
  SEConfig cfg;
  cfg.n_blocks = 2;
  cfg.embed_dim = 16;
  cfg.n_heads = 2;
  cfg.ffn_mult = 2;
  return cfg;
}

}  // namespace

TEST_CASE("se_forward preserves the input shape for any T") {
  SEModel se(tiny_config(), 6, 1);
  std::mt19937_64 rng(3);
  for (std::int64_t frames : {1, 2, 7, 50}) {
    Tensor y_e = Tensor::rand_uniform({6, frames}, rng, -1.0, 1.0);
    Tensor y_h = se.forward(y_e);
    CHECK(y_h.shape() == y_e.shape());
    CHECK(y_h.all_finite());
  }
}

TEST_CASE("se_forward rejects a channel mismatch") {
  SEModel se(tiny_config(), 6, 1);
  CHECK_THROWS_WITH_AS(se.forward(Tensor::zeros({5, 4})),
                       doctest::Contains("do not match model latent_dim"),
                       std::invalid_argument);
}

TEST_CASE("se config validation") {
  SEConfig bad = tiny_config();
  bad.embed_dim = 10;
  bad.n_heads = 4;
  CHECK_THROWS_AS(SEModel(bad, 6, 1), std::invalid_argument);
}

TEST_CASE("full SE forward+loss gradients match finite differences") {
  SEConfig cfg;
  cfg.n_blocks = 2;
  cfg.embed_dim = 8;
  cfg.n_heads = 2;
  cfg.ffn_mult = 2;
  SEModel se(cfg, 4, 7);
  std::mt19937_64 rng(9);
  Tensor y_e = Tensor::rand_uniform({4, 3}, rng, -1.0, 1.0);
  Tensor target = Tensor::rand_uniform({4, 3}, rng, -1.0, 1.0);

  std::vector<Tensor> params;
  for (auto& p : se.parameters()) params.push_back(p.tensor);
  // the 0.01 factor keeps finite-difference cancellation noise below the
  // 1e-8 absolute floor of the relative-error denominator
  auto f = [&](const std::vector<Tensor>&) {
    return scale(sq_mean(sub(se.forward(y_e), target)), 0.01);
  };
  GradCheckResult gc = grad_check(f, params, 1e-5);
  CHECK(gc.max_rel_err <= 1e-4);
}

TEST_CASE("zero output projections make a transformer block the identity") {
  SEModel se(tiny_config(), 6, 11);
  TransformerBlock& blk = se.blocks[0];
  blk.wo = Tensor::zeros({16, 16});
  blk.bo = Tensor::zeros({16});
  blk.w2 = Tensor::zeros({16, 32});
  blk.b2 = Tensor::zeros({16});
  std::mt19937_64 rng(13);
  Tensor x = Tensor::rand_uniform({16, 5}, rng, -1.0, 1.0);
  Tensor y = se.transformer_block_forward(blk, x);
  CHECK(std::memcmp(x.data(), y.data(), static_cast<std::size_t>(x.numel()) * sizeof(double)) ==
        0);
}

TEST_CASE("transformer blocks are permutation-equivariant without positions") {
  SEModel se(tiny_config(), 6, 17);
  std::mt19937_64 rng(19);
  const std::int64_t frames = 6;
  Tensor x = Tensor::rand_uniform({16, frames}, rng, -1.0, 1.0);
  const std::vector<std::int64_t> perm = {3, 0, 5, 1, 4, 2};

  auto permute_cols = [&](const Tensor& t) {
    Tensor out = Tensor::zeros(t.shape());
    for (std::int64_t c = 0; c < t.dim(0); ++c)
      for (std::int64_t j = 0; j < frames; ++j)
        out.at(c, j) = t.at(c, perm[static_cast<std::size_t>(j)]);
    return out;
  };

  Tensor direct = permute_cols(se.transformer_block_forward(se.blocks[0], x));
  Tensor permuted = se.transformer_block_forward(se.blocks[0], permute_cols(x));
  for (std::int64_t i = 0; i < direct.numel(); ++i)
    CHECK(direct.data()[i] == doctest::Approx(permuted.data()[i]).epsilon(1e-12));
}

TEST_CASE("modulation block: zero input, saturated gate") {
  SEModel se(tiny_config(), 6, 23);
  Tensor zero = Tensor::zeros({16, 5});
  Tensor out = se.modulation_forward(zero);
  for (std::int64_t i = 0; i < out.numel(); ++i) CHECK(out.data()[i] == 0.0);

  // push the gate to sigmoid(~20) ~= 1: output ~= snake(snake(convB(x)))
  std::mt19937_64 rng(29);
  Tensor x = Tensor::rand_uniform({16, 5}, rng, -1.0, 1.0);
  for (std::int64_t i = 0; i < se.modulation.gate_b.numel(); ++i)
    se.modulation.gate_b.data()[i] = 20.0;
  Tensor gated = se.modulation_forward(x);
  Tensor feat = snake(conv1d(x, se.modulation.feat_w, se.modulation.feat_b, 1, 1),
                      se.modulation.feat_alpha);
  Tensor expected = snake(feat, se.modulation.out_alpha);
  for (std::int64_t i = 0; i < gated.numel(); ++i)
    CHECK(gated.data()[i] == doctest::Approx(expected.data()[i]).epsilon(1e-6));
}

TEST_CASE("modulation block gradients match finite differences") {
  SEConfig cfg = tiny_config();
  cfg.embed_dim = 8;
  SEModel se(cfg, 4, 31);
  std::mt19937_64 rng(37);
  Tensor x = Tensor::rand_uniform({8, 5}, rng, -1.0, 1.0);
  std::vector<Tensor> params = {se.modulation.gate_w, se.modulation.gate_b,
                                se.modulation.feat_w, se.modulation.feat_b,
                                se.modulation.feat_alpha, se.modulation.out_alpha, x};
  auto f = [&](const std::vector<Tensor>& p) { return sq_mean(se.modulation_forward(p.back())); };
  GradCheckResult gc = grad_check(f, params, 1e-5);
  CHECK(gc.max_rel_err <= 1e-4);
}

TEST_CASE("desk-default SE parameter count is pinned") {
  SEConfig cfg;  // defaults: 8 blocks, E=256, heads 4, ffn 4, kernel 3
  SEModel se(cfg, 64, 1);
  CHECK(se.parameter_count() == 6745408);

  SEModel again(cfg, 64, 1);
  CHECK(again.parameter_count() == se.parameter_count());
}

TEST_CASE("models built from the same seed are bit-identical") {
  SEModel a(tiny_config(), 6, 123);
  SEModel b(tiny_config(), 6, 123);
  auto pa = a.parameters(), pb = b.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    REQUIRE(pa[i].tensor.numel() == pb[i].tensor.numel());
    CHECK(std::memcmp(pa[i].tensor.data(), pb[i].tensor.data(),
                      static_cast<std::size_t>(pa[i].tensor.numel()) * sizeof(double)) == 0);
  }
}
