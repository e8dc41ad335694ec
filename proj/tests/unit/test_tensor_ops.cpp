// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <cstring>
#include <random>

#include <doctest.h>

#include "lse/autodiff.hpp"
#include "lse/ops.hpp"
#include "lse/tensor.hpp"

using namespace lse;

namespace {

Tensor random_tensor(std::vector<std::int64_t> shape, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  return Tensor::rand_uniform(std::move(shape), rng, lo, hi);
}

// values bounded away from zero, for kinked ops like abs_mean
Tensor random_nonzero(std::vector<std::int64_t> shape, std::mt19937_64& rng) {
  Tensor t = Tensor::rand_uniform(std::move(shape), rng, 0.1, 1.0);
  std::bernoulli_distribution flip(0.5);
  for (std::int64_t i = 0; i < t.numel(); ++i)
    if (flip(rng)) t.data()[i] = -t.data()[i];
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) acc += a.data()[i] * b.data()[i];
  return acc;
}

}  // namespace

TEST_CASE("conv1d identity kernel passes input through") {
  Tensor x = Tensor::from({1, 3}, {1.0, 2.0, 3.0});
  Tensor w = Tensor::from({1, 1, 1}, {1.0});
  Tensor b = Tensor::zeros({1});
  Tensor y = conv1d(x, w, b, 1, 0);
  REQUIRE(y.shape() == std::vector<std::int64_t>{1, 3});
  CHECK(y.data()[0] == 1.0);
  CHECK(y.data()[1] == 2.0);
  CHECK(y.data()[2] == 3.0);
}

TEST_CASE("conv1d output length follows the shape formula") {
  std::mt19937_64 rng(7);
  Tensor x = random_tensor({4, 100}, rng);
  Tensor w = random_tensor({8, 4, 3}, rng);
  Tensor b = random_tensor({8}, rng);
  Tensor y = conv1d(x, w, b, 2, 1);
  CHECK(y.shape() == std::vector<std::int64_t>{8, 50});  // floor((100+2-3)/2)+1
}

TEST_CASE("conv1d rejects channel mismatches with a diagnostic") {
  Tensor x = Tensor::zeros({4, 10});
  Tensor w = Tensor::zeros({8, 3, 3});
  Tensor b = Tensor::zeros({8});
  CHECK_THROWS_WITH_AS(conv1d(x, w, b, 1, 1),
                       doctest::Contains("input channels 4 do not match weight C_in 3"),
                       std::invalid_argument);
  CHECK_THROWS_AS(conv1d(Tensor::zeros({1, 2}), Tensor::zeros({1, 1, 5}), Tensor::zeros({1}),
                         1, 0),
                  std::invalid_argument);
}

TEST_CASE("conv_transpose1d output length and bias broadcast") {
  std::mt19937_64 rng(11);
  Tensor x = random_tensor({3, 10}, rng);
  Tensor w = random_tensor({3, 2, 8}, rng);
  Tensor b = random_tensor({2}, rng);
  Tensor y = conv_transpose1d(x, w, b, 4, 2);
  CHECK(y.shape() == std::vector<std::int64_t>{2, 40});  // 9*4 - 4 + 8

  Tensor zero_in = Tensor::zeros({3, 10});
  Tensor y0 = conv_transpose1d(zero_in, w, b, 4, 2);
  for (std::int64_t c = 0; c < 2; ++c)
    for (std::int64_t t = 0; t < 40; ++t) CHECK(y0.at(c, t) == b.data()[c]);
}

TEST_CASE("conv1d / conv_transpose1d are exact adjoints") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = random_tensor({3, 8}, rng);
    Tensor w = random_tensor({5, 3, 4}, rng);  // conv layout [C_out,C_in,k]
    Tensor zero_out = Tensor::zeros({5});
    Tensor zero_in = Tensor::zeros({3});
    Tensor cx = conv1d(x, w, zero_out, 2, 1);  // [5,4]
    Tensor y = random_tensor(cx.shape(), rng);
    // same array reinterpreted as conv_transpose layout [C_in=5,C_out=3,k]
    Tensor wt = Tensor::from({5, 3, 4}, w.values());
    Tensor cty = conv_transpose1d(y, wt, zero_in, 2, 1);  // [3,8]
    CHECK(dot(cx, y) == doctest::Approx(dot(x, cty)).epsilon(1e-9));
  }
}

TEST_CASE("conv_transpose1d input gradient is a conv1d forward pass") {
  std::mt19937_64 rng(17);
  Tensor x = random_tensor({2, 6}, rng);
  x.set_requires_grad(true);
  Tensor w = random_tensor({2, 3, 4}, rng);
  Tensor b = Tensor::zeros({3});
  Tensor upstream;
  {
    TapeScope scope;
    Tensor y = conv_transpose1d(x, w, b, 2, 1);
    upstream = random_tensor(y.shape(), rng);
    Tensor loss = mean(mul(y, Tensor::from(upstream.shape(), upstream.values())));
    scope.tape().backward(loss);
  }
  // d(loss)/dx = conv1d(upstream/numel, same weight array read in conv layout)
  const double n = static_cast<double>(upstream.numel());
  Tensor wc = Tensor::from({2, 3, 4}, w.values());  // conv layout [C_out=2,C_in=3,k]
  Tensor expected = conv1d(scale(upstream, 1.0 / n), wc, Tensor::zeros({2}), 2, 1);
  REQUIRE(x.has_grad());
  for (std::int64_t i = 0; i < x.numel(); ++i)
    CHECK(x.impl_->grad[static_cast<std::size_t>(i)] ==
          doctest::Approx(expected.data()[i]).epsilon(1e-12));
}

TEST_CASE("snake values, derivative, monotonicity, domain") {
  Tensor alpha = Tensor::from({1}, {1.0});
  Tensor zero = Tensor::zeros({1, 5});
  Tensor s0 = snake(zero, alpha);
  for (std::int64_t i = 0; i < 5; ++i) CHECK(s0.data()[i] == 0.0);
  Tensor a3 = Tensor::from({1}, {3.7});
  Tensor s0b = snake(zero, a3);
  for (std::int64_t i = 0; i < 5; ++i) CHECK(s0b.data()[i] == 0.0);

  const double half_pi = 1.5707963267948966;
  Tensor x = Tensor::from({1, 1}, {half_pi});
  CHECK(snake(x, alpha).item() == doctest::Approx(half_pi + 1.0).epsilon(1e-12));

  // derivative at 0 is 1, against finite differences
  auto f = [&alpha](const std::vector<Tensor>& params) {
    return mean(snake(params[0], alpha));
  };
  Tensor at0 = Tensor::zeros({1, 1});
  GradCheckResult gc = grad_check(f, {at0}, 1e-5);
  CHECK(gc.max_rel_err <= 1e-6);
  {
    TapeScope scope;
    Tensor p = Tensor::zeros({1, 1}, true);
    Tensor loss = mean(snake(p, alpha));
    scope.tape().backward(loss);
    CHECK(p.impl_->grad[0] == doctest::Approx(1.0).epsilon(1e-12));
  }

  // derivative 1 + sin(2*alpha*x) >= 0 on a grid
  for (double a : {0.5, 1.0, 2.3}) {
    for (double v = -10.0; v <= 10.0; v += 0.01) {
      CHECK(1.0 + std::sin(2.0 * a * v) >= -1e-15);
    }
  }

  CHECK_THROWS_AS(snake(zero, Tensor::from({1}, {0.0})), std::invalid_argument);
  CHECK_THROWS_AS(snake(zero, Tensor::from({1}, {-0.5})), std::invalid_argument);
}

TEST_CASE("elementwise and reduction basics") {
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  CHECK(abs_mean(Tensor::from({4}, {1.0, -1.0, 3.0, -3.0})).item() == 2.0);
  CHECK(sq_mean(Tensor::from({2}, {3.0, 4.0})).item() == 12.5);
  CHECK(mean(Tensor::from({4}, {1.0, 2.0, 3.0, 4.0})).item() == 2.5);
  CHECK_THROWS_AS(add(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), std::invalid_argument);
  CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), std::invalid_argument);
}

TEST_CASE("softmax rows sum to one") {
  std::mt19937_64 rng(23);
  Tensor x = random_tensor({6, 9}, rng, -5.0, 5.0);
  Tensor y = softmax_rows(x);
  for (std::int64_t r = 0; r < 6; ++r) {
    double sum = 0.0;
    for (std::int64_t c = 0; c < 9; ++c) sum += y.at(r, c);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("layer_norm normalizes each frame to zero mean, unit variance") {
  std::mt19937_64 rng(29);
  const std::int64_t c_dim = 16, t_dim = 7;
  Tensor x = random_tensor({c_dim, t_dim}, rng, -3.0, 3.0);
  Tensor gamma = Tensor::full({c_dim}, 1.0);
  Tensor beta = Tensor::zeros({c_dim});
  Tensor y = layer_norm_cols(x, gamma, beta);
  for (std::int64_t t = 0; t < t_dim; ++t) {
    double m = 0.0, var = 0.0;
    for (std::int64_t c = 0; c < c_dim; ++c) m += y.at(c, t);
    m /= static_cast<double>(c_dim);
    for (std::int64_t c = 0; c < c_dim; ++c) var += (y.at(c, t) - m) * (y.at(c, t) - m);
    var /= static_cast<double>(c_dim);
    CHECK(std::abs(m) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-9);
  }
}

TEST_CASE("backward: mean gradient and fan-out accumulation") {
  {
    TapeScope scope;
    Tensor x = Tensor::from({5}, {1.0, 2.0, 3.0, 4.0, 5.0}, true);
    Tensor loss = mean(x);
    scope.tape().backward(loss);
    for (std::int64_t i = 0; i < 5; ++i) CHECK(x.impl_->grad[static_cast<std::size_t>(i)] == 0.2);
  }
  {
    TapeScope scope;
    Tensor x = Tensor::from({1}, {1.5}, true);
    Tensor loss = mean(add(x, x));  // y = x + x
    scope.tape().backward(loss);
    CHECK(x.impl_->grad[0] == 2.0);
  }
}

TEST_CASE("backward rejects non-scalar losses") {
  TapeScope scope;
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor y = add(x, x);
  CHECK_THROWS_AS(scope.tape().backward(y), std::invalid_argument);
}

TEST_CASE("grad_check is exact on linear maps") {
  std::mt19937_64 rng(31);
  Tensor c = random_tensor({6}, rng);
  auto f = [&c](const std::vector<Tensor>& params) {
    return mean(add(mul(params[0], Tensor::from(c.shape(), c.values())),
                    scale(params[1], 2.0)));
  };
  Tensor x = random_tensor({6}, rng);
  Tensor y = random_tensor({6}, rng);
  GradCheckResult gc = grad_check(f, {x, y}, 1e-4);
  CHECK(gc.max_rel_err <= 1e-10);
}

TEST_CASE("grad_check rejects eps outside its domain") {
  auto f = [](const std::vector<Tensor>& params) { return mean(params[0]); };
  Tensor x = Tensor::from({2}, {1.0, 2.0});
  CHECK_THROWS_AS(grad_check(f, {x}, 1e-2), std::invalid_argument);
  CHECK_THROWS_AS(grad_check(f, {x}, 1e-8), std::invalid_argument);
}

namespace {

// identity with a deliberately doubled backward, for fault injection
Tensor corrupted_identity(const Tensor& x) {
  Tensor out = Tensor::from(x.shape(), x.values());
  if (Tape::active() && x.requires_grad()) {
    out.set_requires_grad(true);
    auto xi = x.impl_, oi = out.impl_;
    Tape::active()->record("corrupted_identity", [xi, oi] {
      const double* g = detail::grad_read_ptr(oi.get());
      if (!g) return;
      if (double* gx = detail::grad_accum_ptr(xi.get()))
        for (std::size_t i = 0; i < xi->data.size(); ++i) gx[i] += 2.0 * g[i];
    });
  }
  return out;
}

}  // namespace

TEST_CASE("grad_check flags a corrupted gradient") {
  std::mt19937_64 rng(37);
  Tensor x = random_nonzero({8}, rng);
  auto f = [](const std::vector<Tensor>& params) { return mean(corrupted_identity(params[0])); };
  GradCheckResult gc = grad_check(f, {x}, 1e-5);
  CHECK(gc.max_rel_err == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("snake chain gradient matches finite differences") {
  std::mt19937_64 rng(41);
  Tensor alpha = Tensor::rand_uniform({3}, rng, 0.5, 2.0);
  auto f = [](const std::vector<Tensor>& params) {
    return sq_mean(snake(snake(params[0], params[1]), params[1]));
  };
  Tensor x = random_tensor({3, 5}, rng);
  GradCheckResult gc = grad_check(f, {x, alpha}, 1e-5);
  CHECK(gc.max_rel_err <= 1e-4);
}

TEST_CASE("every differentiable op passes grad_check over 20 seeds") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);

    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({3, 4}, rng);
    auto f_elem = [](const std::vector<Tensor>& p) {
      return mean(add(mul(sub(p[0], p[1]), p[0]), scale(p[1], 0.7)));
    };
    CHECK(grad_check(f_elem, {a, b}, 1e-5).max_rel_err <= 1e-4);

    Tensor m1 = random_tensor({3, 4}, rng);
    Tensor m2 = random_tensor({4, 2}, rng);
    auto f_matmul = [](const std::vector<Tensor>& p) {
      return sq_mean(matmul(p[0], p[1]));
    };
    CHECK(grad_check(f_matmul, {m1, m2}, 1e-5).max_rel_err <= 1e-4);

    Tensor t1 = random_tensor({4, 3}, rng);
    auto f_transpose_reshape = [](const std::vector<Tensor>& p) {
      return abs_mean(reshape(transpose(p[0]), {2, 6}));
    };
    CHECK(grad_check(f_transpose_reshape, {random_nonzero({4, 3}, rng)}, 1e-5).max_rel_err <=
          1e-4);
    (void)t1;

    Tensor xb = random_tensor({3, 5}, rng);
    Tensor bias = random_tensor({3}, rng);
    auto f_bias = [](const std::vector<Tensor>& p) {
      return sq_mean(add_channel_bias(p[0], p[1]));
    };
    CHECK(grad_check(f_bias, {xb, bias}, 1e-5).max_rel_err <= 1e-4);

    auto f_act = [](const std::vector<Tensor>& p) {
      return mean(gelu(tanh(sigmoid(p[0]))));
    };
    CHECK(grad_check(f_act, {random_tensor({2, 6}, rng, -2.0, 2.0)}, 1e-5).max_rel_err <= 1e-4);

    auto f_softmax = [](const std::vector<Tensor>& p) {
      return sq_mean(softmax_rows(p[0]));
    };
    CHECK(grad_check(f_softmax, {random_tensor({3, 6}, rng, -2.0, 2.0)}, 1e-5).max_rel_err <=
          1e-4);

    Tensor gamma = random_tensor({5}, rng, 0.5, 1.5);
    Tensor beta = random_tensor({5}, rng, -0.5, 0.5);
    auto f_ln = [](const std::vector<Tensor>& p) {
      return sq_mean(layer_norm_cols(p[0], p[1], p[2]));
    };
    CHECK(grad_check(f_ln, {random_tensor({5, 4}, rng, -2.0, 2.0), gamma, beta}, 1e-5)
              .max_rel_err <= 1e-4);

    Tensor cx = random_tensor({3, 9}, rng);
    Tensor cw = random_tensor({4, 3, 3}, rng);
    Tensor cb = random_tensor({4}, rng);
    auto f_conv = [](const std::vector<Tensor>& p) {
      return sq_mean(conv1d(p[0], p[1], p[2], 2, 1));
    };
    CHECK(grad_check(f_conv, {cx, cw, cb}, 1e-5).max_rel_err <= 1e-4);

    Tensor tx = random_tensor({3, 5}, rng);
    Tensor tw = random_tensor({3, 2, 4}, rng);
    Tensor tb = random_tensor({2}, rng);
    auto f_convt = [](const std::vector<Tensor>& p) {
      return sq_mean(conv_transpose1d(p[0], p[1], p[2], 2, 1));
    };
    CHECK(grad_check(f_convt, {tx, tw, tb}, 1e-5).max_rel_err <= 1e-4);

    Tensor sx = random_tensor({6, 4}, rng);
    auto f_slice_concat = [](const std::vector<Tensor>& p) {
      Tensor top = slice_rows(p[0], 0, 3);
      Tensor bottom = slice_rows(p[0], 3, 3);
      return sq_mean(concat_rows({bottom, top}));
    };
    CHECK(grad_check(f_slice_concat, {sx}, 1e-5).max_rel_err <= 1e-4);

    Tensor alpha = Tensor::rand_uniform({4}, rng, 0.5, 2.0);
    auto f_snake = [](const std::vector<Tensor>& p) {
      return sq_mean(snake(p[0], p[1]));
    };
    CHECK(grad_check(f_snake, {random_tensor({4, 5}, rng), alpha}, 1e-5).max_rel_err <= 1e-4);

    Tensor codebook = random_tensor({5, 3}, rng);
    std::vector<std::int32_t> codes = {4, 0, 2, 2};
    auto f_embed = [&codes](const std::vector<Tensor>& p) {
      return sq_mean(embed_rows(p[0], codes));
    };
    CHECK(grad_check(f_embed, {codebook}, 1e-5).max_rel_err <= 1e-4);

    Tensor st_src = random_tensor({2, 3}, rng);
    auto f_st = [](const std::vector<Tensor>& p) {
      std::vector<double> values(p[0].values());
      for (double& v : values) v += 0.25;  // forward differs, backward is identity
      return mean(straight_through(p[0], std::move(values)));
    };
    CHECK(grad_check(f_st, {st_src}, 1e-5).max_rel_err <= 1e-4);
  }
}

TEST_CASE("forward and backward are bit-deterministic for a fixed seed") {
  auto run = [](std::vector<double>& out_data, std::vector<double>& out_grad) {
    std::mt19937_64 rng(97);
    Tensor x = Tensor::rand_uniform({4, 6}, rng, -1.0, 1.0, true);
    Tensor w = Tensor::rand_uniform({3, 4, 3}, rng, -0.5, 0.5, true);
    Tensor b = Tensor::rand_uniform({3}, rng, -0.1, 0.1, true);
    TapeScope scope;
    Tensor y = conv1d(sigmoid(x), w, b, 1, 1);
    Tensor loss = sq_mean(y);
    scope.tape().backward(loss);
    out_data = y.values();
    out_grad = w.impl_->grad;
  };
  std::vector<double> d1, g1, d2, g2;
  run(d1, g1);
  run(d2, g2);
  REQUIRE(d1.size() == d2.size());
  CHECK(std::memcmp(d1.data(), d2.data(), d1.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}
