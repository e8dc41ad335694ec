// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lse/common.hpp"

namespace lse {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

bool want_tape(std::initializer_list<const Tensor*> inputs) {
  if (!detail::taping_enabled()) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  check_arg(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                        shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

using detail::grad_accum_ptr;
using detail::grad_read_ptr;

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  Tensor out = Tensor::zeros(a.shape());
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
  if (want_tape({&a, &b})) {
    out.set_requires_grad(true);
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    Tape::active()->record("add", [ai, bi, oi, n] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* ga = grad_accum_ptr(ai.get()))
        for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i];
      if (double* gb = grad_accum_ptr(bi.get()))
        for (std::int64_t i = 0; i < n; ++i) gb[i] += g[i];
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  Tensor out = Tensor::zeros(a.shape());
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
  if (want_tape({&a, &b})) {
    out.set_requires_grad(true);
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    Tape::active()->record("sub", [ai, bi, oi, n] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* ga = grad_accum_ptr(ai.get()))
        for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i];
      if (double* gb = grad_accum_ptr(bi.get()))
        for (std::int64_t i = 0; i < n; ++i) gb[i] -= g[i];
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  Tensor out = Tensor::zeros(a.shape());
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (want_tape({&a, &b})) {
    out.set_requires_grad(true);
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    Tape::active()->record("mul", [ai, bi, oi, n] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* ga = grad_accum_ptr(ai.get()))
        for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i] * bi->data[static_cast<std::size_t>(i)];
      if (double* gb = grad_accum_ptr(bi.get()))
        for (std::int64_t i = 0; i < n; ++i) gb[i] += g[i] * ai->data[static_cast<std::size_t>(i)];
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * c;
  if (want_tape({&a})) {
    out.set_requires_grad(true);
    auto ai = a.impl_, oi = out.impl_;
    Tape::active()->record("scale", [ai, oi, c, n] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* ga = grad_accum_ptr(ai.get()))
        for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i] * c;
    });
  }
  return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& b) {
  check_arg(x.rank() == 2 && b.rank() == 1, "add_channel_bias: expects x [C,T], b [C]");
  const std::int64_t c_dim = x.dim(0), t_dim = x.dim(1);
  check_arg(b.dim(0) == c_dim, "add_channel_bias: bias channels " + std::to_string(b.dim(0)) +
                                   " do not match input channels " + std::to_string(c_dim));
  Tensor out = Tensor::zeros(x.shape());
  for (std::int64_t c = 0; c < c_dim; ++c) {
    const double bc = b.data()[c];
    for (std::int64_t t = 0; t < t_dim; ++t)
      out.data()[c * t_dim + t] = x.data()[c * t_dim + t] + bc;
  }
  if (want_tape({&x, &b})) {
    out.set_requires_grad(true);
    auto xi = x.impl_, bi = b.impl_, oi = out.impl_;
    Tape::active()->record("add_channel_bias", [xi, bi, oi, c_dim, t_dim] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* gx = grad_accum_ptr(xi.get()))
        for (std::int64_t i = 0; i < c_dim * t_dim; ++i) gx[i] += g[i];
      if (double* gb = grad_accum_ptr(bi.get()))
        for (std::int64_t c = 0; c < c_dim; ++c)
          for (std::int64_t t = 0; t < t_dim; ++t) gb[c] += g[c * t_dim + t];
    });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_arg(a.rank() == 2 && b.rank() == 2, "matmul: expects 2-d operands, got " +
                                                shape_str(a.shape()) + " and " + shape_str(b.shape()));
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  check_arg(b.dim(0) == k, "matmul: inner dimensions disagree, " + std::to_string(k) + " vs " +
                               std::to_string(b.dim(0)));
  Tensor out = Tensor::zeros({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = out.data();
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t l = 0; l < k; ++l) {
      const double av = pa[i * k + l];
      if (av == 0.0) continue;
      const double* brow = pb + l * n;
      double* crow = pc + i * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  if (want_tape({&a, &b})) {
    out.set_requires_grad(true);
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    Tape::active()->record("matmul", [ai, bi, oi, m, k, n] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* ga = grad_accum_ptr(ai.get())) {
        const double* pb = bi->data.data();
        for (std::int64_t i = 0; i < m; ++i)
          for (std::int64_t l = 0; l < k; ++l) {
            double acc = 0.0;
            const double* grow = g + i * n;
            const double* brow = pb + l * n;
            for (std::int64_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            ga[i * k + l] += acc;
          }
      }
      if (double* gb = grad_accum_ptr(bi.get())) {
        const double* pa = ai->data.data();
        for (std::int64_t i = 0; i < m; ++i)
          for (std::int64_t l = 0; l < k; ++l) {
            const double av = pa[i * k + l];
            if (av == 0.0) continue;
            const double* grow = g + i * n;
            double* gbrow = gb + l * n;
            for (std::int64_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
          }
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  check_arg(a.rank() == 2, "transpose: expects a 2-d tensor, got " + shape_str(a.shape()));
  const std::int64_t m = a.dim(0), n = a.dim(1);
  Tensor out = Tensor::zeros({n, m});
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j) out.data()[j * m + i] = a.data()[i * n + j];
  if (want_tape({&a})) {
    out.set_requires_grad(true);
    auto ai = a.impl_, oi = out.impl_;
    Tape::active()->record("transpose", [ai, oi, m, n] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* ga = grad_accum_ptr(ai.get()))
        for (std::int64_t i = 0; i < m; ++i)
          for (std::int64_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
    });
  }
  return out;
}

Tensor reshape(const Tensor& a, std::vector<std::int64_t> shape) {
  check_arg(shape_numel(shape) == a.numel(),
            "reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  Tensor out = Tensor::from(std::move(shape), a.values());
  if (want_tape({&a})) {
    out.set_requires_grad(true);
    auto ai = a.impl_, oi = out.impl_;
    const std::int64_t n = a.numel();
    Tape::active()->record("reshape", [ai, oi, n] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* ga = grad_accum_ptr(ai.get()))
        for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i];
    });
  }
  return out;
}

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_elementwise(const char* name, const Tensor& x, Fwd fwd, Bwd dfd) {
  Tensor out = Tensor::zeros(x.shape());
  const std::int64_t n = x.numel();
  for (std::int64_t i = 0; i < n; ++i) out.data()[i] = fwd(x.data()[i]);
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl_, oi = out.impl_;
    Tape::active()->record(name, [xi, oi, n, dfd] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* gx = grad_accum_ptr(xi.get()))
        for (std::int64_t i = 0; i < n; ++i)
          gx[i] += g[i] * dfd(xi->data[static_cast<std::size_t>(i)],
                              oi->data[static_cast<std::size_t>(i)]);
    });
  }
  return out;
}

}  // namespace

Tensor sigmoid(const Tensor& x) {
  return unary_elementwise(
      "sigmoid", x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary_elementwise(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor gelu(const Tensor& x) {
  return unary_elementwise(
      "gelu", x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [](double v, double) {
        return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) +
               v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
      });
}

Tensor snake(const Tensor& x, const Tensor& alpha) {
  check_arg(x.rank() == 2 && alpha.rank() == 1, "snake: expects x [C,T], alpha [C]");
  const std::int64_t c_dim = x.dim(0), t_dim = x.dim(1);
  check_arg(alpha.dim(0) == c_dim, "snake: alpha channels " + std::to_string(alpha.dim(0)) +
                                       " do not match input channels " + std::to_string(c_dim));
  for (std::int64_t c = 0; c < c_dim; ++c)
    check_arg(alpha.data()[c] > 0.0,
              "snake: alpha must be positive, channel " + std::to_string(c) + " is " +
                  std::to_string(alpha.data()[c]));
  Tensor out = Tensor::zeros(x.shape());
  for (std::int64_t c = 0; c < c_dim; ++c) {
    const double a = alpha.data()[c];
    for (std::int64_t t = 0; t < t_dim; ++t) {
      const double v = x.data()[c * t_dim + t];
      const double s = std::sin(a * v);
      out.data()[c * t_dim + t] = v + s * s / a;
    }
  }
  if (want_tape({&x, &alpha})) {
    out.set_requires_grad(true);
    auto xi = x.impl_, ali = alpha.impl_, oi = out.impl_;
    Tape::active()->record("snake", [xi, ali, oi, c_dim, t_dim] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      double* gx = grad_accum_ptr(xi.get());
      double* gal = grad_accum_ptr(ali.get());
      for (std::int64_t c = 0; c < c_dim; ++c) {
        const double a = ali->data[static_cast<std::size_t>(c)];
        for (std::int64_t t = 0; t < t_dim; ++t) {
          const std::int64_t i = c * t_dim + t;
          const double v = xi->data[static_cast<std::size_t>(i)];
          const double s = std::sin(a * v);
          if (gx) gx[i] += g[i] * (1.0 + std::sin(2.0 * a * v));
          if (gal) gal[c] += g[i] * (v * std::sin(2.0 * a * v) / a - s * s / (a * a));
        }
      }
    });
  }
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  check_arg(x.rank() == 2, "softmax_rows: expects a 2-d tensor, got " + shape_str(x.shape()));
  const std::int64_t rows = x.dim(0), cols = x.dim(1);
  Tensor out = Tensor::zeros(x.shape());
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * cols;
    double* yr = out.data() + r * cols;
    double m = xr[0];
    for (std::int64_t j = 1; j < cols; ++j) m = std::max(m, xr[j]);
    double sum = 0.0;
    for (std::int64_t j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - m);
      sum += yr[j];
    }
    for (std::int64_t j = 0; j < cols; ++j) yr[j] /= sum;
  }
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl_, oi = out.impl_;
    Tape::active()->record("softmax_rows", [xi, oi, rows, cols] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      double* gx = grad_accum_ptr(xi.get());
      if (!gx) return;
      for (std::int64_t r = 0; r < rows; ++r) {
        const double* yr = oi->data.data() + r * cols;
        const double* gr = g + r * cols;
        double dot = 0.0;
        for (std::int64_t j = 0; j < cols; ++j) dot += gr[j] * yr[j];
        for (std::int64_t j = 0; j < cols; ++j) gx[r * cols + j] += yr[j] * (gr[j] - dot);
      }
    });
  }
  return out;
}

Tensor layer_norm_cols(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  check_arg(x.rank() == 2, "layer_norm_cols: expects x [C,T], got " + shape_str(x.shape()));
  const std::int64_t c_dim = x.dim(0), t_dim = x.dim(1);
  check_arg(gamma.rank() == 1 && gamma.dim(0) == c_dim,
            "layer_norm_cols: gamma size " + std::to_string(gamma.numel()) +
                " does not match channels " + std::to_string(c_dim));
  check_arg(beta.rank() == 1 && beta.dim(0) == c_dim,
            "layer_norm_cols: beta size " + std::to_string(beta.numel()) +
                " does not match channels " + std::to_string(c_dim));
  Tensor out = Tensor::zeros(x.shape());
  std::vector<double> mu(static_cast<std::size_t>(t_dim)), istd(static_cast<std::size_t>(t_dim));
  for (std::int64_t t = 0; t < t_dim; ++t) {
    double m = 0.0;
    for (std::int64_t c = 0; c < c_dim; ++c) m += x.data()[c * t_dim + t];
    m /= static_cast<double>(c_dim);
    double var = 0.0;
    for (std::int64_t c = 0; c < c_dim; ++c) {
      const double d = x.data()[c * t_dim + t] - m;
      var += d * d;
    }
    var /= static_cast<double>(c_dim);
    mu[static_cast<std::size_t>(t)] = m;
    istd[static_cast<std::size_t>(t)] = 1.0 / std::sqrt(var + eps);
    for (std::int64_t c = 0; c < c_dim; ++c)
      out.data()[c * t_dim + t] = gamma.data()[c] * (x.data()[c * t_dim + t] - m) *
                                      istd[static_cast<std::size_t>(t)] +
                                  beta.data()[c];
  }
  if (want_tape({&x, &gamma, &beta})) {
    out.set_requires_grad(true);
    auto xi = x.impl_, gi = gamma.impl_, bi = beta.impl_, oi = out.impl_;
    Tape::active()->record("layer_norm_cols",
                           [xi, gi, bi, oi, c_dim, t_dim, mu = std::move(mu),
                            istd = std::move(istd)] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      double* gx = grad_accum_ptr(xi.get());
      double* gg = grad_accum_ptr(gi.get());
      double* gb = grad_accum_ptr(bi.get());
      const double n = static_cast<double>(c_dim);
      for (std::int64_t t = 0; t < t_dim; ++t) {
        const double m = mu[static_cast<std::size_t>(t)];
        const double is = istd[static_cast<std::size_t>(t)];
        double sum_gxhat = 0.0, sum_gxhat_xc = 0.0;
        for (std::int64_t c = 0; c < c_dim; ++c) {
          const double xc = xi->data[static_cast<std::size_t>(c * t_dim + t)] - m;
          const double gy = g[c * t_dim + t];
          const double gxhat = gy * gi->data[static_cast<std::size_t>(c)];
          sum_gxhat += gxhat;
          sum_gxhat_xc += gxhat * xc;
          if (gg) gg[c] += gy * xc * is;
          if (gb) gb[c] += gy;
        }
        if (gx) {
          for (std::int64_t c = 0; c < c_dim; ++c) {
            const double xc = xi->data[static_cast<std::size_t>(c * t_dim + t)] - m;
            const double gxhat = g[c * t_dim + t] * gi->data[static_cast<std::size_t>(c)];
            gx[c * t_dim + t] +=
                is * (gxhat - sum_gxhat / n - xc * is * is * sum_gxhat_xc / n);
          }
        }
      }
    });
  }
  return out;
}

namespace {

template <typename Fwd, typename Bwd>
Tensor reduce_mean(const char* name, const Tensor& x, Fwd fwd, Bwd contrib) {
  const std::int64_t n = x.numel();
  check_arg(n > 0, std::string(name) + ": empty tensor");
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) acc += fwd(x.data()[i]);
  Tensor out = Tensor::scalar(acc / static_cast<double>(n));
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl_, oi = out.impl_;
    Tape::active()->record(name, [xi, oi, n, contrib] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* gx = grad_accum_ptr(xi.get())) {
        const double gn = g[0] / static_cast<double>(n);
        for (std::int64_t i = 0; i < n; ++i)
          gx[i] += gn * contrib(xi->data[static_cast<std::size_t>(i)]);
      }
    });
  }
  return out;
}

}  // namespace

Tensor mean(const Tensor& x) {
  return reduce_mean(
      "mean", x, [](double v) { return v; }, [](double) { return 1.0; });
}

Tensor abs_mean(const Tensor& x) {
  return reduce_mean(
      "abs_mean", x, [](double v) { return std::abs(v); },
      [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor sq_mean(const Tensor& x) {
  return reduce_mean(
      "sq_mean", x, [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

namespace {

void check_conv_args(const char* op, const Tensor& input, const Tensor& weight,
                     const Tensor& bias, std::int64_t stride, std::int64_t padding,
                     std::int64_t in_ch_axis, std::int64_t out_ch_axis) {
  check_arg(input.rank() == 2, std::string(op) + ": input must be [C,T], got " +
                                   shape_str(input.shape()));
  check_arg(weight.rank() == 3, std::string(op) + ": weight must be 3-d, got " +
                                    shape_str(weight.shape()));
  check_arg(bias.rank() == 1, std::string(op) + ": bias must be 1-d, got " +
                                  shape_str(bias.shape()));
  check_arg(stride >= 1, std::string(op) + ": stride must be >= 1, got " + std::to_string(stride));
  check_arg(padding >= 0,
            std::string(op) + ": padding must be >= 0, got " + std::to_string(padding));
  check_arg(weight.dim(2) >= 1, std::string(op) + ": kernel size must be >= 1");
  check_arg(input.dim(0) == weight.dim(static_cast<int>(in_ch_axis)),
            std::string(op) + ": input channels " + std::to_string(input.dim(0)) +
                " do not match weight C_in " +
                std::to_string(weight.dim(static_cast<int>(in_ch_axis))));
  check_arg(bias.dim(0) == weight.dim(static_cast<int>(out_ch_axis)),
            std::string(op) + ": bias size " + std::to_string(bias.dim(0)) +
                " does not match weight C_out " +
                std::to_string(weight.dim(static_cast<int>(out_ch_axis))));
}

}  // namespace

Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              std::int64_t stride, std::int64_t padding) {
  check_conv_args("conv1d", input, weight, bias, stride, padding, 1, 0);
  const std::int64_t c_in = input.dim(0), t_in = input.dim(1);
  const std::int64_t c_out = weight.dim(0), k = weight.dim(2);
  check_arg(t_in + 2 * padding >= k, "conv1d: input length " + std::to_string(t_in) +
                                         " with padding " + std::to_string(padding) +
                                         " is shorter than kernel " + std::to_string(k));
  const std::int64_t t_out = (t_in + 2 * padding - k) / stride + 1;
  Tensor out = Tensor::zeros({c_out, t_out});
  for (std::int64_t co = 0; co < c_out; ++co) {
    double* orow = out.data() + co * t_out;
    const double bc = bias.data()[co];
    for (std::int64_t t = 0; t < t_out; ++t) orow[t] = bc;
    for (std::int64_t ci = 0; ci < c_in; ++ci) {
      const double* xrow = input.data() + ci * t_in;
      const double* wrow = weight.data() + (co * c_in + ci) * k;
      for (std::int64_t j = 0; j < k; ++j) {
        const double wv = wrow[j];
        if (wv == 0.0) continue;
        for (std::int64_t t = 0; t < t_out; ++t) {
          const std::int64_t ti = t * stride + j - padding;
          if (ti >= 0 && ti < t_in) orow[t] += wv * xrow[ti];
        }
      }
    }
  }
  if (want_tape({&input, &weight, &bias})) {
    out.set_requires_grad(true);
    auto xi = input.impl_, wi = weight.impl_, bi = bias.impl_, oi = out.impl_;
    Tape::active()->record("conv1d", [xi, wi, bi, oi, c_in, t_in, c_out, k, t_out, stride,
                                      padding] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      double* gx = grad_accum_ptr(xi.get());
      double* gw = grad_accum_ptr(wi.get());
      double* gb = grad_accum_ptr(bi.get());
      for (std::int64_t co = 0; co < c_out; ++co) {
        const double* grow = g + co * t_out;
        if (gb)
          for (std::int64_t t = 0; t < t_out; ++t) gb[co] += grow[t];
        for (std::int64_t ci = 0; ci < c_in; ++ci) {
          const double* xrow = xi->data.data() + ci * t_in;
          const double* wrow = wi->data.data() + (co * c_in + ci) * k;
          for (std::int64_t j = 0; j < k; ++j) {
            double wacc = 0.0;
            const double wv = wrow[j];
            for (std::int64_t t = 0; t < t_out; ++t) {
              const std::int64_t ti = t * stride + j - padding;
              if (ti < 0 || ti >= t_in) continue;
              wacc += xrow[ti] * grow[t];
              if (gx) gx[ci * t_in + ti] += wv * grow[t];
            }
            if (gw) gw[(co * c_in + ci) * k + j] += wacc;
          }
        }
      }
    });
  }
  return out;
}

Tensor conv_transpose1d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        std::int64_t stride, std::int64_t padding) {
  check_conv_args("conv_transpose1d", input, weight, bias, stride, padding, 0, 1);
  const std::int64_t c_in = input.dim(0), t_in = input.dim(1);
  const std::int64_t c_out = weight.dim(1), k = weight.dim(2);
  const std::int64_t t_out = (t_in - 1) * stride - 2 * padding + k;
  check_arg(t_out >= 1, "conv_transpose1d: output length " + std::to_string(t_out) +
                            " is not positive for input length " + std::to_string(t_in));
  Tensor out = Tensor::zeros({c_out, t_out});
  for (std::int64_t co = 0; co < c_out; ++co) {
    double* orow = out.data() + co * t_out;
    const double bc = bias.data()[co];
    for (std::int64_t t = 0; t < t_out; ++t) orow[t] = bc;
    for (std::int64_t ci = 0; ci < c_in; ++ci) {
      const double* xrow = input.data() + ci * t_in;
      const double* wrow = weight.data() + (ci * c_out + co) * k;
      for (std::int64_t j = 0; j < k; ++j) {
        const double wv = wrow[j];
        if (wv == 0.0) continue;
        for (std::int64_t t = 0; t < t_in; ++t) {
          const std::int64_t to = t * stride + j - padding;
          if (to >= 0 && to < t_out) orow[to] += wv * xrow[t];
        }
      }
    }
  }
  if (want_tape({&input, &weight, &bias})) {
    out.set_requires_grad(true);
    auto xi = input.impl_, wi = weight.impl_, bi = bias.impl_, oi = out.impl_;
    Tape::active()->record("conv_transpose1d", [xi, wi, bi, oi, c_in, t_in, c_out, k, t_out,
                                                stride, padding] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      double* gx = grad_accum_ptr(xi.get());
      double* gw = grad_accum_ptr(wi.get());
      double* gb = grad_accum_ptr(bi.get());
      for (std::int64_t co = 0; co < c_out; ++co) {
        const double* grow = g + co * t_out;
        if (gb)
          for (std::int64_t t = 0; t < t_out; ++t) gb[co] += grow[t];
        for (std::int64_t ci = 0; ci < c_in; ++ci) {
          const double* xrow = xi->data.data() + ci * t_in;
          const double* wrow = wi->data.data() + (ci * c_out + co) * k;
          for (std::int64_t j = 0; j < k; ++j) {
            double wacc = 0.0;
            const double wv = wrow[j];
            for (std::int64_t t = 0; t < t_in; ++t) {
              const std::int64_t to = t * stride + j - padding;
              if (to < 0 || to >= t_out) continue;
              wacc += xrow[t] * grow[to];
              if (gx) gx[ci * t_in + t] += wv * grow[to];
            }
            if (gw) gw[(ci * c_out + co) * k + j] += wacc;
          }
        }
      }
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& x, std::int64_t row0, std::int64_t count) {
  check_arg(x.rank() == 2, "slice_rows: expects a 2-d tensor");
  const std::int64_t rows = x.dim(0), cols = x.dim(1);
  check_arg(row0 >= 0 && count >= 1 && row0 + count <= rows,
            "slice_rows: range [" + std::to_string(row0) + "," + std::to_string(row0 + count) +
                ") out of bounds for " + std::to_string(rows) + " rows");
  Tensor out = Tensor::zeros({count, cols});
  std::copy(x.data() + row0 * cols, x.data() + (row0 + count) * cols, out.data());
  if (want_tape({&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl_, oi = out.impl_;
    Tape::active()->record("slice_rows", [xi, oi, row0, count, cols] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* gx = grad_accum_ptr(xi.get()))
        for (std::int64_t i = 0; i < count * cols; ++i) gx[row0 * cols + i] += g[i];
    });
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  check_arg(!parts.empty(), "concat_rows: empty input list");
  const std::int64_t cols = parts[0].dim(1);
  std::int64_t rows = 0;
  for (const Tensor& p : parts) {
    check_arg(p.rank() == 2 && p.dim(1) == cols,
              "concat_rows: column count mismatch, expected " + std::to_string(cols) + " got " +
                  shape_str(p.shape()));
    rows += p.dim(0);
  }
  Tensor out = Tensor::zeros({rows, cols});
  std::int64_t r = 0;
  bool any_grad = false;
  for (const Tensor& p : parts) {
    std::copy(p.data(), p.data() + p.numel(), out.data() + r * cols);
    r += p.dim(0);
    any_grad = any_grad || p.requires_grad();
  }
  if (detail::taping_enabled() && any_grad) {
    out.set_requires_grad(true);
    std::vector<std::shared_ptr<TensorImpl>> impls;
    impls.reserve(parts.size());
    for (const Tensor& p : parts) impls.push_back(p.impl_);
    auto oi = out.impl_;
    Tape::active()->record("concat_rows", [impls = std::move(impls), oi, cols] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      std::int64_t r = 0;
      for (const auto& pi : impls) {
        const std::int64_t n = static_cast<std::int64_t>(pi->data.size());
        if (double* gp = grad_accum_ptr(pi.get()))
          for (std::int64_t i = 0; i < n; ++i) gp[i] += g[r * cols + i];
        r += n / cols;
      }
    });
  }
  return out;
}

Tensor straight_through(const Tensor& src, std::vector<double> values) {
  check_arg(static_cast<std::int64_t>(values.size()) == src.numel(),
            "straight_through: value count " + std::to_string(values.size()) +
                " does not match source " + shape_str(src.shape()));
  Tensor out = Tensor::from(src.shape(), std::move(values));
  if (want_tape({&src})) {
    out.set_requires_grad(true);
    auto si = src.impl_, oi = out.impl_;
    const std::int64_t n = src.numel();
    Tape::active()->record("straight_through", [si, oi, n] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* gs = grad_accum_ptr(si.get()))
        for (std::int64_t i = 0; i < n; ++i) gs[i] += g[i];
    });
  }
  return out;
}

Tensor embed_rows(const Tensor& codebook, const std::vector<std::int32_t>& codes) {
  check_arg(codebook.rank() == 2, "embed_rows: codebook must be [K,D]");
  const std::int64_t k_dim = codebook.dim(0), d_dim = codebook.dim(1);
  const std::int64_t t_dim = static_cast<std::int64_t>(codes.size());
  check_arg(t_dim >= 1, "embed_rows: empty code list");
  for (std::int32_t c : codes)
    check_arg(c >= 0 && c < k_dim,
              "embed_rows: code " + std::to_string(c) + " outside codebook of size " +
                  std::to_string(k_dim));
  Tensor out = Tensor::zeros({d_dim, t_dim});
  for (std::int64_t t = 0; t < t_dim; ++t) {
    const double* row = codebook.data() + codes[static_cast<std::size_t>(t)] * d_dim;
    for (std::int64_t d = 0; d < d_dim; ++d) out.data()[d * t_dim + t] = row[d];
  }
  if (want_tape({&codebook})) {
    out.set_requires_grad(true);
    auto ci = codebook.impl_, oi = out.impl_;
    Tape::active()->record("embed_rows", [ci, oi, codes, d_dim, t_dim] {
      const double* g = grad_read_ptr(oi.get());
      if (!g) return;
      if (double* gc = grad_accum_ptr(ci.get()))
        for (std::int64_t t = 0; t < t_dim; ++t) {
          double* grow = gc + codes[static_cast<std::size_t>(t)] * d_dim;
          for (std::int64_t d = 0; d < d_dim; ++d) grow[d] += g[d * t_dim + t];
        }
    });
  }
  return out;
}

}  // namespace lse
