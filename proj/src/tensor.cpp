// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/tensor.hpp"

#include <cmath>
#include <sstream>

#include "lse/common.hpp"

namespace lse {

namespace {
thread_local Tape* g_active_tape = nullptr;
thread_local int g_no_grad_depth = 0;
}  // namespace

std::string shape_str(const std::vector<std::int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) n *= d;
  return n;
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  std::int64_t n = shape_numel(shape);
  check_arg(n >= 0, "tensor shape " + shape_str(shape) + " has negative extent");
  impl->shape = std::move(shape);
  impl->data.assign(static_cast<std::size_t>(n), 0.0);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (double& v : t.impl_->data) v = value;
  return t;
}

Tensor Tensor::from(std::vector<std::int64_t> shape, std::vector<double> data,
                    bool requires_grad) {
  check_arg(shape_numel(shape) == static_cast<std::int64_t>(data.size()),
            "tensor data length " + std::to_string(data.size()) +
                " does not match shape " + shape_str(shape));
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::randn(std::vector<std::int64_t> shape, std::mt19937_64& rng, double stddev,
                     bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.impl_->data) v = dist(rng);
  return t;
}

Tensor Tensor::rand_uniform(std::vector<std::int64_t> shape, std::mt19937_64& rng, double lo,
                            double hi, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.impl_->data) v = dist(rng);
  return t;
}

double Tensor::item() const {
  check_arg(numel() == 1, "item() requires a scalar tensor, got shape " + shape_str(shape()));
  return impl_->data[0];
}

std::vector<double>& Tensor::grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_ && !impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor t = Tensor::zeros(impl_->shape, impl_->requires_grad);
  t.impl_->data = impl_->data;
  return t;
}

bool Tensor::all_finite() const {
  for (double v : impl_->data)
    if (!std::isfinite(v)) return false;
  return true;
}

void Tape::record(const char* op, std::function<void()> backward_fn) {
  nodes_.push_back(Node{op, std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss) {
  check_arg(loss.defined() && loss.numel() == 1,
            "backward requires a scalar loss, got shape " +
                (loss.defined() ? shape_str(loss.shape()) : std::string("<empty>")));
  check_arg(loss.requires_grad(), "backward: loss does not depend on any requires_grad tensor");
  if (loss.impl_->grad.empty()) loss.impl_->grad.assign(1, 0.0);
  loss.impl_->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
}

Tape* Tape::active() { return g_no_grad_depth > 0 ? nullptr : g_active_tape; }

TapeScope::TapeScope() : previous_(g_active_tape) { g_active_tape = &tape_; }

TapeScope::~TapeScope() {
  g_active_tape = previous_;
  tape_.clear();
}

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

void backward(Tape& tape, const Tensor& loss) { tape.backward(loss); }

namespace detail {

double* grad_accum_ptr(TensorImpl* t) {
  if (!t->requires_grad) return nullptr;
  if (t->grad.empty()) t->grad.assign(t->data.size(), 0.0);
  return t->grad.data();
}

const double* grad_read_ptr(const TensorImpl* t) {
  return t->grad.empty() ? nullptr : t->grad.data();
}

bool taping_enabled() { return Tape::active() != nullptr; }

}  // namespace detail

}  // namespace lse
