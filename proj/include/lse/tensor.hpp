// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace lse {

/// Dense row-major tensor of 64-bit floats with an optional gradient buffer.
/// Copies are shallow; the payload is shared. All model math runs on these.
struct TensorImpl {
  std::vector<std::int64_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a backward pass touches it
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::int64_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::int64_t> shape, double value, bool requires_grad = false);
  static Tensor from(std::vector<std::int64_t> shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor randn(std::vector<std::int64_t> shape, std::mt19937_64& rng, double stddev = 1.0,
                      bool requires_grad = false);
  static Tensor rand_uniform(std::vector<std::int64_t> shape, std::mt19937_64& rng, double lo,
                             double hi, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<std::int64_t>& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  std::int64_t dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  double* data() { return impl_->data.data(); }
  const double* data() const { return impl_->data.data(); }
  std::vector<double>& values() { return impl_->data; }
  const std::vector<double>& values() const { return impl_->data; }

  // element access for 2-d tensors, row-major
  double& at(std::int64_t r, std::int64_t c) { return impl_->data[static_cast<std::size_t>(r * impl_->shape[1] + c)]; }
  double at(std::int64_t r, std::int64_t c) const { return impl_->data[static_cast<std::size_t>(r * impl_->shape[1] + c)]; }

  double item() const;

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  /// Gradient buffer, allocated zeroed on first use.
  std::vector<double>& grad();
  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  void zero_grad();

  /// Deep copy of shape/data; gradient buffer is not copied.
  Tensor clone() const;

  bool all_finite() const;

  std::shared_ptr<TensorImpl> impl_;

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
};

std::string shape_str(const std::vector<std::int64_t>& shape);
std::int64_t shape_numel(const std::vector<std::int64_t>& shape);

/// Reverse-mode tape. Ops append one node per call in execution order, which
/// is a topological order by construction; backward() replays the nodes in
/// exact reverse insertion order.
class Tape {
 public:
  struct Node {
    const char* op;
    std::function<void()> backward;
  };

  void record(const char* op, std::function<void()> backward_fn);
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Seeds d(loss)/d(loss)=1 and accumulates gradients into every
  /// requires_grad tensor reachable from `loss`. Rejects non-scalar losses.
  void backward(const Tensor& loss);

  static Tape* active();

 private:
  friend class TapeScope;
  friend class NoGradGuard;
  std::vector<Node> nodes_;
};

/// Activates a fresh tape for the current thread; deactivates and frees the
/// recorded nodes (and their saved activations) when it leaves scope.
class TapeScope {
 public:
  TapeScope();
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;
  Tape& tape() { return tape_; }

 private:
  Tape tape_;
  Tape* previous_;
};

/// Suppresses tape recording while alive (inference / finite differences).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

void backward(Tape& tape, const Tensor& loss);

namespace detail {
// Accumulation target: allocates the grad buffer on first write.
double* grad_accum_ptr(TensorImpl* t);
// Upstream gradient: nullptr when no gradient ever reached this tensor.
const double* grad_read_ptr(const TensorImpl* t);
bool taping_enabled();
}  // namespace detail

}  // namespace lse
