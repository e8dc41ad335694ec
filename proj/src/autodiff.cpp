// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "lse/common.hpp"

namespace lse {

GradCheckResult grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                           const std::vector<Tensor>& params, double eps) {
  check_arg(eps >= 1e-7 && eps <= 1e-3,
            "grad_check: eps must lie in [1e-7, 1e-3], got " + std::to_string(eps));
  for (const Tensor& p : params) {
    p.impl_->requires_grad = true;
    p.impl_->grad.clear();
  }

  std::vector<std::vector<double>> analytic;
  {
    TapeScope scope;
    Tensor loss = f(params);
    scope.tape().backward(loss);
    for (const Tensor& p : params) {
      if (p.has_grad())
        analytic.push_back(p.impl_->grad);
      else
        analytic.emplace_back(p.impl_->data.size(), 0.0);
    }
  }

  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi];
    for (std::size_t i = 0; i < p.impl_->data.size(); ++i) {
      const double saved = p.impl_->data[i];
      p.impl_->data[i] = saved + eps;
      const double up = f(params).item();
      p.impl_->data[i] = saved - eps;
      const double down = f(params).item();
      p.impl_->data[i] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double an = analytic[pi][i];
      const double denom = std::max({std::abs(an), std::abs(fd), 1e-8});
      const double rel = std::abs(an - fd) / denom;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_param = "param" + std::to_string(pi) + "[" + std::to_string(i) + "]";
        result.analytic = an;
        result.numeric = fd;
      }
    }
  }
  return result;
}

}  // namespace lse
