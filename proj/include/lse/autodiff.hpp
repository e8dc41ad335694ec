// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lse/tensor.hpp"

namespace lse {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;   // "param<i>[<j>]" of the worst element
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares the taped gradient of a scalar-valued function against central
/// finite differences at the given point. Returns the max over all parameter
/// elements of |analytic - fd| / max(|analytic|, |fd|, 1e-8).
/// `f` must be a pure deterministic function of `params`.
GradCheckResult grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                           const std::vector<Tensor>& params, double eps = 1e-5);

}  // namespace lse
