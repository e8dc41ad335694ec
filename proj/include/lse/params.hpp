// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstring>
#include <string>
#include <vector>

#include "lse/tensor.hpp"

namespace lse {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

inline std::int64_t total_param_count(const std::vector<NamedParam>& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

inline void set_requires_grad(std::vector<NamedParam>& params, bool value) {
  for (auto& p : params) p.tensor.set_requires_grad(value);
}

inline void zero_grads(std::vector<NamedParam>& params) {
  for (auto& p : params) p.tensor.zero_grad();
}

/// Flat copy of all parameter values, in registration order. Used for
/// bit-equality checks (frozen-codec guarantee, determinism tests).
inline std::vector<double> snapshot_params(const std::vector<NamedParam>& params) {
  std::vector<double> out;
  for (const auto& p : params)
    out.insert(out.end(), p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

inline bool params_bit_equal(const std::vector<NamedParam>& params,
                             const std::vector<double>& snapshot) {
  std::size_t idx = 0;
  for (const auto& p : params) {
    for (double v : p.tensor.values()) {
      if (idx >= snapshot.size()) return false;
      // bit comparison, not value comparison: catches -0.0 vs 0.0 drift too
      if (std::memcmp(&v, &snapshot[idx], sizeof(double)) != 0) return false;
      ++idx;
    }
  }
  return idx == snapshot.size();
}

}  // namespace lse
