// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lse/params.hpp"

namespace lse {

/// Container layout: 8-byte magic "LSECKPT1", u32 LE header length, JSON
/// header (config + parameter manifest with shapes and byte offsets into the
/// payload), then the little-endian float32 parameter payload. Save/load/save
/// is byte-identical.
void save_checkpoint(const std::string& path, const nlohmann::json& config,
                     const std::vector<NamedParam>& params);

struct Checkpoint {
  nlohmann::json config;
  std::vector<NamedParam> params;  // manifest order

  const Tensor* find(const std::string& name) const;
};

Checkpoint load_checkpoint(const std::string& path);

/// Copies checkpoint values into `dst` by name; every destination parameter
/// must be present with a matching shape.
void fill_params(const Checkpoint& ckpt, std::vector<NamedParam>& dst);

}  // namespace lse
