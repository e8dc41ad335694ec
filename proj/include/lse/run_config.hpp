// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>

#include <json.hpp>

#include "lse/codec.hpp"
#include "lse/data.hpp"
#include "lse/dsp.hpp"
#include "lse/se_model.hpp"
#include "lse/trainer.hpp"

namespace lse {

/// Unified run configuration: a versioned JSON document with one section per
/// subsystem. Unknown keys are rejected; the top-level seed feeds training,
/// data generation, and model initialization.
struct RunConfig {
  int version = 1;
  std::uint64_t seed = 0;
  CodecConfig codec;
  SEConfig se;
  TrainConfig train;
  MelConfig mel;
  DataConfig data;

  std::uint64_t codec_init_seed() const;
  std::uint64_t se_init_seed() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load_file(const std::string& path);
};

}  // namespace lse
