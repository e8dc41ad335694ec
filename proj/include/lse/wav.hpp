// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>

#include "lse/tensor.hpp"

namespace lse {

struct WavData {
  Tensor wave;  // [L], samples in [-1, 1)
  int sample_rate = 0;
};

/// Reads 16-bit PCM mono RIFF/WAVE; sample s maps to s/32768. Unknown chunks
/// are skipped; anything other than mono/16-bit/PCM is rejected with a
/// message naming the field.
WavData wav_read(const std::string& path);

/// Writes 16-bit PCM mono; x maps to round(x*32768) clamped to
/// [-32768, 32767], the exact inverse of wav_read on int16 data. The file is
/// written to a temp path and renamed on success.
void wav_write(const std::string& path, const Tensor& wave, int sample_rate);

}  // namespace lse
