// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lse/codec.hpp"
#include "lse/se_model.hpp"

namespace lse {

struct MacEntry {
  std::string layer;
  std::string kind;  // linear | conv1d | conv_transpose1d | attention
  std::int64_t macs = 0;
};

/// Analytic multiply-accumulate counts; a pure integer function of
/// (architecture, input length). Activations, norms and softmax are not
/// counted. Conventions: conv1d = C_in*C_out*k*T_out, linear over T frames =
/// C_in*C_out*T, attention per block = 2*T^2*E (QK^T and AV) + 4*T*E^2
/// (projections).
struct MacReport {
  std::vector<MacEntry> entries;
  std::int64_t total = 0;
  std::int64_t input_samples = 0;
  double input_seconds = 0.0;

  std::string table() const;
};

/// SE module alone, operating at T = ceil(L/S). Codec encode/decode MACs are
/// excluded: both pipelines in the comparison share them.
MacReport count_se_macs(const CodecConfig& codec, const SEConfig& se,
                        std::int64_t input_samples);

/// Codec encoder + decoder, reported separately from the SE totals.
MacReport count_codec_macs(const CodecConfig& codec, std::int64_t input_samples);

/// Parameter-matched time-domain stand-in: a learned conv front-end at
/// stride 8 over the raw waveform, the same transformer stack, and a
/// transposed-conv output head. Used for MAC accounting only.
struct TimeBaselineConfig {
  SEConfig se;
  int frontend_stride = 8;
  int frontend_kernel = 16;
};

MacReport count_baseline_macs(const TimeBaselineConfig& cfg, std::int64_t input_samples);

struct EnhanceTiming {
  double encode_s = 0.0;
  double se_s = 0.0;
  double quantize_s = 0.0;
  double decode_s = 0.0;
  double total_s = 0.0;
};

/// Full enhancement pipeline: pad to a stride-product multiple, encode, SE,
/// quantize, decode, truncate to the input length. Inference only.
Tensor enhance_wave(const CodecModel& codec, const SEModel& se, const Tensor& wave,
                    EnhanceTiming* timing = nullptr);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RtfResult {
  double audio_seconds = 0.0;
  double wall_median_s = 0.0;
  double wall_mean_s = 0.0;
  double wall_min_s = 0.0;
  double wall_max_s = 0.0;
  double rtf = 0.0;  // median wall / audio
  int runs = 0;
  std::vector<StageTiming> stages;  // breakdown of the median run
  double stage_sum_s = 0.0;
};

double compute_rtf(double wall_seconds, double audio_seconds);

/// Runs the pipeline `runs` times (>= 5) and reports the median wall time.
RtfResult measure_rtf(const CodecModel& codec, const SEModel& se, const Tensor& wave,
                      int runs = 5);

struct EfficiencyRow {
  double duration_s = 0.0;
  std::string model;  // latent_se | time_baseline
  std::int64_t macs_total = 0;
  bool has_rtf = false;  // the baseline exists for MAC accounting only
  double rtf_median = 0.0;
  double rtf_mean = 0.0;
};

std::vector<EfficiencyRow> compare_efficiency(const CodecModel& codec, const SEModel& se,
                                              const TimeBaselineConfig& baseline,
                                              const std::vector<double>& durations_s,
                                              int rtf_runs);

/// CSV schema: duration_s, model, macs_total, rtf_median, rtf_mean (<empty>
/// rtf cells for the unmeasured baseline).
std::string efficiency_csv(const std::vector<EfficiencyRow>& rows);

}  // namespace lse
