// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/perf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "lse/common.hpp"
#include "lse/trainer.hpp"

namespace lse {

namespace {

void push(MacReport& report, std::string layer, std::string kind, std::int64_t macs) {
  report.total += macs;
  report.entries.push_back({std::move(layer), std::move(kind), macs});
}

void count_transformer_stack(MacReport& report, const SEConfig& se, std::int64_t frames,
                             const std::string& prefix) {
  const std::int64_t e = se.embed_dim;
  for (int b = 0; b < se.n_blocks; ++b) {
    const std::string name = prefix + "block" + std::to_string(b);
    push(report, name + ".attn_proj", "linear", 4 * frames * e * e);
    push(report, name + ".attn_scores", "attention", 2 * frames * frames * e);
    push(report, name + ".ffn", "linear", 2 * frames * e * (se.ffn_mult * e));
  }
}

}  // namespace

std::string MacReport::table() const {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-28s %-18s %16s\n", "layer", "kind", "MACs");
  os << buf;
  for (const MacEntry& entry : entries) {
    std::snprintf(buf, sizeof(buf), "%-28s %-18s %16lld\n", entry.layer.c_str(),
                  entry.kind.c_str(), static_cast<long long>(entry.macs));
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "%-28s %-18s %16lld  (%.3f GMAC, %.2f s input)\n", "total",
                "", static_cast<long long>(total), static_cast<double>(total) * 1e-9,
                input_seconds);
  os << buf;
  return os.str();
}

MacReport count_se_macs(const CodecConfig& codec, const SEConfig& se,
                        std::int64_t input_samples) {
  check_arg(input_samples >= 1, "count_se_macs: input length must be positive");
  se.validate();
  MacReport report;
  report.input_samples = input_samples;
  report.input_seconds = static_cast<double>(input_samples) / codec.sample_rate;
  const std::int64_t s = codec.stride_product();
  const std::int64_t frames = (input_samples + s - 1) / s;
  const std::int64_t d = codec.latent_dim;
  const std::int64_t e = se.embed_dim;

  push(report, "in_proj", "linear", d * e * frames);
  count_transformer_stack(report, se, frames, "");
  push(report, "modulation.gate", "conv1d",
       e * e * static_cast<std::int64_t>(se.modulation_kernel) * frames);
  push(report, "modulation.feat", "conv1d",
       e * e * static_cast<std::int64_t>(se.modulation_kernel) * frames);
  push(report, "out_proj", "linear", e * d * frames);
  return report;
}

MacReport count_codec_macs(const CodecConfig& codec, std::int64_t input_samples) {
  check_arg(input_samples >= 1, "count_codec_macs: input length must be positive");
  codec.validate();
  const std::int64_t s_total = codec.stride_product();
  const std::int64_t length = ((input_samples + s_total - 1) / s_total) * s_total;

  MacReport report;
  report.input_samples = input_samples;
  report.input_seconds = static_cast<double>(input_samples) / codec.sample_rate;

  std::int64_t t = length;
  std::int64_t ch = codec.base_channels;
  push(report, "enc.conv_in", "conv1d", 1 * ch * 7 * t);
  for (std::size_t i = 0; i < codec.strides.size(); ++i) {
    const std::int64_t s = codec.strides[i];
    const std::int64_t k = s + 2 * ((s + 1) / 2);
    t /= s;
    push(report, "enc.stage" + std::to_string(i), "conv1d", ch * (2 * ch) * k * t);
    ch *= 2;
  }
  push(report, "enc.conv_out", "conv1d", ch * codec.latent_dim * 3 * t);

  push(report, "dec.conv_in", "conv1d", codec.latent_dim * ch * 7 * t);
  for (std::size_t i = 0; i < codec.strides.size(); ++i) {
    const std::size_t ri = codec.strides.size() - 1 - i;
    const std::int64_t s = codec.strides[ri];
    const std::int64_t k = s + 2 * ((s + 1) / 2);
    push(report, "dec.stage" + std::to_string(i), "conv_transpose1d",
         ch * (ch / 2) * k * t);
    ch /= 2;
    t *= s;
  }
  push(report, "dec.conv_out", "conv1d", ch * 1 * 7 * t);
  return report;
}

MacReport count_baseline_macs(const TimeBaselineConfig& cfg, std::int64_t input_samples) {
  check_arg(input_samples >= 1, "count_baseline_macs: input length must be positive");
  check_arg(cfg.frontend_stride >= 1 && cfg.frontend_kernel >= 1,
            "count_baseline_macs: bad front-end geometry");
  cfg.se.validate();
  MacReport report;
  report.input_samples = input_samples;
  const std::int64_t stride = cfg.frontend_stride;
  const std::int64_t frames = (input_samples + stride - 1) / stride;
  const std::int64_t e = cfg.se.embed_dim;

  push(report, "frontend", "conv1d",
       1 * e * static_cast<std::int64_t>(cfg.frontend_kernel) * frames);
  count_transformer_stack(report, cfg.se, frames, "");
  push(report, "head", "conv_transpose1d",
       e * 1 * static_cast<std::int64_t>(cfg.frontend_kernel) * frames);
  return report;
}

Tensor enhance_wave(const CodecModel& codec, const SEModel& se, const Tensor& wave,
                    EnhanceTiming* timing) {
  check_arg(wave.defined() && wave.rank() == 1 && wave.numel() > 0,
            "enhance: expects a non-empty 1-d waveform");
  NoGradGuard no_grad;
  WallTimer total;
  Tensor padded = pad_to_multiple(wave, codec.stride_product());

  WallTimer stage;
  Tensor y_e = codec.encode(padded);
  const double t_encode = stage.seconds();

  stage.reset();
  Tensor y_h = se.forward(y_e);
  const double t_se = stage.seconds();

  stage.reset();
  QuantizeResult q = codec.quantize(y_h);
  const double t_quant = stage.seconds();

  stage.reset();
  Tensor out = codec.decode(q.quantized);
  const double t_decode = stage.seconds();

  if (timing) {
    timing->encode_s = t_encode;
    timing->se_s = t_se;
    timing->quantize_s = t_quant;
    timing->decode_s = t_decode;
    timing->total_s = total.seconds();
  }
  if (out.numel() == wave.numel()) return out;
  return Tensor::from(wave.shape(),
                      std::vector<double>(out.data(), out.data() + wave.numel()));
}

double compute_rtf(double wall_seconds, double audio_seconds) {
  check_arg(audio_seconds > 0.0, "rtf: audio duration must be positive");
  return wall_seconds / audio_seconds;
}

RtfResult measure_rtf(const CodecModel& codec, const SEModel& se, const Tensor& wave,
                      int runs) {
  check_arg(runs >= 5, "measure_rtf: need at least 5 runs, got " + std::to_string(runs));
  RtfResult result;
  result.runs = runs;
  result.audio_seconds =
      static_cast<double>(wave.numel()) / codec.config().sample_rate;

  std::vector<EnhanceTiming> timings(static_cast<std::size_t>(runs));
  std::vector<double> walls(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    enhance_wave(codec, se, wave, &timings[static_cast<std::size_t>(r)]);
    walls[static_cast<std::size_t>(r)] = timings[static_cast<std::size_t>(r)].total_s;
  }
  std::vector<double> sorted = walls;
  std::sort(sorted.begin(), sorted.end());
  result.wall_median_s = median(walls);
  result.wall_min_s = sorted.front();
  result.wall_max_s = sorted.back();
  double sum = 0.0;
  for (double w : walls) sum += w;
  result.wall_mean_s = sum / static_cast<double>(runs);
  result.rtf = compute_rtf(result.wall_median_s, result.audio_seconds);

  // stage breakdown of the run closest to the median
  std::size_t pick = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < walls.size(); ++r) {
    const double d = std::abs(walls[r] - result.wall_median_s);
    if (d < best) {
      best = d;
      pick = r;
    }
  }
  const EnhanceTiming& t = timings[pick];
  result.stages = {{"encode", t.encode_s},
                   {"se", t.se_s},
                   {"quantize", t.quantize_s},
                   {"decode", t.decode_s}};
  result.stage_sum_s = t.encode_s + t.se_s + t.quantize_s + t.decode_s;
  // the median-run total is the reference the breakdown must account for
  result.wall_median_s = t.total_s;
  result.rtf = compute_rtf(result.wall_median_s, result.audio_seconds);
  return result;
}

std::vector<EfficiencyRow> compare_efficiency(const CodecModel& codec, const SEModel& se,
                                              const TimeBaselineConfig& baseline,
                                              const std::vector<double>& durations_s,
                                              int rtf_runs) {
  std::vector<EfficiencyRow> rows;
  const int sr = codec.config().sample_rate;
  for (double dur : durations_s) {
    check_arg(dur > 0.0, "compare_efficiency: duration must be positive");
    const std::int64_t samples = static_cast<std::int64_t>(std::llround(dur * sr));
    MacReport ours = count_se_macs(codec.config(), se.config(), samples);
    MacReport theirs = count_baseline_macs(baseline, samples);

    EfficiencyRow latent;
    latent.duration_s = dur;
    latent.model = "latent_se";
    latent.macs_total = ours.total;
    latent.has_rtf = true;
    Tensor probe = Tensor::zeros({samples});
    RtfResult rtf = measure_rtf(codec, se, probe, rtf_runs);
    latent.rtf_median = rtf.rtf;
    latent.rtf_mean = compute_rtf(rtf.wall_mean_s, rtf.audio_seconds);
    rows.push_back(latent);

    EfficiencyRow base;
    base.duration_s = dur;
    base.model = "time_baseline";
    base.macs_total = theirs.total;
    base.has_rtf = false;
    rows.push_back(base);
  }
  return rows;
}

std::string efficiency_csv(const std::vector<EfficiencyRow>& rows) {
  std::ostringstream os;
  os << "duration_s,model,macs_total,rtf_median,rtf_mean\n";
  char buf[64];
  for (const EfficiencyRow& r : rows) {
    os << r.duration_s << "," << r.model << "," << r.macs_total << ",";
    if (r.has_rtf) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f", r.rtf_median, r.rtf_mean);
      os << buf;
    } else {
      os << ",";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace lse
