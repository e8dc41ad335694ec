// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lse/checkpoint.hpp"
#include "lse/codec.hpp"
#include "lse/data.hpp"
#include "lse/dsp.hpp"
#include "lse/losses.hpp"
#include "lse/perf.hpp"
#include "lse/run_config.hpp"
#include "lse/se_model.hpp"
#include "lse/trainer.hpp"
#include "lse/wav.hpp"

namespace py = pybind11;

namespace {

using namespace lse;

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  std::vector<std::int64_t> shape(a.ndim());
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[static_cast<std::size_t>(i)] = a.shape(i);
  std::vector<double> data(a.data(), a.data() + a.size());
  return Tensor::from(std::move(shape), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data(), t.data() + t.numel(), out.mutable_data());
  return out;
}

RunConfig config_from_json_str(const std::string& json_text) {
  return RunConfig::from_json(nlohmann::json::parse(json_text));
}

struct PyPipeline {
  explicit PyPipeline(const std::string& checkpoint_path) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    cfg = RunConfig::from_json(ckpt.config);
    codec = std::make_unique<CodecModel>(cfg.codec, cfg.codec_init_seed());
    auto cparams = codec->parameters();
    fill_params(ckpt, cparams);
    bool any_se = false;
    for (const NamedParam& p : ckpt.params)
      if (p.name.rfind("se.", 0) == 0) any_se = true;
    if (any_se) {
      se = std::make_unique<SEModel>(cfg.se, cfg.codec.latent_dim, cfg.se_init_seed());
      auto sparams = se->parameters();
      fill_params(ckpt, sparams);
    }
  }

  py::array_t<double> enhance(const py::array_t<double>& wave) {
    if (!se) throw std::invalid_argument("checkpoint holds no SE parameters");
    return array_from_tensor(enhance_wave(*codec, *se, tensor_from_array(wave)));
  }

  py::array_t<double> encode(const py::array_t<double>& wave) {
    NoGradGuard no_grad;
    return array_from_tensor(codec->encode(tensor_from_array(wave)));
  }

  py::tuple quantize(const py::array_t<double>& latent) {
    NoGradGuard no_grad;
    QuantizeResult q = codec->quantize(tensor_from_array(latent));
    return py::make_tuple(array_from_tensor(q.quantized), q.codes, q.commit_loss.item());
  }

  py::array_t<double> decode(const py::array_t<double>& latent) {
    NoGradGuard no_grad;
    return array_from_tensor(codec->decode(tensor_from_array(latent)));
  }

  py::array_t<double> se_forward(const py::array_t<double>& latent) {
    if (!se) throw std::invalid_argument("checkpoint holds no SE parameters");
    NoGradGuard no_grad;
    return array_from_tensor(se->forward(tensor_from_array(latent)));
  }

  RunConfig cfg;
  std::unique_ptr<CodecModel> codec;
  std::unique_ptr<SEModel> se;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "latent-domain speech enhancement core";

  m.def("mel_spectrogram",
        [](const py::array_t<double>& wave, int sample_rate, int n_fft, int hop, int n_mels,
           double f_min, double f_max, double power) {
          MelConfig cfg{sample_rate, n_fft, hop, n_mels, f_min, f_max, power};
          return array_from_tensor(mel_spectrogram(tensor_from_array(wave), cfg));
        },
        py::arg("wave"), py::arg("sample_rate") = 16000, py::arg("n_fft") = 1024,
        py::arg("hop") = 256, py::arg("n_mels") = 80, py::arg("f_min") = 0.0,
        py::arg("f_max") = 8000.0, py::arg("power") = 2.0);

  m.def("si_snr_db",
        [](const py::array_t<double>& reference, const py::array_t<double>& estimate) {
          return si_snr_db(tensor_from_array(reference), tensor_from_array(estimate));
        },
        py::arg("reference"), py::arg("estimate"));

  m.def("snr_gain",
        [](const py::array_t<double>& clean, const py::array_t<double>& noise, double snr_db) {
          return snr_gain(tensor_from_array(clean), tensor_from_array(noise), snr_db);
        },
        py::arg("clean"), py::arg("noise"), py::arg("target_snr_db"));

  m.def("emb_loss",
        [](const py::array_t<double>& x_e, const py::array_t<double>& y_h) {
          return emb_loss(tensor_from_array(x_e), tensor_from_array(y_h)).item();
        });
  m.def("time_loss",
        [](const py::array_t<double>& a, const py::array_t<double>& b) {
          return time_loss(tensor_from_array(a), tensor_from_array(b)).item();
        });
  m.def("overall_loss",
        [](double l_emb, double l_time, double l_freq, double alpha, double beta, double gamma) {
          LossWeights w{alpha, beta, gamma};
          return overall_loss_value(l_emb, l_time, l_freq, w);
        },
        py::arg("l_emb"), py::arg("l_time"), py::arg("l_freq"), py::arg("alpha") = 1.0,
        py::arg("beta") = 500.0, py::arg("gamma") = 1.0 / 11.0);

  m.def("gen_clean",
        [](std::uint64_t seed, double duration, const std::string& kind, double f0,
           int sample_rate) {
          UtteranceKind k = kind == "tone_stack" ? UtteranceKind::kToneStack
                                                 : UtteranceKind::kPseudoSpeech;
          return array_from_tensor(gen_clean({seed, duration, k, f0}, sample_rate));
        },
        py::arg("seed"), py::arg("duration") = 1.0, py::arg("kind") = "pseudo_speech",
        py::arg("f0") = 0.0, py::arg("sample_rate") = 16000);

  m.def("gen_noise",
        [](std::uint64_t seed, double duration, const std::string& kind, int sample_rate) {
          UtteranceKind k = kind == "pink"           ? UtteranceKind::kPink
                            : kind == "band_limited" ? UtteranceKind::kBandLimited
                                                     : UtteranceKind::kWhite;
          return array_from_tensor(gen_noise({seed, duration, k, 0.0}, sample_rate));
        },
        py::arg("seed"), py::arg("duration") = 1.0, py::arg("kind") = "white",
        py::arg("sample_rate") = 16000);

  m.def("wav_read", [](const std::string& path) {
    WavData w = wav_read(path);
    return py::make_tuple(array_from_tensor(w.wave), w.sample_rate);
  });
  m.def("wav_write", [](const std::string& path, const py::array_t<double>& wave, int rate) {
    wav_write(path, tensor_from_array(wave), rate);
  });

  m.def("count_se_macs",
        [](const std::string& config_json, std::int64_t input_samples) {
          RunConfig cfg = config_from_json_str(config_json);
          MacReport r = count_se_macs(cfg.codec, cfg.se, input_samples);
          py::list entries;
          for (const MacEntry& e : r.entries)
            entries.append(py::make_tuple(e.layer, e.kind, e.macs));
          return py::make_tuple(r.total, entries);
        },
        py::arg("config_json"), py::arg("input_samples"));

  m.def("count_baseline_macs",
        [](const std::string& config_json, std::int64_t input_samples) {
          RunConfig cfg = config_from_json_str(config_json);
          TimeBaselineConfig base{cfg.se, 8, 16};
          return count_baseline_macs(base, input_samples).total;
        },
        py::arg("config_json"), py::arg("input_samples"));

  m.def("default_config_json", [] { return RunConfig{}.to_json().dump(); });

  py::class_<PyPipeline>(m, "Pipeline")
      .def(py::init<const std::string&>(), py::arg("checkpoint_path"))
      .def("enhance", &PyPipeline::enhance, py::arg("wave"))
      .def("encode", &PyPipeline::encode, py::arg("wave"))
      .def("quantize", &PyPipeline::quantize, py::arg("latent"))
      .def("decode", &PyPipeline::decode, py::arg("latent"))
      .def("se_forward", &PyPipeline::se_forward, py::arg("latent"))
      .def_property_readonly("stride_product",
                             [](const PyPipeline& p) { return p.codec->stride_product(); })
      .def_property_readonly("latent_dim",
                             [](const PyPipeline& p) { return p.cfg.codec.latent_dim; })
      .def_property_readonly("has_se", [](const PyPipeline& p) { return p.se != nullptr; });
}
