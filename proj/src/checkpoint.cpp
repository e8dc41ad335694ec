// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lse/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "lse/common.hpp"

namespace lse {

namespace {

constexpr char kMagic[8] = {'L', 'S', 'E', 'C', 'K', 'P', 'T', '1'};

void append_f32_le(std::vector<unsigned char>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  out.push_back(static_cast<unsigned char>(bits & 0xff));
  out.push_back(static_cast<unsigned char>((bits >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>((bits >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((bits >> 24) & 0xff));
}

float read_f32_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const nlohmann::json& config,
                     const std::vector<NamedParam>& params) {
  nlohmann::json manifest = nlohmann::json::array();
  std::vector<unsigned char> payload;
  std::int64_t offset = 0;
  for (const NamedParam& p : params) {
    manifest.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"offset", offset}});
    for (double v : p.tensor.values()) append_f32_le(payload, static_cast<float>(v));
    offset += p.tensor.numel() * 4;
  }
  nlohmann::json header = {{"format", "LSECKPT1"},
                           {"config", config},
                           {"params", std::move(manifest)}};
  const std::string header_str = header.dump();
  check_state(header_str.size() <= 0xffffffffULL, "checkpoint header too large");

  std::vector<unsigned char> bytes;
  bytes.insert(bytes.end(), kMagic, kMagic + 8);
  const std::uint32_t hlen = static_cast<std::uint32_t>(header_str.size());
  for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<unsigned char>((hlen >> (8 * b)) & 0xff));
  bytes.insert(bytes.end(), header_str.begin(), header_str.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    check_state(f.good(), "checkpoint: cannot open " + tmp);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    check_state(f.good(), "checkpoint: short write to " + tmp);
  }
  check_state(std::rename(tmp.c_str(), path.c_str()) == 0,
              "checkpoint: cannot rename " + tmp + " to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check_arg(in.good(), "checkpoint: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  check_arg(bytes.size() >= 12 && std::memcmp(bytes.data(), kMagic, 8) == 0,
            "checkpoint: " + path + " is not an LSECKPT1 container");
  std::uint32_t hlen = 0;
  for (int b = 0; b < 4; ++b) hlen |= static_cast<std::uint32_t>(bytes[8 + b]) << (8 * b);
  check_arg(bytes.size() >= 12 + static_cast<std::size_t>(hlen),
            "checkpoint: truncated header in " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + hlen);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("checkpoint: bad JSON header in " + path + ": " + e.what());
  }
  const unsigned char* payload = bytes.data() + 12 + hlen;
  const std::size_t payload_size = bytes.size() - 12 - hlen;

  Checkpoint ckpt;
  ckpt.config = header.at("config");
  for (const auto& entry : header.at("params")) {
    const std::string name = entry.at("name");
    const std::vector<std::int64_t> shape = entry.at("shape");
    const std::int64_t offset = entry.at("offset");
    const std::int64_t count = shape_numel(shape);
    check_arg(offset >= 0 && static_cast<std::size_t>(offset + count * 4) <= payload_size,
              "checkpoint: parameter " + name + " overruns the payload");
    std::vector<double> data(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i)
      data[static_cast<std::size_t>(i)] =
          static_cast<double>(read_f32_le(payload + offset + 4 * i));
    ckpt.params.push_back({name, Tensor::from(shape, std::move(data))});
  }
  return ckpt;
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const NamedParam& p : params)
    if (p.name == name) return &p.tensor;
  return nullptr;
}

void fill_params(const Checkpoint& ckpt, std::vector<NamedParam>& dst) {
  for (NamedParam& d : dst) {
    const Tensor* src = ckpt.find(d.name);
    check_arg(src != nullptr, "checkpoint: missing parameter " + d.name);
    check_arg(src->shape() == d.tensor.shape(),
              "checkpoint: shape mismatch for " + d.name + ", file has " +
                  shape_str(src->shape()) + " model expects " + shape_str(d.tensor.shape()));
    d.tensor.values() = src->values();
  }
}

}  // namespace lse
