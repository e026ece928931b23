// Copyright 2026 The skws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "skws/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>

namespace skws {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

json ArchToJson(const ArchDescriptor& arch) {
  json layers = json::array();
  for (const auto& l : arch.layers) {
    json jl = {{"kind", std::string(ToString(l.kind))}};
    if (l.kind == LayerKind::kConv2d || l.kind == LayerKind::kDepthwiseConv) {
      jl["kernel"] = {l.kernel_h, l.kernel_w};
      jl["stride"] = {l.stride_h, l.stride_w};
    }
    if (l.kind == LayerKind::kConv2d || l.kind == LayerKind::kPointwiseConv ||
        l.kind == LayerKind::kDense) {
      jl["out_channels"] = l.out_channels;
    }
    if (l.kind == LayerKind::kResidualAdd) jl["residual_from"] = l.residual_from;
    layers.push_back(std::move(jl));
  }
  return {{"name", arch.name},
          {"input", {arch.input_h, arch.input_w}},
          {"embedding_dim", arch.embedding_dim},
          {"param_count", arch.param_count},
          {"layers", std::move(layers)}};
}

ArchDescriptor ArchFromJson(const json& j) {
  ArchDescriptor a;
  a.name = j.at("name").get<std::string>();
  a.input_h = j.at("input").at(0).get<int>();
  a.input_w = j.at("input").at(1).get<int>();
  a.embedding_dim = j.at("embedding_dim").get<int>();
  for (const auto& jl : j.at("layers")) {
    LayerSpec l;
    l.kind = ParseLayerKind(jl.at("kind").get<std::string>());
    if (jl.contains("kernel")) {
      l.kernel_h = jl["kernel"].at(0).get<int>();
      l.kernel_w = jl["kernel"].at(1).get<int>();
      l.stride_h = jl.at("stride").at(0).get<int>();
      l.stride_w = jl.at("stride").at(1).get<int>();
    }
    l.out_channels = jl.value("out_channels", 0);
    l.residual_from = jl.value("residual_from", -1);
    a.layers.push_back(l);
  }
  a.Finalize();
  if (j.contains("param_count") && j["param_count"].get<std::size_t>() != a.param_count) {
    throw Error(ErrorCode::kCorruptCheckpoint, "descriptor param_count disagrees with layers");
  }
  return a;
}

namespace {

template <typename T>
void Put(std::string& s, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  s.append(buf, sizeof(T));
}

template <typename T>
T Get(const std::string& s, std::size_t& at) {
  if (at + sizeof(T) > s.size()) throw Error(ErrorCode::kCorruptCheckpoint, "corrupt checkpoint");
  T v;
  std::memcpy(&v, s.data() + at, sizeof(T));
  at += sizeof(T);
  return v;
}

std::uint32_t Crc32(const char* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

constexpr char kMagic[] = "SKWSCKPT";

}  // namespace

void SaveCheckpoint(const EncoderState& enc, const std::filesystem::path& path) {
  json meta = ArchToJson(enc.arch());
  meta["precision"] = std::string(ToString(enc.precision()));
  meta["seed"] = enc.seed();
  const std::string desc = meta.dump();
  std::string s(kMagic, 8);
  Put<std::uint32_t>(s, kCheckpointVersion);
  Put<std::uint32_t>(s, static_cast<std::uint32_t>(desc.size()));
  s += desc;
  Put<std::uint64_t>(s, static_cast<std::uint64_t>(enc.weights().size()));
  s.append(reinterpret_cast<const char*>(enc.weights().data()),
           static_cast<std::size_t>(enc.weights().size()) * sizeof(float));
  Put<std::uint32_t>(s, Crc32(s.data(), s.size()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

EncoderState LoadCheckpoint(const std::filesystem::path& path,
                            std::optional<std::string> expected_arch) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "missing file: " + path.string());
  const std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (s.size() < 8 + 4 + 4 + 8 + 4 || s.compare(0, 8, kMagic, 8) != 0) {
    throw Error(ErrorCode::kCorruptCheckpoint, "corrupt checkpoint: " + path.string());
  }
  std::size_t at = 8;
  const auto version = Get<std::uint32_t>(s, at);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "checkpoint version " + std::to_string(version) + ", expected " +
                    std::to_string(kCheckpointVersion));
  }
  const auto desc_len = Get<std::uint32_t>(s, at);
  if (at + desc_len > s.size()) throw Error(ErrorCode::kCorruptCheckpoint, "corrupt checkpoint");
  const std::string desc = s.substr(at, desc_len);
  at += desc_len;
  const auto n = Get<std::uint64_t>(s, at);
  if (n > (s.size() - at) / sizeof(float) || at + n * sizeof(float) + 4 != s.size()) {
    throw Error(ErrorCode::kCorruptCheckpoint, "corrupt checkpoint: truncated payload");
  }
  const std::size_t payload_at = at;
  at += n * sizeof(float);
  const auto stored_crc = Get<std::uint32_t>(s, at);
  if (stored_crc != Crc32(s.data(), payload_at + n * sizeof(float))) {
    throw Error(ErrorCode::kCorruptCheckpoint, "corrupt checkpoint: CRC mismatch");
  }
  json meta;
  ArchDescriptor arch;
  try {
    meta = json::parse(desc);
    arch = ArchFromJson(meta);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, std::string("corrupt checkpoint: ") + e.what());
  }
  if (expected_arch && arch.name != *expected_arch) {
    throw Error(ErrorCode::kArchMismatch, "arch mismatch: checkpoint holds '" + arch.name +
                                              "', expected '" + *expected_arch + "'");
  }
  if (n != arch.param_count) {
    throw Error(ErrorCode::kCorruptCheckpoint, "corrupt checkpoint: weight count mismatch");
  }
  EncoderState enc(arch, ParsePrecision(meta.value("precision", std::string("f32"))));
  Eigen::VectorXf w(static_cast<Eigen::Index>(n));
  std::memcpy(w.data(), s.data() + payload_at, n * sizeof(float));
  enc.set_weights(std::move(w));
  enc.set_seed(meta.value("seed", std::uint64_t{0}));
  return enc;
}

}  // namespace skws
