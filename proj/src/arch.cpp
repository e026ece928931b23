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

#include "skws/arch.hpp"

#include <numeric>

#include "skws/common.hpp"

namespace skws {

std::string_view ToString(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kDepthwiseConv: return "depthwise_conv";
    case LayerKind::kPointwiseConv: return "pointwise_conv";
    case LayerKind::kBatchNormFold: return "batch_norm_fold";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kAvgPool: return "avg_pool";
    case LayerKind::kDense: return "dense";
    case LayerKind::kResidualAdd: return "residual_add";
  }
  return "relu";
}

LayerKind ParseLayerKind(std::string_view text) {
  for (LayerKind k : {LayerKind::kConv2d, LayerKind::kDepthwiseConv,
                      LayerKind::kPointwiseConv, LayerKind::kBatchNormFold, LayerKind::kRelu,
                      LayerKind::kAvgPool, LayerKind::kDense, LayerKind::kResidualAdd}) {
    if (ToString(k) == text) return k;
  }
  throw Error(ErrorCode::kParseError, "unknown layer kind '" + std::string(text) + "'");
}

bool LayerSpec::in_place() const {
  return kind == LayerKind::kRelu || kind == LayerKind::kBatchNormFold ||
         kind == LayerKind::kResidualAdd;
}

namespace {

int SameOut(int n, int stride) { return (n + stride - 1) / stride; }

}  // namespace

void ArchDescriptor::Finalize() {
  auto fail = [this](const std::string& why) {
    throw Error(ErrorCode::kInvalidArgument, "arch '" + name + "': " + why);
  };
  if (input_h <= 0 || input_w <= 0) fail("bad input shape");
  int h = input_h, w = input_w, c = 1;
  std::size_t offset = 0;
  mac_count = 0;
  per_layer_activation_elems.assign(1, static_cast<std::size_t>(h) * w);
  std::vector<std::size_t> tape_elems{static_cast<std::size_t>(h) * w};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerSpec& l = layers[i];
    l.in_h = h;
    l.in_w = w;
    l.in_c = c;
    l.weight_count = 0;
    l.bias_count = 0;
    switch (l.kind) {
      case LayerKind::kConv2d:
        if (l.kernel_h < 1 || l.kernel_w < 1 || l.stride_h < 1 || l.stride_w < 1 ||
            l.out_channels < 1) {
          fail("bad conv2d spec");
        }
        l.out_h = SameOut(h, l.stride_h);
        l.out_w = SameOut(w, l.stride_w);
        l.out_c = l.out_channels;
        l.weight_count = static_cast<std::size_t>(l.kernel_h) * l.kernel_w * c * l.out_c;
        l.bias_count = static_cast<std::size_t>(l.out_c);
        mac_count += static_cast<std::size_t>(l.out_h) * l.out_w * l.weight_count;
        break;
      case LayerKind::kDepthwiseConv:
        if (l.kernel_h < 1 || l.kernel_w < 1 || l.stride_h < 1 || l.stride_w < 1) {
          fail("bad depthwise spec");
        }
        l.out_h = SameOut(h, l.stride_h);
        l.out_w = SameOut(w, l.stride_w);
        l.out_c = c;
        l.weight_count = static_cast<std::size_t>(l.kernel_h) * l.kernel_w * c;
        l.bias_count = static_cast<std::size_t>(c);
        mac_count += static_cast<std::size_t>(l.out_h) * l.out_w * l.weight_count;
        break;
      case LayerKind::kPointwiseConv:
        if (l.out_channels < 1) fail("bad pointwise spec");
        l.kernel_h = l.kernel_w = l.stride_h = l.stride_w = 1;
        l.out_h = h;
        l.out_w = w;
        l.out_c = l.out_channels;
        l.weight_count = static_cast<std::size_t>(c) * l.out_c;
        l.bias_count = static_cast<std::size_t>(l.out_c);
        mac_count += static_cast<std::size_t>(h) * w * l.weight_count;
        break;
      case LayerKind::kAvgPool:
        l.out_h = l.out_w = 1;
        l.out_c = c;
        break;
      case LayerKind::kDense:
        if (l.out_channels < 1) fail("bad dense spec");
        l.out_h = l.out_w = 1;
        l.out_c = l.out_channels;
        l.weight_count = l.in_elems() * static_cast<std::size_t>(l.out_c);
        l.bias_count = static_cast<std::size_t>(l.out_c);
        mac_count += l.weight_count;
        break;
      case LayerKind::kResidualAdd:
        if (l.residual_from < 0 || static_cast<std::size_t>(l.residual_from) > i ||
            tape_elems[static_cast<std::size_t>(l.residual_from)] !=
                static_cast<std::size_t>(h) * w * c) {
          fail("residual source shape mismatch at layer " + std::to_string(i));
        }
        [[fallthrough]];
      case LayerKind::kRelu:
      case LayerKind::kBatchNormFold:
        l.out_h = h;
        l.out_w = w;
        l.out_c = c;
        break;
    }
    l.weight_offset = offset;
    offset += l.weight_count + l.bias_count;
    h = l.out_h;
    w = l.out_w;
    c = l.out_c;
    tape_elems.push_back(l.out_elems());
    per_layer_activation_elems.push_back(l.in_place() ? 0 : l.out_elems());
  }
  if (h != 1 || w != 1 || c != embedding_dim) {
    fail("network output is " + std::to_string(h) + "x" + std::to_string(w) + "x" +
         std::to_string(c) + ", expected 1x1x" + std::to_string(embedding_dim));
  }
  param_count = offset;
}

std::size_t ArchDescriptor::activation_elems_per_sample() const {
  return std::accumulate(per_layer_activation_elems.begin(),
                         per_layer_activation_elems.end(), std::size_t{0});
}

namespace {

LayerSpec Conv(int kh, int kw, int sh, int sw, int out) {
  LayerSpec l;
  l.kind = LayerKind::kConv2d;
  l.kernel_h = kh;
  l.kernel_w = kw;
  l.stride_h = sh;
  l.stride_w = sw;
  l.out_channels = out;
  return l;
}

LayerSpec Depthwise(int sh, int sw) {
  LayerSpec l;
  l.kind = LayerKind::kDepthwiseConv;
  l.kernel_h = l.kernel_w = 3;
  l.stride_h = sh;
  l.stride_w = sw;
  return l;
}

LayerSpec Simple(LayerKind kind, int out = 0) {
  LayerSpec l;
  l.kind = kind;
  l.out_channels = out;
  return l;
}

}  // namespace

ArchDescriptor BuildDsCnn(std::string name, int channels, int blocks, int stem_stride_h,
                          int stem_stride_w, int first_block_stride_h,
                          int first_block_stride_w, int embedding_dim) {
  ArchDescriptor a;
  a.name = std::move(name);
  a.embedding_dim = embedding_dim;
  a.layers.push_back(Conv(10, 4, stem_stride_h, stem_stride_w, channels));
  a.layers.push_back(Simple(LayerKind::kBatchNormFold));
  a.layers.push_back(Simple(LayerKind::kRelu));
  for (int b = 0; b < blocks; ++b) {
    a.layers.push_back(b == 0 ? Depthwise(first_block_stride_h, first_block_stride_w)
                              : Depthwise(1, 1));
    a.layers.push_back(Simple(LayerKind::kBatchNormFold));
    a.layers.push_back(Simple(LayerKind::kRelu));
    a.layers.push_back(Simple(LayerKind::kPointwiseConv, channels));
    a.layers.push_back(Simple(LayerKind::kBatchNormFold));
    a.layers.push_back(Simple(LayerKind::kRelu));
  }
  a.layers.push_back(Simple(LayerKind::kAvgPool));
  a.layers.push_back(Simple(LayerKind::kDense, embedding_dim));
  a.Finalize();
  return a;
}

ArchDescriptor DsCnnS() { return BuildDsCnn("dscnn_s", 57, 4, 2, 1, 2, 1, 64); }
ArchDescriptor DsCnnM() { return BuildDsCnn("dscnn_m", 127, 6, 2, 1, 2, 2, 172); }
ArchDescriptor DsCnnL() { return BuildDsCnn("dscnn_l", 215, 7, 2, 1, 2, 2, 256); }

ArchDescriptor ResNet15() {
  constexpr int kChannels = 66;
  ArchDescriptor a;
  a.name = "resnet15";
  a.embedding_dim = 64;
  a.layers.push_back(Conv(5, 5, 1, 1, kChannels));
  a.layers.push_back(Simple(LayerKind::kBatchNormFold));
  a.layers.push_back(Simple(LayerKind::kRelu));
  for (int b = 0; b < 6; ++b) {
    const int block_input = static_cast<int>(a.layers.size());
    a.layers.push_back(Conv(3, 3, 1, 1, kChannels));
    a.layers.push_back(Simple(LayerKind::kBatchNormFold));
    a.layers.push_back(Simple(LayerKind::kRelu));
    a.layers.push_back(Conv(3, 3, 1, 1, kChannels));
    a.layers.push_back(Simple(LayerKind::kBatchNormFold));
    LayerSpec add = Simple(LayerKind::kResidualAdd);
    add.residual_from = block_input;
    a.layers.push_back(add);
    a.layers.push_back(Simple(LayerKind::kRelu));
  }
  a.layers.push_back(Simple(LayerKind::kAvgPool));
  a.layers.push_back(Simple(LayerKind::kDense, 64));
  a.Finalize();
  return a;
}

ArchDescriptor TinyArch() { return BuildDsCnn("tiny", 16, 2, 2, 2, 1, 1, 32); }

ArchDescriptor DenseOnlyArch(int embedding_dim) {
  ArchDescriptor a;
  a.name = "dense_only";
  a.embedding_dim = embedding_dim;
  a.layers.push_back(Simple(LayerKind::kDense, embedding_dim));
  a.Finalize();
  return a;
}

std::vector<std::string> ArchNames() {
  return {"dscnn_s", "dscnn_m", "dscnn_l", "resnet15", "tiny"};
}

ArchDescriptor ArchByName(std::string_view name) {
  if (name == "dscnn_s") return DsCnnS();
  if (name == "dscnn_m") return DsCnnM();
  if (name == "dscnn_l") return DsCnnL();
  if (name == "resnet15") return ResNet15();
  if (name == "tiny") return TinyArch();
  throw Error(ErrorCode::kInvalidArgument, "unknown arch '" + std::string(name) + "'");
}

}  // namespace skws
