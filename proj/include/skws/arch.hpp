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

#ifndef SKWS_ARCH_HPP_
#define SKWS_ARCH_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace skws {

enum class LayerKind {
  kConv2d,
  kDepthwiseConv,
  kPointwiseConv,
  kBatchNormFold,  // folded into the preceding conv; kept as a marker
  kRelu,
  kAvgPool,  // global average over positions
  kDense,    // flattens its input
  kResidualAdd,
};

std::string_view ToString(LayerKind kind);
LayerKind ParseLayerKind(std::string_view text);

/// Activation tensors are (H*W) x C with "same" padding for every conv.
struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride_h = 1;
  int stride_w = 1;
  int out_channels = 0;  // conv/pointwise/dense; ignored otherwise
  /// Tape index whose tensor is added by kResidualAdd (0 = network input,
  /// i + 1 = output of layer i).
  int residual_from = -1;

  // Filled in by ArchDescriptor::Finalize().
  int in_h = 0, in_w = 0, in_c = 0;
  int out_h = 0, out_w = 0, out_c = 0;
  std::size_t weight_offset = 0;
  std::size_t weight_count = 0;  // kernel elements, bias follows
  std::size_t bias_count = 0;

  bool in_place() const;
  std::size_t in_elems() const { return static_cast<std::size_t>(in_h) * in_w * in_c; }
  std::size_t out_elems() const { return static_cast<std::size_t>(out_h) * out_w * out_c; }
  bool operator==(const LayerSpec&) const = default;
};

struct ArchDescriptor {
  std::string name;
  int input_h = 47;
  int input_w = 10;
  std::vector<LayerSpec> layers;
  int embedding_dim = 0;

  // Derived by Finalize().
  std::size_t param_count = 0;
  std::size_t mac_count = 0;
  /// Stored activation elements per sample: [input map, output of layer 0, ...].
  /// In-place layers (relu, batch-norm-fold, residual add) contribute zero.
  std::vector<std::size_t> per_layer_activation_elems;

  /// Propagates shapes, assigns weight offsets and computes derived counts.
  /// Throws on inconsistent layer lists.
  void Finalize();
  std::size_t activation_elems_per_sample() const;
  bool operator==(const ArchDescriptor&) const = default;
};

// Named variants. The DS-CNN family is stem conv -> N x (depthwise 3x3 +
// pointwise) -> global average pool -> dense, sized to the reference
// parameter budgets; ResNet15 is a residual stack of 3x3 convs.
ArchDescriptor DsCnnS();
ArchDescriptor DsCnnM();
ArchDescriptor DsCnnL();
ArchDescriptor ResNet15();
/// Desk-scale variant used for pretraining and self-learning experiments.
ArchDescriptor TinyArch();
/// Single dense layer from the flattened map.
ArchDescriptor DenseOnlyArch(int embedding_dim);

ArchDescriptor ArchByName(std::string_view name);
std::vector<std::string> ArchNames();

/// Generic DS-CNN builder.
ArchDescriptor BuildDsCnn(std::string name, int channels, int blocks, int stem_stride_h,
                          int stem_stride_w, int first_block_stride_h,
                          int first_block_stride_w, int embedding_dim);

}  // namespace skws

#endif  // SKWS_ARCH_HPP_
