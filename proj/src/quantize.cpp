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

#include "skws/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace skws {

std::int8_t QuantParams::Quantize(float v) const {
  const long q = std::lround(v / scale) + zero_point;
  return static_cast<std::int8_t>(std::clamp<long>(q, -128, 127));
}

QuantParams ChooseQuantParams(float lo, float hi, bool* degenerate) {
  lo = std::min(lo, 0.0f);
  hi = std::max(hi, 0.0f);
  QuantParams p;
  p.scale = (hi - lo) / 255.0f;
  const bool floored = !(p.scale >= kMinQuantScale);
  if (floored) p.scale = kMinQuantScale;
  if (degenerate) *degenerate = floored;
  p.zero_point = static_cast<std::int32_t>(
      std::clamp<long>(std::lround(-128.0f - lo / p.scale), -128, 127));
  return p;
}

namespace {

using IntMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>;
using FloatTensor = Encoder<float>::Tensor;

bool HasParams(const LayerSpec& l) { return l.weight_count > 0; }

// Centered integers q - zero_point; real zero maps to exactly 0.
IntMatrix CenteredInput(const FloatTensor& x, const QuantParams& p) {
  return x.unaryExpr([&p](float v) {
    return static_cast<std::int32_t>(p.Quantize(v)) - p.zero_point;
  });
}

IntMatrix CenteredKernel(const LayerSpec& l, const QuantizedLayer& q, Eigen::Index rows) {
  const Eigen::Index per_channel = static_cast<Eigen::Index>(l.weight_count) / l.out_c;
  IntMatrix k(rows, static_cast<Eigen::Index>(l.weight_count) / rows);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(l.weight_count); ++i) {
    const auto c = static_cast<std::size_t>(i / per_channel);
    k.data()[i] = static_cast<std::int32_t>(q.weights[static_cast<std::size_t>(i)]) -
                  q.channel[c].zero_point;
  }
  return k;
}

IntMatrix IntIm2Col(const LayerSpec& l, const IntMatrix& x) {
  const int ph = std::max((l.out_h - 1) * l.stride_h + l.kernel_h - l.in_h, 0) / 2;
  const int pw = std::max((l.out_w - 1) * l.stride_w + l.kernel_w - l.in_w, 0) / 2;
  IntMatrix patches = IntMatrix::Zero(l.out_h * l.out_w, l.kernel_h * l.kernel_w * l.in_c);
  for (int oh = 0; oh < l.out_h; ++oh) {
    for (int ow = 0; ow < l.out_w; ++ow) {
      for (int i = 0; i < l.kernel_h; ++i) {
        const int ih = oh * l.stride_h + i - ph;
        if (ih < 0 || ih >= l.in_h) continue;
        for (int j = 0; j < l.kernel_w; ++j) {
          const int iw = ow * l.stride_w + j - pw;
          if (iw < 0 || iw >= l.in_w) continue;
          patches.row(oh * l.out_w + ow).segment((i * l.kernel_w + j) * l.in_c, l.in_c) =
              x.row(ih * l.in_w + iw);
        }
      }
    }
  }
  return patches;
}

FloatTensor Dequantize(const IntMatrix& acc, const QuantizedLayer& q) {
  FloatTensor y(acc.rows(), acc.cols());
  for (Eigen::Index c = 0; c < acc.cols(); ++c) {
    const float s = q.input.scale * q.channel[static_cast<std::size_t>(c)].scale;
    y.col(c) = acc.col(c).cast<float>() * s;
    y.col(c).array() += q.bias[static_cast<std::size_t>(c)];
  }
  return y;
}

FloatTensor QuantizedLayerForward(const LayerSpec& l, const QuantizedLayer& q,
                                  const FloatTensor& x) {
  const IntMatrix xc = CenteredInput(x, q.input);
  switch (l.kind) {
    case LayerKind::kConv2d:
      return Dequantize(IntIm2Col(l, xc) * CenteredKernel(l, q, l.kernel_h * l.kernel_w * l.in_c), q);
    case LayerKind::kPointwiseConv:
      return Dequantize(xc * CenteredKernel(l, q, l.in_c), q);
    case LayerKind::kDense: {
      const Eigen::Map<const Eigen::Matrix<std::int32_t, 1, Eigen::Dynamic>> flat(xc.data(),
                                                                                   xc.size());
      return Dequantize(flat * CenteredKernel(l, q, static_cast<Eigen::Index>(l.in_elems())), q);
    }
    case LayerKind::kDepthwiseConv: {
      const int ph = std::max((l.out_h - 1) * l.stride_h + l.kernel_h - l.in_h, 0) / 2;
      const int pw = std::max((l.out_w - 1) * l.stride_w + l.kernel_w - l.in_w, 0) / 2;
      const int taps = l.kernel_h * l.kernel_w;
      IntMatrix acc = IntMatrix::Zero(l.out_h * l.out_w, l.out_c);
      for (int c = 0; c < l.out_c; ++c) {
        const std::int32_t zw = q.channel[static_cast<std::size_t>(c)].zero_point;
        for (int oh = 0; oh < l.out_h; ++oh) {
          for (int ow = 0; ow < l.out_w; ++ow) {
            std::int32_t a = 0;
            for (int i = 0; i < l.kernel_h; ++i) {
              const int ih = oh * l.stride_h + i - ph;
              if (ih < 0 || ih >= l.in_h) continue;
              for (int j = 0; j < l.kernel_w; ++j) {
                const int iw = ow * l.stride_w + j - pw;
                if (iw < 0 || iw >= l.in_w) continue;
                const std::int32_t wq =
                    q.weights[static_cast<std::size_t>(c * taps + i * l.kernel_w + j)] - zw;
                a += wq * xc(ih * l.in_w + iw, c);
              }
            }
            acc(oh * l.out_w + ow, c) = a;
          }
        }
      }
      return Dequantize(acc, q);
    }
    default:
      break;
  }
  return x;
}

}  // namespace

QuantizedEncoder QuantizePtq(const EncoderState& enc, std::span<const MfccMatrix> calib_maps) {
  if (calib_maps.empty()) {
    throw Error(ErrorCode::kEmptyInput, "quantization needs at least one calibration map");
  }
  const ArchDescriptor& a = enc.arch();
  QuantizedEncoder q;
  q.arch = a;
  q.layers.resize(a.layers.size());

  // Observed input range of every parameterized layer.
  std::vector<float> lo(a.layers.size(), std::numeric_limits<float>::infinity());
  std::vector<float> hi(a.layers.size(), -std::numeric_limits<float>::infinity());
  const TrainingPass<float> pass = ForwardTraining(enc, calib_maps);
  for (const auto& sample : pass.tape.tensors) {
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      if (!HasParams(a.layers[i])) continue;
      lo[i] = std::min(lo[i], sample[i].minCoeff());
      hi[i] = std::max(hi[i], sample[i].maxCoeff());
    }
  }

  const float* w = enc.weights().data();
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const LayerSpec& l = a.layers[i];
    if (!HasParams(l)) continue;
    QuantizedLayer& ql = q.layers[i];
    ql.input = ChooseQuantParams(lo[i], hi[i]);
    const std::size_t per_channel = l.weight_count / static_cast<std::size_t>(l.out_c);
    ql.weights.resize(l.weight_count);
    for (int c = 0; c < l.out_c; ++c) {
      const float* wc = w + l.weight_offset + static_cast<std::size_t>(c) * per_channel;
      const auto [mn, mx] = std::minmax_element(wc, wc + per_channel);
      bool degenerate = false;
      const QuantParams p = ChooseQuantParams(*mn, *mx, &degenerate);
      if (degenerate) {
        q.degenerate_channels.push_back("layer " + std::to_string(i) + " (" +
                                        std::string(ToString(l.kind)) + ") channel " +
                                        std::to_string(c));
      }
      ql.channel.push_back(p);
      for (std::size_t k = 0; k < per_channel; ++k) {
        ql.weights[static_cast<std::size_t>(c) * per_channel + k] = p.Quantize(wc[k]);
      }
    }
    ql.bias.assign(w + l.weight_offset + l.weight_count,
                   w + l.weight_offset + l.weight_count + l.bias_count);
  }
  return q;
}

Embedding ForwardQuantized(const QuantizedEncoder& qenc, const MfccMatrix& map) {
  const ArchDescriptor& a = qenc.arch;
  if (a.input_h != kMfccFrames || a.input_w != kMfccCoeffs) {
    throw Error(ErrorCode::kDimMismatch, "quantized arch expects a different input shape");
  }
  std::vector<FloatTensor> tape;
  tape.reserve(a.layers.size() + 1);
  tape.push_back(Eigen::Map<const Eigen::VectorXf>(map.data(), map.size()));
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const LayerSpec& l = a.layers[i];
    if (HasParams(l)) {
      tape.push_back(QuantizedLayerForward(l, qenc.layers[i], tape.back()));
    } else {
      const FloatTensor* residual = l.kind == LayerKind::kResidualAdd
                                        ? &tape[static_cast<std::size_t>(l.residual_from)]
                                        : nullptr;
      tape.push_back(layers::LayerForward<float>(l, nullptr, tape.back(), residual));
    }
  }
  return tape.back().row(0).transpose();
}

}  // namespace skws
