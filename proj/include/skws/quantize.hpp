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

#ifndef SKWS_QUANTIZE_HPP_
#define SKWS_QUANTIZE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "skws/encoder.hpp"

namespace skws {

inline constexpr float kMinQuantScale = 1e-8f;

/// Asymmetric int8 affine parameters: real = scale * (q - zero_point).
struct QuantParams {
  float scale = 1.0f;
  std::int32_t zero_point = 0;

  std::int8_t Quantize(float v) const;
  float Dequantize(std::int8_t q) const { return scale * (static_cast<float>(q) - zero_point); }
};

/// Range [lo, hi] is widened to contain zero so zero is exactly representable.
/// Sets `degenerate` when hi == lo and the scale had to be floored.
QuantParams ChooseQuantParams(float lo, float hi, bool* degenerate = nullptr);

struct QuantizedLayer {
  std::vector<std::int8_t> weights;      // same layout as the float kernel
  std::vector<QuantParams> channel;      // one per output channel
  std::vector<float> bias;               // kept in float, added after dequantization
  QuantParams input;                     // per-tensor activation range
};

struct QuantizedEncoder {
  ArchDescriptor arch;
  /// One entry per layer; empty for parameter-free layers.
  std::vector<QuantizedLayer> layers;
  /// Layers with a channel whose range collapsed to a point.
  std::vector<std::string> degenerate_channels;
};

/// Post-training quantization: weights per output channel, activation ranges
/// from min/max over the calibration maps.
QuantizedEncoder QuantizePtq(const EncoderState& enc, std::span<const MfccMatrix> calib_maps);

/// Integer accumulation of centered int8 operands, per-channel dequantization.
Embedding ForwardQuantized(const QuantizedEncoder& qenc, const MfccMatrix& map);

}  // namespace skws

#endif  // SKWS_QUANTIZE_HPP_
