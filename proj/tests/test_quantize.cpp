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

#include <gtest/gtest.h>

#include "skws/protoclass.hpp"
#include "skws/quantize.hpp"
#include "test_util.hpp"

namespace skws {
namespace {

double Cosine(const Embedding& a, const Embedding& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

TEST(Quantize, ParamsCoverRangeAndKeepZeroExact) {
  for (auto [lo, hi] : {std::pair{-1.0f, 3.0f}, {0.5f, 2.0f}, {-4.0f, -1.0f}, {-0.1f, 0.1f}}) {
    const QuantParams p = ChooseQuantParams(lo, hi);
    EXPECT_EQ(p.Dequantize(p.Quantize(0.0f)), 0.0f);
    const float rlo = std::min(lo, 0.0f), rhi = std::max(hi, 0.0f);
    EXPECT_NEAR(p.scale, (rhi - rlo) / 255.0f, 1e-7f);
    for (float v : {rlo, rhi, 0.5f * (rlo + rhi)}) {
      EXPECT_LE(std::abs(p.Dequantize(p.Quantize(v)) - v), 0.5f * p.scale + 1e-6f) << v;
    }
  }
}

TEST(Quantize, SaturatesOutsideRange) {
  const QuantParams p = ChooseQuantParams(-1.0f, 1.0f);
  EXPECT_EQ(p.Quantize(100.0f), 127);
  EXPECT_EQ(p.Quantize(-100.0f), -128);
}

TEST(Quantize, DegenerateRangeUsesScaleFloor) {
  bool degenerate = false;
  const QuantParams p = ChooseQuantParams(0.0f, 0.0f, &degenerate);
  EXPECT_TRUE(degenerate);
  EXPECT_EQ(p.scale, kMinQuantScale);
}

TEST(Quantize, ZeroChannelIsReported) {
  auto enc = EncoderState::Initialized(TinyArch(), 2);
  Eigen::VectorXf w = enc.weights();
  const LayerSpec& dense = enc.arch().layers.back();
  const std::size_t per_channel = dense.weight_count / static_cast<std::size_t>(dense.out_c);
  w.segment(static_cast<Eigen::Index>(dense.weight_offset), static_cast<Eigen::Index>(per_channel))
      .setZero();
  enc.set_weights(w);
  Rng rng(1);
  const auto calib = testing::RandomMaps(rng, 4);
  const QuantizedEncoder q = QuantizePtq(enc, calib);
  ASSERT_EQ(q.degenerate_channels.size(), 1u);
  EXPECT_NE(q.degenerate_channels[0].find("channel 0"), std::string::npos);
  EXPECT_TRUE(ForwardQuantized(q, calib[0]).allFinite());
}

TEST(Quantize, QuantizedEmbeddingsTrackFloat) {
  const auto enc = EncoderState::Initialized(TinyArch(), 7);
  Rng rng(2);
  const auto calib = testing::RandomMaps(rng, 4);
  const QuantizedEncoder q = QuantizePtq(enc, calib);
  double total = 0.0;
  constexpr int kN = 20;
  for (int i = 0; i < kN; ++i) {
    const MfccMatrix m = testing::RandomMap(rng);
    total += Cosine(Forward(enc, m), ForwardQuantized(q, m));
  }
  EXPECT_GT(total / kN, 0.98);
}

TEST(Quantize, QuantizedResidualNetworkRuns) {
  const auto enc = EncoderState::Initialized(ResNet15(), 1);
  Rng rng(3);
  const auto calib = testing::RandomMaps(rng, 2);
  const QuantizedEncoder q = QuantizePtq(enc, calib);
  const MfccMatrix m = testing::RandomMap(rng);
  EXPECT_GT(Cosine(Forward(enc, m), ForwardQuantized(q, m)), 0.95);
}

TEST(Quantize, NeedsCalibrationData) {
  const auto enc = EncoderState::Initialized(TinyArch(), 7);
  try {
    QuantizePtq(enc, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
}

}  // namespace
}  // namespace skws
