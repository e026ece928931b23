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

#include <array>
#include <fstream>

#include "skws/frontend.hpp"
#include "test_util.hpp"

namespace skws {
namespace {

// Frozen from tests/oracles/mfcc_oracle.py (float64 numpy/scipy reference).
constexpr std::array<std::array<double, kMfccCoeffs>, 3> kGoldenRows{{
    {-2.179872, 6.995072, 3.146253, -3.588153, -5.305001, -6.039259, -8.207878, -10.980130,
     -6.846977, 1.362468},
    {-5.924296, -5.213778, -8.995524, 1.166014, 6.671900, -1.757772, -0.724830, 2.721871,
     -4.024278, -4.049440},
    {-6.380481, -7.200343, -2.666742, -0.475298, -4.849938, 8.627974, -0.359273, -4.722325,
     1.591618, -4.627698},
}};
constexpr std::array<int, 3> kGoldenRowIndex{0, 23, 46};

TEST(Frontend, MfccMatchesFloat64Oracle) {
  const auto signal = testing::OracleSignal();
  const MfccMap m = ComputeMfcc(PreEmphasizeAndCenter(signal));
  for (std::size_t r = 0; r < kGoldenRows.size(); ++r) {
    for (int c = 0; c < kMfccCoeffs; ++c) {
      const double want = kGoldenRows[r][static_cast<std::size_t>(c)];
      EXPECT_NEAR(m.values(kGoldenRowIndex[r], c), want, 1e-3 * std::max(1.0, std::abs(want)))
          << "row " << kGoldenRowIndex[r] << " coeff " << c;
    }
  }
}

TEST(Frontend, CenteringRemovesDc) {
  const auto signal = testing::OracleSignal();
  const auto centered = PreEmphasizeAndCenter(signal);
  double sum = 0.0;
  for (float v : centered) sum += v;
  EXPECT_NEAR(sum / centered.size(), 0.0, 1e-6);
  std::vector<float> shifted = signal;
  for (auto& v : shifted) v += 0.3f;
  const MfccMap a = ComputeMfcc(PreEmphasizeAndCenter(signal));
  const MfccMap b = ComputeMfcc(PreEmphasizeAndCenter(shifted));
  EXPECT_LT((a.values - b.values).cwiseAbs().maxCoeff(), 1e-2f);
}

TEST(Frontend, SilenceHitsLogFloor) {
  const std::vector<float> zeros(kWindowSamples, 0.0f);
  const MfccMap m = ComputeMfcc(zeros);
  const double floor_c0 = std::log(kLogFloor) * std::sqrt(static_cast<double>(kMelBands));
  for (int r = 0; r < kMfccFrames; ++r) {
    EXPECT_NEAR(m.values(r, 0), floor_c0, 1e-3);
    for (int c = 1; c < kMfccCoeffs; ++c) EXPECT_NEAR(m.values(r, c), 0.0, 1e-3);
  }
}

TEST(Frontend, ComputeMfccRejectsBadFrames) {
  const std::vector<float> short_frame(100, 0.0f);
  try {
    ComputeMfcc(short_frame);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimMismatch);
  }
  std::vector<float> nan_frame(kWindowSamples, 0.0f);
  nan_frame[5] = std::numeric_limits<float>::infinity();
  try {
    ComputeMfcc(nan_frame);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(Frontend, WindowCountFormula) {
  FrameWindow w;
  EXPECT_EQ(w.stride_samples(), 2000);
  EXPECT_EQ(WindowCount(15999, w), 0);
  EXPECT_EQ(WindowCount(16000, w), 1);
  EXPECT_EQ(WindowCount(17999, w), 1);
  EXPECT_EQ(WindowCount(18000, w), 2);
  EXPECT_EQ(WindowCount(32000, w), 9);
  FrameWindow w2{1.0, 0.25};
  EXPECT_EQ(WindowCount(32000, w2), 5);
}

TEST(Frontend, SlidingWindowsCoverTheClip) {
  const AudioClip clip = testing::ToneClip(1.5, 300.0, 0.2, "c");
  FrameWindow w;
  const auto windows = SlidingWindows(clip, w);
  ASSERT_EQ(windows.size(), 5u);
  for (std::size_t k = 0; k < windows.size(); ++k) {
    EXPECT_DOUBLE_EQ(windows[k].start_s, 0.125 * static_cast<double>(k));
    EXPECT_EQ(windows[k].samples.size(), static_cast<std::size_t>(kWindowSamples));
    EXPECT_EQ(windows[k].samples.data(), clip.samples.data() + 2000 * k);
  }
}

TEST(Frontend, ShortClipsAndBadStridesAreRejected) {
  const AudioClip clip = testing::ToneClip(0.5, 300.0, 0.2, "short");
  try {
    SlidingWindows(clip, FrameWindow{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kClipTooShort);
  }
  EXPECT_THROW(FrameWindow({1.0, 0.0}).Validate(), Error);
  EXPECT_THROW(FrameWindow({1.0, 1.0}).Validate(), Error);
  EXPECT_THROW(FrameWindow({0.5, 0.1}).Validate(), Error);
}

TEST(Frontend, MaxEnergyWindowFindsTheBurst) {
  AudioClip clip = testing::ToneClip(2.0, 300.0, 0.01, "c");
  // Loud section in [1.0, 1.9) s: the window starting at 0.875 s or later covers it best.
  for (std::size_t i = 16000; i < 30400; ++i) clip.samples[i] *= 50.0f;
  const std::size_t k = MaxEnergyWindow(clip, FrameWindow{});
  const auto windows = SlidingWindows(clip, FrameWindow{});
  ASSERT_LT(k, windows.size());
  double best = -1.0;
  std::size_t want = 0;
  for (std::size_t j = 0; j < windows.size(); ++j) {
    double e = 0.0;
    for (float v : windows[j].samples) e += static_cast<double>(v) * v;
    if (e > best) {
      best = e;
      want = j;
    }
  }
  EXPECT_EQ(k, want);
}

TEST(Frontend, FeaturizeCarriesMetadata) {
  AudioClip clip = testing::ToneClip(1.25, 300.0, 0.2, "meta");
  clip.true_label = Label::kPositive;
  clip.speaker_id = "spk";
  const ClipFeatures f = Featurize(clip, FrameWindow{});
  EXPECT_EQ(f.clip_id, "meta");
  EXPECT_EQ(f.true_label, Label::kPositive);
  EXPECT_EQ(f.speaker_id, "spk");
  EXPECT_DOUBLE_EQ(f.duration_s, 1.25);
  ASSERT_EQ(f.maps.size(), 3u);
  EXPECT_DOUBLE_EQ(f.maps[2].window_start_s, 0.25);
  EXPECT_EQ(f.maps[1].source_clip_id, "meta");
}

TEST(Frontend, MfccFileRoundTripIsHalfPrecision) {
  testing::TempDir dir("mfcc");
  Rng rng(3);
  MfccMap m;
  m.values = testing::RandomMap(rng) * 20.0f;
  WriteMfccMap(m, dir.path() / "m.mfcc");
  EXPECT_EQ(std::filesystem::file_size(dir.path() / "m.mfcc"), 12 + kMfccPayloadBytes);
  const MfccMap back = ReadMfccMap(dir.path() / "m.mfcc");
  EXPECT_EQ(back.values, RoundToHalf(m.values));
  EXPECT_EQ(RoundToHalf(back.values), back.values);
  std::ofstream(dir.path() / "bad.mfcc") << "SKMF";
  try {
    ReadMfccMap(dir.path() / "bad.mfcc");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadFormat);
  }
}

}  // namespace
}  // namespace skws
