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

#ifndef SKWS_FRONTEND_HPP_
#define SKWS_FRONTEND_HPP_

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skws/corpus.hpp"

namespace skws {

inline constexpr int kMfccFrames = 47;
inline constexpr int kMfccCoeffs = 10;
inline constexpr int kWindowSamples = kSampleRate;  // T = 1 s
inline constexpr int kFftSize = 1024;
inline constexpr int kHopSamples = 320;
inline constexpr int kMelBands = 40;
inline constexpr double kMelLowHz = 20.0;
inline constexpr double kMelHighHz = 8000.0;
inline constexpr double kLogFloor = 1e-10;

using MfccMatrix = Eigen::Matrix<float, kMfccFrames, kMfccCoeffs, Eigen::RowMajor>;

struct MfccMap {
  MfccMatrix values = MfccMatrix::Zero();
  std::string source_clip_id;
  double window_start_s = 0.0;
};

/// Moving analysis window. The length is fixed at one second.
struct FrameWindow {
  double length_s = 1.0;
  double stride_s = 0.125;

  int stride_samples() const;
  void Validate() const;
};

struct WindowSlice {
  double start_s;
  std::span<const float> samples;
};

/// Windows start at 0, T_S, 2 T_S, ... while start + T <= duration.
std::vector<WindowSlice> SlidingWindows(const AudioClip& clip, const FrameWindow& win);
int WindowCount(std::size_t n_samples, const FrameWindow& win);

/// Mean subtraction in float working precision. No pre-emphasis filter.
std::vector<float> PreEmphasizeAndCenter(std::span<const float> frame);

/// 47x10 MFCC of one centered 16000-sample frame.
MfccMap ComputeMfcc(std::span<const float> frame);

/// Centers and featurizes every window of a clip.
std::vector<MfccMap> ClipMfccs(const AudioClip& clip, const FrameWindow& win);

/// Index of the window holding the most signal energy; used to pick the
/// keyword-bearing second from enrollment and pretraining clips.
std::size_t MaxEnergyWindow(const AudioClip& clip, const FrameWindow& win);

/// A clip reduced to its per-window MFCC maps plus ground-truth metadata.
struct ClipFeatures {
  std::string clip_id;
  std::optional<Label> true_label;
  std::optional<std::string> speaker_id;
  std::optional<int> class_index;
  double duration_s = 0.0;
  std::vector<MfccMap> maps;
  std::size_t keyword_window = 0;
};

ClipFeatures Featurize(const AudioClip& clip, const FrameWindow& win);
std::vector<ClipFeatures> FeaturizeAll(std::span<const AudioClip> clips, const FrameWindow& win);

// Map files: 12-byte header {"SKMF", u16 rows, u16 cols, u16 dtype=1 (f16),
// u16 reserved} followed by a row-major little-endian f16 payload (940 bytes).
inline constexpr std::size_t kMfccPayloadBytes = kMfccFrames * kMfccCoeffs * 2;

void WriteMfccMap(const MfccMap& map, const std::filesystem::path& path);
MfccMap ReadMfccMap(const std::filesystem::path& path);
/// Rounds every value to the nearest 16-bit float, as stored on disk.
MfccMatrix RoundToHalf(const MfccMatrix& m);

}  // namespace skws

#endif  // SKWS_FRONTEND_HPP_
