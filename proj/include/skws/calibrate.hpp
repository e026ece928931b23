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

#ifndef SKWS_CALIBRATE_HPP_
#define SKWS_CALIBRATE_HPP_

#include <array>
#include <cmath>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"
#include "skws/frontend.hpp"
#include "skws/protoclass.hpp"

namespace skws {

inline constexpr int kMaxAlpha = 5;

struct LabelerConfig {
  Prototype prototype;
  int alpha = 1;
  double tau_l = 0.4;
  double tau_h = 0.9;
  double th_l = 0.0;
  double th_h = 0.0;
  double dist_p = 0.0;
  double dist_n = 0.0;
  FrameWindow window;
  /// Margin dist_n - dist_p for alpha = 1..5.
  std::array<double, kMaxAlpha> margins{};
  bool degenerate_margin = false;

  void Validate() const;
};

nlohmann::json ToJson(const LabelerConfig& cfg);
LabelerConfig LabelerConfigFromJson(const nlohmann::json& j);
void SaveLabelerConfig(const LabelerConfig& cfg, const std::filesystem::path& path);
LabelerConfig LoadLabelerConfig(const std::filesystem::path& path);

/// d(f(x(t)), c_p) for every window of a clip.
std::vector<double> RawDistances(std::span<const Embedding> window_embs, const Embedding& proto);
std::vector<Embedding> EmbedWindows(const ClipFeatures& clip, const Embedder& embed);

/// Trailing moving average of length alpha; the first k < alpha outputs
/// average the k + 1 values seen so far.
std::vector<double> FilteredDistances(std::span<const double> raw, int alpha);

struct ClipScore {
  double score = 0.0;        // min over the filtered sequence
  std::size_t argmin = 0;    // first window attaining it
};

ClipScore MinScore(std::span<const double> filtered);

std::vector<double> FilteredDistanceSequence(const AudioClip& clip, const Embedder& embed,
                                             const Prototype& proto, int alpha,
                                             const FrameWindow& window);
double ClipScoreOf(const AudioClip& clip, const Embedder& embed, const Prototype& proto,
                   int alpha, const FrameWindow& window);

/// Th(tau) = dist_p + tau (dist_n - dist_p), exact at tau = 0 and tau = 1.
inline double Threshold(double dist_p, double dist_n, double tau) {
  return std::lerp(dist_p, dist_n, tau);
}

/// 1-based alpha of the first maximum margin.
int SelectAlpha(std::span<const double> margins);

/// Prototype from the keyword window of each positive clip.
Prototype EnrollPrototype(std::span<const ClipFeatures> user_pos, const Embedder& embed,
                          std::string class_id = "keyword");

/// Selects alpha in {1..5} maximizing dist_n - dist_p and sets Th_L, Th_H.
/// A non-positive best margin is flagged as degenerate but still returned.
LabelerConfig Calibrate(const Embedder& embed, std::span<const ClipFeatures> user_pos,
                        std::span<const ClipFeatures> user_neg, double tau_l, double tau_h,
                        const FrameWindow& window);
LabelerConfig Calibrate(const Embedder& embed, std::span<const AudioClip> user_pos,
                        std::span<const AudioClip> user_neg, double tau_l, double tau_h,
                        const FrameWindow& window);

}  // namespace skws

#endif  // SKWS_CALIBRATE_HPP_
