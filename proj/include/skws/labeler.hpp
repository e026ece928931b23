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

#ifndef SKWS_LABELER_HPP_
#define SKWS_LABELER_HPP_

#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "skws/calibrate.hpp"
#include "skws/resources.hpp"

namespace skws {

enum class LabelDecision { kPseudoPositive, kPseudoNegative, kAbstain };

std::string_view ToString(LabelDecision d);

struct PseudoSample {
  MfccMap map;  // stored at half precision
  Label pseudo_label = Label::kNegative;
  double score = 0.0;
  std::string clip_id;
  double window_start_s = 0.0;
  std::optional<Label> true_label;
};

struct LabelResult {
  LabelDecision decision = LabelDecision::kAbstain;
  ClipScore score;
  std::optional<PseudoSample> selected;
};

/// The dual-threshold rule on one clip score.
LabelDecision Decide(double score, double th_l, double th_h);

LabelResult LabelClip(const ClipFeatures& clip, const Embedder& embed, const LabelerConfig& cfg);
LabelResult LabelClip(const AudioClip& clip, const Embedder& embed, const LabelerConfig& cfg);

/// Bounded pseudo-sample memory with FIFO eviction per label.
class SampleStore {
 public:
  static constexpr std::size_t kDefaultMaxPos = 400;
  static constexpr std::size_t kDefaultMaxNeg = 2400;

  SampleStore(std::size_t max_pos = kDefaultMaxPos, std::size_t max_neg = kDefaultMaxNeg);

  /// Appends; returns true when an older sample was evicted.
  bool Add(PseudoSample s);

  const std::deque<PseudoSample>& positives() const { return positives_; }
  const std::deque<PseudoSample>& negatives() const { return negatives_; }
  std::size_t max_pos() const { return max_pos_; }
  std::size_t max_neg() const { return max_neg_; }
  std::size_t size() const { return positives_.size() + negatives_.size(); }

  /// Directory of map files plus index.json.
  void Save(const std::filesystem::path& dir) const;
  static SampleStore Load(const std::filesystem::path& dir);

 private:
  std::size_t max_pos_;
  std::size_t max_neg_;
  std::deque<PseudoSample> positives_;
  std::deque<PseudoSample> negatives_;
};

struct LabelerStats {
  int n_pos = 0;
  int n_neg = 0;
  int n_abstain = 0;
  int n_skipped = 0;
  int n_false_pos = 0;  // pseudo-positives whose truth is negative
  int n_false_neg = 0;
  int n_pos_with_truth = 0;
  int n_neg_with_truth = 0;

  std::optional<double> false_pos_rate() const;
  std::optional<double> false_neg_rate() const;
};

nlohmann::json ToJson(const LabelerStats& s);

enum class LabelMode {
  kSelf,    // thresholds decide
  kOracle,  // every clip takes its true label
};

using ClipWarning = std::function<void(const std::string& clip_id, const std::string& reason)>;

/// Labels clips in order and feeds selected samples into the store. Clips
/// that cannot be labeled are reported through `warn` and skipped.
LabelerStats RunStream(std::span<const ClipFeatures> clips, const Embedder& embed,
                       const LabelerConfig& cfg, SampleStore& store,
                       LabelMode mode = LabelMode::kSelf, const ClipWarning& warn = {});
LabelerStats RunStream(std::span<const AudioClip> clips, const Embedder& embed,
                       const LabelerConfig& cfg, SampleStore& store,
                       LabelMode mode = LabelMode::kSelf, const ClipWarning& warn = {});

/// Per-stride active time t_mfcc + t_nn + t_overhead against the stride.
DutyReport SimulateDutyCycle(const FrameWindow& window, const std::string& arch,
                             const PlatformConstants& platform);

}  // namespace skws

#endif  // SKWS_LABELER_HPP_
