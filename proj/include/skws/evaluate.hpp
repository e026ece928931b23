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

#ifndef SKWS_EVALUATE_HPP_
#define SKWS_EVALUATE_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "skws/calibrate.hpp"
#include "skws/corpus.hpp"
#include "skws/labeler.hpp"
#include "skws/trainer.hpp"

namespace skws {

enum class Arm { kPretrained, kSelf, kOracle, kAugment };

std::string_view ToString(Arm arm);
Arm ParseArm(std::string_view text);

// ---------------------------------------------------------------------------
// FAR operating point

struct GammaSelection {
  double gamma = 0.0;
  int budget = 0;  // floor(far_per_hour * hours)
  int alarms = 0;  // negatives scoring strictly below gamma
};

/// Largest gamma with at most floor(far_per_hour * hours) negative clip scores
/// strictly below it. Candidates are the observed scores and +inf.
GammaSelection SelectGammaAtFar(std::span<const double> neg_scores, double far_per_hour,
                                double neg_hours);

/// Fraction of positive clip scores strictly below gamma.
double SpeakerAccuracy(std::span<const double> pos_scores, double gamma);

std::vector<double> ClipScores(std::span<const ClipFeatures> clips, const Embedder& embed,
                               const Prototype& proto, int alpha);

// ---------------------------------------------------------------------------
// Per-speaker data

struct SpeakerTask {
  std::string speaker_id;
  std::vector<AudioClip> enroll_pos;  // K keyword recordings
  std::vector<AudioClip> enroll_neg;  // K non-keyword recordings
  std::vector<AudioClip> adaptation;  // unlabeled stream, in order
  std::vector<AudioClip> test_pos;
  std::vector<AudioClip> test_neg;
};

struct TaskFeatures {
  std::string speaker_id;
  FrameWindow window;
  std::vector<ClipFeatures> enroll_pos, enroll_neg, adaptation, test_pos, test_neg;
  /// Enrollment audio, kept for the augmentation baseline.
  std::vector<AudioClip> enroll_pos_audio, enroll_neg_audio;
  double neg_hours = 0.0;
};

TaskFeatures FeaturizeTask(const SpeakerTask& task, const FrameWindow& window);

struct TaskSplit {
  int k_enroll = 3;
  /// Share of each speaker's non-enrollment keyword clips placed in the
  /// adaptation stream; the rest is tested.
  double adapt_pos_fraction = 0.5;
  /// Share of the negatives left after user negatives used for adaptation.
  double adapt_neg_fraction = 0.5;
  std::uint64_t rng_seed = 0;
};

/// Per-speaker enrollment/adaptation/test partitions of a synthetic corpus.
/// Negatives are shared across speakers except for the user negatives.
std::vector<SpeakerTask> TasksFromSynthetic(const SyntheticCorpus& corpus, const TaskSplit& split);

/// Groups manifest clips by speaker. Entries without a speaker in the
/// adaptation and test splits are shared by every speaker.
std::vector<SpeakerTask> TasksFromManifest(const Manifest& manifest,
                                           const std::filesystem::path& base_dir);

// ---------------------------------------------------------------------------
// Experiment arms

struct ArmConfig {
  double tau_l = 0.4;
  double tau_h = 0.9;
  TrainConfig train;
  double far_per_hour = 0.5;
  std::size_t store_max_pos = SampleStore::kDefaultMaxPos;
  std::size_t store_max_neg = SampleStore::kDefaultMaxNeg;
  int augment_per_clip = 30;
  double augment_snr_lo_db = 0.0;
  double augment_snr_hi_db = 5.0;
  /// Forces the filter length at evaluation instead of the calibrated one.
  std::optional<int> alpha_override;
};

nlohmann::json ToJson(const ArmConfig& c);

struct EvalResult {
  std::string speaker_id;
  Arm arm = Arm::kPretrained;
  double gamma_at_far = 0.0;
  double accuracy = 0.0;
  int n_pos_tested = 0;
  double far_target_per_hour = 0.0;
  double neg_hours = 0.0;
  int false_alarms = 0;
  int alpha = 1;
  bool trained = false;
  std::optional<LabelerStats> labeling;
  double margin_before = 0.0;
  double margin_after = 0.0;
};

nlohmann::json ToJson(const EvalResult& r);

/// Fills the store for an arm: thresholds (self), ground truth (oracle) or
/// noise-augmented user recordings (augment). Empty for pretrained.
SampleStore BuildStore(Arm arm, const Embedder& embed, const TaskFeatures& task,
                       const LabelerConfig& labeler, const ArmConfig& cfg,
                       std::uint64_t seed, LabelerStats* stats);

/// True if the store holds enough pseudo-positives to train.
bool CanTrain(const SampleStore& store, const TrainConfig& cfg);

/// Scores the test set with an already re-initialized labeler config.
EvalResult EvaluateTask(const Embedder& embed, const TaskFeatures& task,
                        const LabelerConfig& cfg, const ArmConfig& arm_cfg);

/// calibrate -> store -> finetune (when feasible) -> re-initialize -> score.
EvalResult RunArm(Arm arm, const EncoderState& pretrained, const TaskFeatures& task,
                  const ArmConfig& cfg, std::uint64_t seed,
                  EncoderState* trained_out = nullptr);

// ---------------------------------------------------------------------------
// Sweeps

struct TauCell {
  double tau_l = 0.0;
  double tau_h = 0.0;
  double mean_accuracy = 0.0;
  double mean_n_pos = 0.0;
  double mean_n_neg = 0.0;
  double mean_false_pos_rate = 0.0;
  double mean_false_neg_rate = 0.0;
};

std::vector<double> DefaultTauLGrid();  // 0.1..0.5
std::vector<double> DefaultTauHGrid();  // 0.7..1.1

/// Self-arm accuracy for every (tau_l, tau_h) pair.
std::vector<TauCell> SweepTauGrid(const EncoderState& pretrained,
                                  std::span<const TaskFeatures> tasks, const ArmConfig& base,
                                  std::span<const double> tau_ls, std::span<const double> tau_hs,
                                  std::uint64_t seed, int jobs = 1);
std::string TauGridCsv(std::span<const TauCell> cells);

struct StrideCell {
  double stride_s = 0.0;
  int alpha = 1;
  double mean_accuracy = 0.0;
  double mean_windows_per_clip = 0.0;
};

/// Pretrained-arm accuracy for every (stride, alpha) pair.
std::vector<StrideCell> SweepStrideFilter(const EncoderState& pretrained,
                                          std::span<const SpeakerTask> tasks,
                                          const ArmConfig& base, std::span<const double> strides,
                                          std::span<const int> alphas, int jobs = 1);
std::string StrideGridCsv(std::span<const StrideCell> cells);

std::string ResultsCsv(std::span<const EvalResult> results);
/// Mean and standard deviation of accuracy (and labeling error) per arm.
nlohmann::json SummaryJson(std::span<const EvalResult> results);

}  // namespace skws

#endif  // SKWS_EVALUATE_HPP_
