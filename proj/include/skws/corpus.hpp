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

#ifndef SKWS_CORPUS_HPP_
#define SKWS_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skws/common.hpp"

namespace skws {

/// Mono PCM clip, amplitudes nominally in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = kSampleRate;
  std::optional<Label> true_label;
  std::optional<std::string> speaker_id;
  /// Class index for multi-class (pretraining) corpora.
  std::optional<int> class_index;
  std::string clip_id;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Throws unless the clip is non-empty, finite and sampled at 16 kHz.
void ValidateClip(const AudioClip& clip);

enum class Split { kAdaptation, kTest, kUserEnroll, kUserNeg };

std::string_view ToString(Split split);
Split ParseSplit(std::string_view text);

struct ManifestEntry {
  std::string path;
  Label label = Label::kNegative;
  std::string speaker_id;
  Split split = Split::kAdaptation;

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  std::size_t CountSplit(Split split) const;
  bool operator==(const Manifest&) const = default;
};

/// Parses a JSON-lines manifest. Relative paths resolve against the manifest's
/// directory. With `check_files`, every referenced WAV must exist.
Manifest LoadManifest(const std::filesystem::path& path, int k_enroll = 3,
                      bool check_files = true);
void SaveManifest(const Manifest& manifest, const std::filesystem::path& path);
void ValidateManifest(const Manifest& manifest, int k_enroll);

/// Reads RIFF/WAVE 16-bit PCM mono 16 kHz; anything else is rejected.
AudioClip ReadWav(const std::filesystem::path& path);
void WriteWav(const AudioClip& clip, const std::filesystem::path& path);

/// Loads every clip referenced by the manifest, with label and speaker set.
std::vector<AudioClip> LoadClips(const Manifest& manifest,
                                 const std::filesystem::path& base_dir,
                                 std::optional<Split> only = std::nullopt);

struct SynthSpec {
  int n_pretrain_classes = 6;
  int n_clips_per_class = 50;
  std::uint64_t keyword_pattern_seed = 1;
  double noise_floor_db = -40.0;
  std::pair<double, double> clip_duration_range_s{1.0, 2.0};
  std::uint64_t rng_seed = 1;

  // Held-out keyword and negatives.
  int n_target_speakers = 4;
  int n_target_clips_per_speaker = 20;
  int n_negative_clips = 200;
  /// Fraction of negatives that borrow bursts from the target keyword.
  double confuser_fraction = 0.3;
  /// Per-speaker pitch/tempo spread for the held-out keyword.
  double speaker_spread = 0.12;
  /// Size of the shared burst inventory words are spelled from; 0 draws
  /// every burst shape independently.
  int n_units = 0;
};

void ValidateSynthSpec(const SynthSpec& spec);

struct SyntheticCorpus {
  std::vector<AudioClip> pretrain;
  std::vector<AudioClip> target;
  std::vector<AudioClip> negative;
};

/// Each class is a fixed sequence of 3-5 frequency-modulated tone bursts over
/// white noise. The held-out keyword uses class index n_pretrain_classes.
SyntheticCorpus GenerateSyntheticCorpus(const SynthSpec& spec);

/// Renders one utterance of `class_index` with the given speaker modifiers.
AudioClip RenderKeyword(const SynthSpec& spec, int class_index,
                        double duration_s, double pitch, double tempo,
                        std::uint64_t seed);

/// Brown-ish colored noise from a leaky integrator over white noise, unit RMS
/// scaled to `rms`.
AudioClip GenerateColoredNoise(double duration_s, double rms, std::uint64_t seed);

/// Adds a seeded segment of `noise` to `clip` at the requested SNR.
AudioClip AugmentWithNoise(const AudioClip& clip, const AudioClip& noise,
                           double snr_db, std::uint64_t rng_seed);

/// `per_clip` augmentations of every clip with SNR drawn uniformly in
/// [snr_lo, snr_hi] dB and a noise clip chosen uniformly from `noises`.
std::vector<AudioClip> AugmentSet(const std::vector<AudioClip>& clips,
                                  const std::vector<AudioClip>& noises,
                                  int per_clip, double snr_lo, double snr_hi,
                                  std::uint64_t rng_seed);

double SignalPower(const std::vector<float>& samples);

}  // namespace skws

#endif  // SKWS_CORPUS_HPP_
