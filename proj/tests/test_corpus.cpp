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

#include <fstream>
#include <set>

#include "skws/corpus.hpp"
#include "test_util.hpp"

namespace skws {
namespace {

using testing::SmallSpec;
using testing::TempDir;

TEST(Corpus, WavRoundTripIsWithinOneQuantizationStep) {
  TempDir dir("wav");
  AudioClip clip = testing::ToneClip(1.25, 440.0, 0.5, "tone");
  WriteWav(clip, dir.path() / "tone.wav");
  const AudioClip back = ReadWav(dir.path() / "tone.wav");
  ASSERT_EQ(back.samples.size(), clip.samples.size());
  EXPECT_EQ(back.sample_rate, kSampleRate);
  EXPECT_EQ(back.clip_id, "tone");
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    EXPECT_NEAR(back.samples[i], clip.samples[i], 1.0 / 32768.0);
  }
}

TEST(Corpus, ReadWavRejectsMissingAndMalformedFiles) {
  TempDir dir("badwav");
  try {
    ReadWav(dir.path() / "absent.wav");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingFile);
  }
  std::ofstream(dir.path() / "junk.wav") << "not a wav file at all";
  try {
    ReadWav(dir.path() / "junk.wav");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadFormat);
  }
}

TEST(Corpus, ReadWavRejectsWrongSampleRate) {
  TempDir dir("sr");
  AudioClip clip = testing::ToneClip(1.0, 440.0, 0.5, "tone");
  WriteWav(clip, dir.path() / "tone.wav");
  std::fstream f(dir.path() / "tone.wav", std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(24);
  const unsigned char rate[4] = {0x44, 0xac, 0, 0};  // 44100
  f.write(reinterpret_cast<const char*>(rate), 4);
  f.close();
  try {
    ReadWav(dir.path() / "tone.wav");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadSampleRate);
  }
}

TEST(Corpus, ValidateClipCatchesBadInput) {
  AudioClip c = testing::ToneClip(1.0, 100.0, 0.1, "c");
  EXPECT_NO_THROW(ValidateClip(c));
  c.samples[10] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(ValidateClip(c), Error);
  c.samples.clear();
  EXPECT_THROW(ValidateClip(c), Error);
  AudioClip r = testing::ToneClip(1.0, 100.0, 0.1, "r");
  r.sample_rate = 8000;
  EXPECT_THROW(ValidateClip(r), Error);
}

TEST(Corpus, ManifestRoundTripAndValidation) {
  TempDir dir("manifest");
  Manifest m;
  for (int i = 0; i < 3; ++i) {
    m.entries.push_back({"e" + std::to_string(i) + ".wav", Label::kPositive, "alice",
                         Split::kUserEnroll});
  }
  m.entries.push_back({"n0.wav", Label::kNegative, "alice", Split::kUserNeg});
  m.entries.push_back({"a0.wav", Label::kNegative, "", Split::kAdaptation});
  m.entries.push_back({"t0.wav", Label::kPositive, "alice", Split::kTest});
  SaveManifest(m, dir.path() / "m.jsonl");
  const Manifest back = LoadManifest(dir.path() / "m.jsonl", 3, false);
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.CountSplit(Split::kUserEnroll), 3u);

  // Missing audio is reported when files are checked.
  try {
    LoadManifest(dir.path() / "m.jsonl", 3, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingFile);
  }
  // Wrong enrollment count.
  EXPECT_THROW(ValidateManifest(m, 2), Error);
  // Duplicate path.
  Manifest dup = m;
  dup.entries.push_back(dup.entries.front());
  try {
    ValidateManifest(dup, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicatePath);
  }
}

TEST(Corpus, ManifestParseErrorsNameTheLine) {
  TempDir dir("manifest_bad");
  std::ofstream(dir.path() / "m.jsonl") << "{\"path\": \"a.wav\", \"label\": \"positive\"}\n";
  try {
    LoadManifest(dir.path() / "m.jsonl", 3, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
  std::ofstream(dir.path() / "r.jsonl")
      << "{\"path\":\"a.wav\",\"label\":\"negative\",\"split\":\"adaptation\",\"sample_rate\":8000}\n";
  try {
    LoadManifest(dir.path() / "r.jsonl", 3, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadSampleRate);
  }
}

TEST(Corpus, SyntheticCorpusHasRequestedShape) {
  const SynthSpec spec = SmallSpec();
  const SyntheticCorpus c = GenerateSyntheticCorpus(spec);
  EXPECT_EQ(c.pretrain.size(), 18u);
  EXPECT_EQ(c.target.size(), 24u);
  EXPECT_EQ(c.negative.size(), 16u);
  std::set<std::string> ids;
  for (const auto* set : {&c.pretrain, &c.target, &c.negative}) {
    for (const auto& clip : *set) {
      EXPECT_NO_THROW(ValidateClip(clip));
      EXPECT_GE(clip.duration_s(), 1.0);
      EXPECT_LE(clip.duration_s(), 2.0 + 1e-9);
      EXPECT_TRUE(ids.insert(clip.clip_id).second) << clip.clip_id;
    }
  }
  for (const auto& clip : c.target) {
    EXPECT_EQ(clip.true_label, Label::kPositive);
    ASSERT_TRUE(clip.speaker_id.has_value());
  }
  for (const auto& clip : c.negative) EXPECT_EQ(clip.true_label, Label::kNegative);
}

TEST(Corpus, SyntheticCorpusIsDeterministic) {
  for (int units : {0, 8}) {
    SynthSpec spec = SmallSpec(5);
    spec.n_units = units;
    const auto a = GenerateSyntheticCorpus(spec);
    const auto b = GenerateSyntheticCorpus(spec);
    ASSERT_EQ(a.target.size(), b.target.size());
    for (std::size_t i = 0; i < a.target.size(); ++i) {
      EXPECT_EQ(a.target[i].samples, b.target[i].samples);
    }
    for (std::size_t i = 0; i < a.negative.size(); ++i) {
      EXPECT_EQ(a.negative[i].samples, b.negative[i].samples);
    }
  }
  SynthSpec other = SmallSpec(6);
  EXPECT_NE(GenerateSyntheticCorpus(other).target[0].samples,
            GenerateSyntheticCorpus(SmallSpec(5)).target[0].samples);
}

TEST(Corpus, SynthSpecValidation) {
  SynthSpec s = SmallSpec();
  s.clip_duration_range_s = {0.5, 2.0};
  EXPECT_THROW(ValidateSynthSpec(s), Error);
  s = SmallSpec();
  s.confuser_fraction = 1.5;
  EXPECT_THROW(ValidateSynthSpec(s), Error);
  s = SmallSpec();
  s.speaker_spread = 0.5;
  EXPECT_THROW(ValidateSynthSpec(s), Error);
  s = SmallSpec();
  s.n_units = -1;
  EXPECT_THROW(ValidateSynthSpec(s), Error);
}

TEST(Corpus, AugmentHitsRequestedSnr) {
  const AudioClip clip = testing::ToneClip(1.0, 500.0, 0.3, "kw");
  const AudioClip noise = GenerateColoredNoise(3.0, 0.1, 9);
  for (double snr : {0.0, 2.5, 5.0}) {
    const AudioClip mixed = AugmentWithNoise(clip, noise, snr, 3);
    std::vector<float> added(clip.samples.size());
    for (std::size_t i = 0; i < added.size(); ++i) added[i] = mixed.samples[i] - clip.samples[i];
    const double got = 10.0 * std::log10(SignalPower(clip.samples) / SignalPower(added));
    EXPECT_NEAR(got, snr, 1e-3);
  }
}

TEST(Corpus, AugmentErrors) {
  const AudioClip clip = testing::ToneClip(2.0, 500.0, 0.3, "kw");
  const AudioClip short_noise = GenerateColoredNoise(1.0, 0.1, 1);
  try {
    AugmentWithNoise(clip, short_noise, 0.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoiseTooShort);
  }
  AudioClip silent = clip;
  std::fill(silent.samples.begin(), silent.samples.end(), 0.0f);
  try {
    AugmentWithNoise(silent, GenerateColoredNoise(3.0, 0.1, 1), 0.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroPower);
  }
  EXPECT_THROW(AugmentSet({clip}, {}, 2, 0, 5, 1), Error);
}

TEST(Corpus, AugmentSetCountsAndDeterminism) {
  const std::vector<AudioClip> clips{testing::ToneClip(1.0, 500.0, 0.3, "a"),
                                     testing::ToneClip(1.0, 700.0, 0.3, "b")};
  const std::vector<AudioClip> noises{GenerateColoredNoise(2.0, 0.1, 1),
                                      GenerateColoredNoise(2.0, 0.1, 2)};
  const auto a = AugmentSet(clips, noises, 4, 0.0, 5.0, 11);
  const auto b = AugmentSet(clips, noises, 4, 0.0, 5.0, 11);
  ASSERT_EQ(a.size(), 8u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].samples, b[i].samples);
}

TEST(Corpus, ColoredNoiseHasRequestedRms) {
  const AudioClip n = GenerateColoredNoise(2.0, 0.25, 4);
  EXPECT_EQ(n.samples.size(), 32000u);
  EXPECT_NEAR(std::sqrt(SignalPower(n.samples)), 0.25, 1e-4);
}

}  // namespace
}  // namespace skws
