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

#include "reference.hpp"
#include "skws/calibrate.hpp"
#include "test_util.hpp"

namespace skws {
namespace {

TEST(Calibrate, ThresholdEndpointsAreExact) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double p = rng.Uniform(0.0, 10.0);
    const double n = rng.Uniform(0.0, 10.0);
    ASSERT_EQ(Threshold(p, n, 0.0), p);
    ASSERT_EQ(Threshold(p, n, 1.0), n);
  }
  EXPECT_DOUBLE_EQ(Threshold(1.0, 3.0, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(Threshold(1.0, 3.0, 1.1), 3.2);
}

TEST(Calibrate, FilteredDistancesAreTrailingMeans) {
  const std::vector<double> raw{4, 2, 6, 8, 1};
  EXPECT_EQ(FilteredDistances(raw, 1), raw);
  const std::vector<double> f2 = FilteredDistances(raw, 2);
  EXPECT_DOUBLE_EQ(f2[0], 4.0);
  EXPECT_DOUBLE_EQ(f2[1], 3.0);
  EXPECT_DOUBLE_EQ(f2[4], 4.5);
  const std::vector<double> f3 = FilteredDistances(raw, 3);
  EXPECT_DOUBLE_EQ(f3[1], 3.0);
  EXPECT_DOUBLE_EQ(f3[2], 4.0);
  EXPECT_DOUBLE_EQ(f3[4], 5.0);
  EXPECT_EQ(FilteredDistances(raw, 9), FilteredDistances(raw, 5));
  EXPECT_THROW(FilteredDistances(raw, 0), Error);
}

TEST(Calibrate, MinScoreTakesFirstMinimum) {
  const std::vector<double> f{3, 1, 2, 1};
  const ClipScore s = MinScore(f);
  EXPECT_EQ(s.score, 1.0);
  EXPECT_EQ(s.argmin, 1u);
  EXPECT_THROW(MinScore({}), Error);
}

TEST(Calibrate, SelectAlphaPrefersSmallestOnTies) {
  const std::vector<double> m{0.1, 0.3, 0.3, 0.2, 0.0};
  EXPECT_EQ(SelectAlpha(m), 2);
}

class CalibrateFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus_ = GenerateSyntheticCorpus(testing::SmallSpec(3));
    pos_.assign(corpus_.target.begin(), corpus_.target.begin() + 3);
    neg_.assign(corpus_.negative.begin(), corpus_.negative.begin() + 3);
    enc_ = EncoderState::Initialized(TinyArch(), 9);
    embed_ = MakeEmbedder(enc_);
  }
  SyntheticCorpus corpus_;
  std::vector<AudioClip> pos_, neg_;
  EncoderState enc_;
  Embedder embed_;
};

TEST_F(CalibrateFixture, ChosenAlphaMatchesExhaustiveSearch) {
  for (double stride : {0.125, 0.25}) {
    const FrameWindow win{1.0, stride};
    const LabelerConfig cfg = Calibrate(embed_, pos_, neg_, 0.4, 0.9, win);
    const auto ref = reference::SearchAlpha(pos_, neg_, embed_, cfg.prototype.vector, stride);
    EXPECT_EQ(cfg.alpha, ref.alpha);
    for (int a = 0; a < kMaxAlpha; ++a) {
      EXPECT_NEAR(cfg.margins[a], ref.margins[a], 1e-12);
    }
    EXPECT_NEAR(cfg.dist_p, ref.dist_p[cfg.alpha - 1], 1e-12);
    EXPECT_NEAR(cfg.dist_n, ref.dist_n[cfg.alpha - 1], 1e-12);
    EXPECT_EQ(cfg.th_l, Threshold(cfg.dist_p, cfg.dist_n, 0.4));
    EXPECT_EQ(cfg.th_h, Threshold(cfg.dist_p, cfg.dist_n, 0.9));
  }
}

TEST_F(CalibrateFixture, PrototypeUsesKeywordWindows) {
  const auto feats = FeaturizeAll(pos_, FrameWindow{});
  Embedding sum = Embedding::Zero(32);
  for (const auto& f : feats) sum += embed_(f.maps[f.keyword_window].values);
  const Prototype p = EnrollPrototype(feats, embed_);
  EXPECT_LT((p.vector - sum / 3.0f).cwiseAbs().maxCoeff(), 1e-6f);
  EXPECT_EQ(p.k_used, 3);
}

TEST_F(CalibrateFixture, ZeroAndOneTausReproduceDistances) {
  const LabelerConfig cfg = Calibrate(embed_, pos_, neg_, 0.0, 1.0, FrameWindow{});
  EXPECT_EQ(cfg.th_l, cfg.dist_p);
  EXPECT_EQ(cfg.th_h, cfg.dist_n);
}

TEST_F(CalibrateFixture, Errors) {
  EXPECT_THROW(Calibrate(embed_, pos_, std::vector<AudioClip>{}, 0.4, 0.9, FrameWindow{}), Error);
  EXPECT_THROW(Calibrate(embed_, pos_, neg_, 0.9, 0.4, FrameWindow{}), Error);
  std::vector<AudioClip> short_pos = pos_;
  short_pos[0].samples.resize(8000);
  try {
    Calibrate(embed_, short_pos, neg_, 0.4, 0.9, FrameWindow{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kClipTooShort);
  }
}

TEST_F(CalibrateFixture, ConfigJsonRoundTrip) {
  testing::TempDir dir("labeler_cfg");
  const LabelerConfig cfg = Calibrate(embed_, pos_, neg_, 0.3, 0.8, FrameWindow{1.0, 0.25});
  SaveLabelerConfig(cfg, dir.path() / "l.json");
  const LabelerConfig back = LoadLabelerConfig(dir.path() / "l.json");
  EXPECT_EQ(back.prototype.vector, cfg.prototype.vector);
  EXPECT_EQ(back.alpha, cfg.alpha);
  EXPECT_EQ(back.th_l, cfg.th_l);
  EXPECT_EQ(back.th_h, cfg.th_h);
  EXPECT_EQ(back.window.stride_s, 0.25);
  EXPECT_EQ(back.margins, cfg.margins);
  std::ofstream(dir.path() / "bad.json") << "{\"alpha\": 2}";
  try {
    LoadLabelerConfig(dir.path() / "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
}

TEST_F(CalibrateFixture, ClipScoreMatchesReference) {
  const LabelerConfig cfg = Calibrate(embed_, pos_, neg_, 0.4, 0.9, FrameWindow{});
  for (const auto& clip : corpus_.negative) {
    const double got = ClipScoreOf(clip, embed_, cfg.prototype, 3, cfg.window);
    const auto want = reference::MinOf(reference::Filter(
        reference::Distances(reference::WindowEmbeddings(clip, embed_, 0.125),
                             cfg.prototype.vector),
        3));
    EXPECT_NEAR(got, want.value, 1e-12);
  }
}

}  // namespace
}  // namespace skws
