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

#include "reference.hpp"
#include "skws/labeler.hpp"
#include "skws/resources.hpp"
#include "test_util.hpp"

namespace skws {
namespace {

PseudoSample Sample(Label label, std::string id) {
  PseudoSample s;
  s.pseudo_label = label;
  s.clip_id = std::move(id);
  return s;
}

TEST(Labeler, DecideUsesStrictInequalities) {
  EXPECT_EQ(Decide(0.99, 1.0, 2.0), LabelDecision::kPseudoPositive);
  EXPECT_EQ(Decide(1.0, 1.0, 2.0), LabelDecision::kAbstain);
  EXPECT_EQ(Decide(1.5, 1.0, 2.0), LabelDecision::kAbstain);
  EXPECT_EQ(Decide(2.0, 1.0, 2.0), LabelDecision::kAbstain);
  EXPECT_EQ(Decide(2.01, 1.0, 2.0), LabelDecision::kPseudoNegative);
}

TEST(Labeler, StoreEvictsOldestPerClass) {
  SampleStore store(2, 3);
  EXPECT_FALSE(store.Add(Sample(Label::kPositive, "p0")));
  EXPECT_FALSE(store.Add(Sample(Label::kPositive, "p1")));
  EXPECT_TRUE(store.Add(Sample(Label::kPositive, "p2")));
  for (int i = 0; i < 3; ++i) EXPECT_FALSE(store.Add(Sample(Label::kNegative, "n")));
  ASSERT_EQ(store.positives().size(), 2u);
  EXPECT_EQ(store.positives().front().clip_id, "p1");
  EXPECT_EQ(store.positives().back().clip_id, "p2");
  EXPECT_EQ(store.size(), 5u);
  EXPECT_THROW(SampleStore(0, 1), Error);
}

TEST(Labeler, StoreRoundTrip) {
  testing::TempDir dir("store");
  Rng rng(4);
  SampleStore store(3, 4);
  for (int i = 0; i < 6; ++i) {
    PseudoSample s = Sample(i % 2 ? Label::kPositive : Label::kNegative, "c" + std::to_string(i));
    s.map.values = RoundToHalf(testing::RandomMap(rng));
    s.score = 0.1 * i;
    s.window_start_s = 0.125 * i;
    if (i != 3) s.true_label = Label::kPositive;
    store.Add(std::move(s));
  }
  store.Save(dir.path() / "s");
  const SampleStore back = SampleStore::Load(dir.path() / "s");
  EXPECT_EQ(back.max_pos(), 3u);
  EXPECT_EQ(back.max_neg(), 4u);
  ASSERT_EQ(back.positives().size(), store.positives().size());
  ASSERT_EQ(back.negatives().size(), store.negatives().size());
  for (std::size_t i = 0; i < store.positives().size(); ++i) {
    const auto& a = store.positives()[i];
    const auto& b = back.positives()[i];
    EXPECT_EQ(a.map.values, b.map.values);
    EXPECT_EQ(a.clip_id, b.clip_id);
    EXPECT_EQ(a.score, b.score);
    EXPECT_EQ(a.window_start_s, b.window_start_s);
    EXPECT_EQ(a.true_label, b.true_label);
  }
  EXPECT_THROW(SampleStore::Load(dir.path() / "absent"), Error);
}

class LabelerFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus_ = GenerateSyntheticCorpus(testing::SmallSpec(4));
    enc_ = EncoderState::Initialized(TinyArch(), 6);
    embed_ = MakeEmbedder(enc_);
    const std::vector<AudioClip> pos(corpus_.target.begin(), corpus_.target.begin() + 3);
    const std::vector<AudioClip> neg(corpus_.negative.begin(), corpus_.negative.begin() + 3);
    cfg_ = Calibrate(embed_, pos, neg, 0.4, 0.9, FrameWindow{});
  }
  SyntheticCorpus corpus_;
  EncoderState enc_;
  Embedder embed_;
  LabelerConfig cfg_;
};

TEST_F(LabelerFixture, LabelClipMatchesReference) {
  Rng rng(12);
  std::vector<AudioClip> clips = corpus_.target;
  clips.insert(clips.end(), corpus_.negative.begin(), corpus_.negative.end());
  int seen[3] = {0, 0, 0};
  for (const auto& clip : clips) {
    LabelerConfig cfg = cfg_;
    cfg.alpha = rng.UniformInt(1, kMaxAlpha);
    const auto ref0 = reference::LabelClip(clip, embed_, cfg);
    // Place the thresholds around this clip's score so every branch is hit.
    cfg.dist_p = ref0.score.value * rng.Uniform(0.7, 1.3);
    cfg.dist_n = cfg.dist_p + rng.Uniform(0.05, 1.0);
    cfg.th_l = Threshold(cfg.dist_p, cfg.dist_n, cfg.tau_l);
    cfg.th_h = Threshold(cfg.dist_p, cfg.dist_n, cfg.tau_h);
    const auto want = reference::LabelClip(clip, embed_, cfg);
    const auto got = LabelClip(clip, embed_, cfg);
    EXPECT_EQ(got.decision, want.decision) << clip.clip_id;
    EXPECT_EQ(got.score.argmin, want.score.index) << clip.clip_id;
    EXPECT_NEAR(got.score.score, want.score.value, 1e-12);
    EXPECT_EQ(got.selected.has_value(), got.decision != LabelDecision::kAbstain);
    if (got.selected) {
      EXPECT_DOUBLE_EQ(got.selected->window_start_s, 0.125 * static_cast<double>(want.score.index));
      EXPECT_EQ(got.selected->map.values, RoundToHalf(got.selected->map.values));
    }
    ++seen[static_cast<int>(got.decision)];
  }
  EXPECT_GT(seen[0], 0);
  EXPECT_GT(seen[1], 0);
  EXPECT_GT(seen[2], 0);
}

TEST_F(LabelerFixture, ShortClipIsRejected) {
  AudioClip c = corpus_.negative[0];
  c.samples.resize(15999);
  try {
    LabelClip(c, embed_, cfg_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kClipTooShort);
  }
}

TEST_F(LabelerFixture, StreamSkipsShortClipsWithWarning) {
  std::vector<AudioClip> clips(corpus_.negative.begin(), corpus_.negative.begin() + 4);
  clips[1].samples.resize(100);
  std::vector<std::string> warned;
  SampleStore store;
  const LabelerStats st = RunStream(
      clips, embed_, cfg_, store, LabelMode::kSelf,
      [&](const std::string& id, const std::string&) { warned.push_back(id); });
  EXPECT_EQ(st.n_skipped, 1);
  ASSERT_EQ(warned.size(), 1u);
  EXPECT_EQ(warned[0], clips[1].clip_id);
  EXPECT_EQ(st.n_pos + st.n_neg + st.n_abstain, 3);
  EXPECT_EQ(store.size(), static_cast<std::size_t>(st.n_pos + st.n_neg));
}

TEST_F(LabelerFixture, StreamStatsCountFalseLabels) {
  std::vector<AudioClip> clips = corpus_.target;
  clips.insert(clips.end(), corpus_.negative.begin(), corpus_.negative.end());
  SampleStore store;
  const LabelerStats st = RunStream(clips, embed_, cfg_, store);
  int fp = 0, fn = 0;
  for (const auto& s : store.positives()) fp += *s.true_label == Label::kNegative;
  for (const auto& s : store.negatives()) fn += *s.true_label == Label::kPositive;
  EXPECT_EQ(st.n_false_pos, fp);
  EXPECT_EQ(st.n_false_neg, fn);
  EXPECT_EQ(st.n_pos_with_truth, st.n_pos);
  const auto j = ToJson(st);
  EXPECT_EQ(j["n_pos"], st.n_pos);
  if (st.n_pos == 0) EXPECT_TRUE(j["false_pos_rate"].is_null());
}

TEST_F(LabelerFixture, OracleModeUsesTruth) {
  std::vector<AudioClip> clips(corpus_.target.begin(), corpus_.target.begin() + 5);
  clips.insert(clips.end(), corpus_.negative.begin(), corpus_.negative.begin() + 7);
  AudioClip unlabeled = corpus_.negative[8];
  unlabeled.true_label.reset();
  clips.push_back(unlabeled);
  SampleStore store;
  int warnings = 0;
  const LabelerStats st = RunStream(clips, embed_, cfg_, store, LabelMode::kOracle,
                                    [&](const std::string&, const std::string&) { ++warnings; });
  EXPECT_EQ(st.n_pos, 5);
  EXPECT_EQ(st.n_neg, 7);
  EXPECT_EQ(st.n_skipped, 1);
  EXPECT_EQ(warnings, 1);
  EXPECT_EQ(st.n_false_pos, 0);
  EXPECT_EQ(st.n_false_neg, 0);
  EXPECT_EQ(st.n_abstain, 0);
}

TEST(Labeler, DutyCycle) {
  const PlatformConstants pc = PlatformConstants::Defaults();
  const DutyReport s = SimulateDutyCycle(FrameWindow{}, "dscnn_s", pc);
  EXPECT_NEAR(s.duty, 0.04, 1e-12);
  EXPECT_NEAR(s.t_active_ms, 5.0, 1e-12);
  const DutyReport r = SimulateDutyCycle(FrameWindow{}, "resnet15", pc);
  EXPECT_NEAR(r.duty, 0.12, 1e-12);
  PlatformConstants slow = pc;
  slow.per_arch["dscnn_s"].t_nn_ms = 200.0;
  try {
    SimulateDutyCycle(FrameWindow{}, "dscnn_s", slow);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRealtimeViolation);
  }
}

}  // namespace
}  // namespace skws
