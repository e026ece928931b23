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

#include "skws/labeler.hpp"

#include <fstream>

#include "skws/common.hpp"

namespace skws {

std::string_view ToString(LabelDecision d) {
  switch (d) {
    case LabelDecision::kPseudoPositive: return "pseudo_positive";
    case LabelDecision::kPseudoNegative: return "pseudo_negative";
    case LabelDecision::kAbstain: return "abstain";
  }
  return "?";
}

LabelDecision Decide(double score, double th_l, double th_h) {
  if (score < th_l) return LabelDecision::kPseudoPositive;
  if (score > th_h) return LabelDecision::kPseudoNegative;
  return LabelDecision::kAbstain;
}

namespace {

PseudoSample MakeSample(const ClipFeatures& clip, std::size_t window, double score, Label label) {
  PseudoSample s;
  s.map = clip.maps.at(window);
  s.map.values = RoundToHalf(s.map.values);
  s.pseudo_label = label;
  s.score = score;
  s.clip_id = clip.clip_id;
  s.window_start_s = s.map.window_start_s;
  s.true_label = clip.true_label;
  return s;
}

}  // namespace

LabelResult LabelClip(const ClipFeatures& clip, const Embedder& embed, const LabelerConfig& cfg) {
  if (clip.maps.empty()) {
    throw Error(ErrorCode::kClipTooShort, "clip '" + clip.clip_id + "' shorter than one window");
  }
  const auto filtered =
      FilteredDistances(RawDistances(EmbedWindows(clip, embed), cfg.prototype.vector), cfg.alpha);
  LabelResult r;
  r.score = MinScore(filtered);
  r.decision = Decide(r.score.score, cfg.th_l, cfg.th_h);
  if (r.decision == LabelDecision::kPseudoPositive) {
    r.selected = MakeSample(clip, r.score.argmin, r.score.score, Label::kPositive);
  } else if (r.decision == LabelDecision::kPseudoNegative) {
    r.selected = MakeSample(clip, r.score.argmin, r.score.score, Label::kNegative);
  }
  return r;
}

LabelResult LabelClip(const AudioClip& clip, const Embedder& embed, const LabelerConfig& cfg) {
  if (clip.samples.size() < static_cast<std::size_t>(kWindowSamples)) {
    throw Error(ErrorCode::kClipTooShort, "clip '" + clip.clip_id + "' shorter than one window");
  }
  return LabelClip(Featurize(clip, cfg.window), embed, cfg);
}

SampleStore::SampleStore(std::size_t max_pos, std::size_t max_neg)
    : max_pos_(max_pos), max_neg_(max_neg) {
  if (max_pos == 0 || max_neg == 0) {
    throw Error(ErrorCode::kInvalidArgument, "store capacities must be >= 1");
  }
}

bool SampleStore::Add(PseudoSample s) {
  auto& q = s.pseudo_label == Label::kPositive ? positives_ : negatives_;
  const std::size_t cap = s.pseudo_label == Label::kPositive ? max_pos_ : max_neg_;
  q.push_back(std::move(s));
  if (q.size() > cap) {
    q.pop_front();
    return true;
  }
  return false;
}

void SampleStore::Save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json index = {{"max_pos", max_pos_}, {"max_neg", max_neg_},
                          {"samples", nlohmann::json::array()}};
  int i = 0;
  for (const auto* q : {&positives_, &negatives_}) {
    for (const auto& s : *q) {
      char name[32];
      std::snprintf(name, sizeof(name), "%06d.mfcc", i++);
      WriteMfccMap(s.map, dir / name);
      nlohmann::json e = {{"file", name},
                          {"clip_id", s.clip_id},
                          {"label", ToString(s.pseudo_label)},
                          {"score", s.score},
                          {"window_start_s", s.window_start_s}};
      if (s.true_label) e["true_label"] = ToString(*s.true_label);
      index["samples"].push_back(std::move(e));
    }
  }
  std::ofstream out(dir / "index.json");
  out << index.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + (dir / "index.json").string());
}

SampleStore SampleStore::Load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index.json");
  if (!in) throw Error(ErrorCode::kMissingFile, "no store index in " + dir.string());
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("store index: ") + e.what());
  }
  try {
    SampleStore store(index.at("max_pos").get<std::size_t>(), index.at("max_neg").get<std::size_t>());
    for (const auto& e : index.at("samples")) {
      PseudoSample s;
      s.map = ReadMfccMap(dir / e.at("file").get<std::string>());
      s.clip_id = e.at("clip_id").get<std::string>();
      s.map.source_clip_id = s.clip_id;
      s.pseudo_label = ParseLabel(e.at("label").get<std::string>());
      s.score = e.at("score").get<double>();
      s.window_start_s = e.at("window_start_s").get<double>();
      s.map.window_start_s = s.window_start_s;
      if (e.contains("true_label")) s.true_label = ParseLabel(e["true_label"].get<std::string>());
      store.Add(std::move(s));
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("store index: ") + e.what());
  }
}

std::optional<double> LabelerStats::false_pos_rate() const {
  if (n_pos_with_truth == 0) return std::nullopt;
  return static_cast<double>(n_false_pos) / n_pos_with_truth;
}

std::optional<double> LabelerStats::false_neg_rate() const {
  if (n_neg_with_truth == 0) return std::nullopt;
  return static_cast<double>(n_false_neg) / n_neg_with_truth;
}

nlohmann::json ToJson(const LabelerStats& s) {
  nlohmann::json j = {{"n_pos", s.n_pos}, {"n_neg", s.n_neg}, {"n_abstain", s.n_abstain},
                      {"n_skipped", s.n_skipped}};
  const auto fp = s.false_pos_rate();
  const auto fn = s.false_neg_rate();
  j["false_pos_rate"] = fp ? nlohmann::json(*fp) : nlohmann::json(nullptr);
  j["false_neg_rate"] = fn ? nlohmann::json(*fn) : nlohmann::json(nullptr);
  return j;
}

namespace {

void Tally(LabelerStats& st, const PseudoSample& s) {
  const bool pos = s.pseudo_label == Label::kPositive;
  (pos ? st.n_pos : st.n_neg) += 1;
  if (!s.true_label) return;
  if (pos) {
    ++st.n_pos_with_truth;
    if (*s.true_label != Label::kPositive) ++st.n_false_pos;
  } else {
    ++st.n_neg_with_truth;
    if (*s.true_label != Label::kNegative) ++st.n_false_neg;
  }
}

}  // namespace

LabelerStats RunStream(std::span<const ClipFeatures> clips, const Embedder& embed,
                       const LabelerConfig& cfg, SampleStore& store, LabelMode mode,
                       const ClipWarning& warn) {
  LabelerStats st;
  for (const auto& clip : clips) {
    if (clip.maps.empty()) {
      ++st.n_skipped;
      if (warn) warn(clip.clip_id, "clip shorter than one window");
      continue;
    }
    if (mode == LabelMode::kOracle) {
      if (!clip.true_label) {
        ++st.n_skipped;
        if (warn) warn(clip.clip_id, "oracle labeling needs a true label");
        continue;
      }
      // The oracle keeps the same window choice as the labeler; only the
      // label comes from ground truth.
      const auto filtered = FilteredDistances(
          RawDistances(EmbedWindows(clip, embed), cfg.prototype.vector), cfg.alpha);
      const ClipScore cs = MinScore(filtered);
      PseudoSample s = MakeSample(clip, cs.argmin, cs.score, *clip.true_label);
      Tally(st, s);
      store.Add(std::move(s));
      continue;
    }
    LabelResult r = LabelClip(clip, embed, cfg);
    if (!r.selected) {
      ++st.n_abstain;
      continue;
    }
    Tally(st, *r.selected);
    store.Add(std::move(*r.selected));
  }
  return st;
}

LabelerStats RunStream(std::span<const AudioClip> clips, const Embedder& embed,
                       const LabelerConfig& cfg, SampleStore& store, LabelMode mode,
                       const ClipWarning& warn) {
  std::vector<ClipFeatures> feats;
  feats.reserve(clips.size());
  for (const auto& c : clips) {
    if (c.samples.size() < static_cast<std::size_t>(kWindowSamples)) {
      ClipFeatures empty;
      empty.clip_id = c.clip_id;
      empty.true_label = c.true_label;
      feats.push_back(std::move(empty));
    } else {
      feats.push_back(Featurize(c, cfg.window));
    }
  }
  return RunStream(feats, embed, cfg, store, mode, warn);
}

DutyReport SimulateDutyCycle(const FrameWindow& window, const std::string& arch,
                             const PlatformConstants& platform) {
  window.Validate();
  const ArchPlatform& a = platform.For(arch);
  DutyReport r;
  r.t_active_ms = platform.t_mfcc_ms + a.t_nn_ms + platform.t_overhead_ms;
  r.stride_ms = window.stride_s * 1e3;
  if (r.t_active_ms > r.stride_ms) {
    throw Error(ErrorCode::kRealtimeViolation,
                "active time " + std::to_string(r.t_active_ms) + " ms exceeds stride " +
                    std::to_string(r.stride_ms) + " ms");
  }
  r.duty = r.t_active_ms / r.stride_ms;
  r.p_label_mw = a.p_label_active_avg_mw;
  return r;
}

}  // namespace skws
