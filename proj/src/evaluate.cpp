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

#include "skws/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "skws/common.hpp"
#include "skws/parallel.hpp"
#include "skws/rng.hpp"

namespace skws {

std::string_view ToString(Arm arm) {
  switch (arm) {
    case Arm::kPretrained: return "pretrained";
    case Arm::kSelf: return "self";
    case Arm::kOracle: return "oracle";
    case Arm::kAugment: return "augment";
  }
  return "?";
}

Arm ParseArm(std::string_view text) {
  for (Arm a : {Arm::kPretrained, Arm::kSelf, Arm::kOracle, Arm::kAugment}) {
    if (ToString(a) == text) return a;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown arm '" + std::string(text) + "'");
}

GammaSelection SelectGammaAtFar(std::span<const double> neg_scores, double far_per_hour,
                                double neg_hours) {
  if (neg_scores.empty()) throw Error(ErrorCode::kEmptyInput, "no negative clips for FAR selection");
  if (!(far_per_hour >= 0.0) || !(neg_hours >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "FAR target and negative hours must be >= 0");
  }
  std::vector<double> s(neg_scores.begin(), neg_scores.end());
  std::sort(s.begin(), s.end());
  GammaSelection g;
  const double budget = std::floor(far_per_hour * neg_hours);
  g.budget = budget >= static_cast<double>(s.size()) ? static_cast<int>(s.size())
                                                      : static_cast<int>(budget);
  g.gamma = static_cast<std::size_t>(g.budget) >= s.size()
                ? std::numeric_limits<double>::infinity()
                : s[g.budget];
  g.alarms = static_cast<int>(std::lower_bound(s.begin(), s.end(), g.gamma) - s.begin());
  return g;
}

double SpeakerAccuracy(std::span<const double> pos_scores, double gamma) {
  if (pos_scores.empty()) throw Error(ErrorCode::kEmptyInput, "no positive clips to score");
  const auto hits = std::count_if(pos_scores.begin(), pos_scores.end(),
                                  [gamma](double s) { return s < gamma; });
  return static_cast<double>(hits) / static_cast<double>(pos_scores.size());
}

std::vector<double> ClipScores(std::span<const ClipFeatures> clips, const Embedder& embed,
                               const Prototype& proto, int alpha) {
  std::vector<double> out;
  out.reserve(clips.size());
  for (const auto& c : clips) {
    if (c.maps.empty()) continue;
    out.push_back(
        MinScore(FilteredDistances(RawDistances(EmbedWindows(c, embed), proto.vector), alpha)).score);
  }
  return out;
}

TaskFeatures FeaturizeTask(const SpeakerTask& task, const FrameWindow& window) {
  TaskFeatures f;
  f.speaker_id = task.speaker_id;
  f.window = window;
  f.enroll_pos = FeaturizeAll(task.enroll_pos, window);
  f.enroll_neg = FeaturizeAll(task.enroll_neg, window);
  f.enroll_pos_audio = task.enroll_pos;
  f.enroll_neg_audio = task.enroll_neg;
  f.adaptation = FeaturizeAll(task.adaptation, window);
  f.test_pos = FeaturizeAll(task.test_pos, window);
  f.test_neg = FeaturizeAll(task.test_neg, window);
  double seconds = 0.0;
  for (const auto& c : task.test_neg) seconds += c.duration_s();
  f.neg_hours = seconds / 3600.0;
  return f;
}

std::vector<SpeakerTask> TasksFromSynthetic(const SyntheticCorpus& corpus, const TaskSplit& split) {
  if (split.k_enroll < 1) throw Error(ErrorCode::kInvalidArgument, "k_enroll must be >= 1");
  std::vector<std::string> speakers;
  std::map<std::string, std::vector<const AudioClip*>> by_speaker;
  for (const auto& c : corpus.target) {
    const std::string s = c.speaker_id.value_or("");
    if (!by_speaker.count(s)) speakers.push_back(s);
    by_speaker[s].push_back(&c);
  }
  Rng rng(MixSeed(split.rng_seed, 0x7a5c));
  std::vector<const AudioClip*> negs;
  for (const auto& c : corpus.negative) negs.push_back(&c);
  std::shuffle(negs.begin(), negs.end(), rng.engine());
  const std::size_t k = static_cast<std::size_t>(split.k_enroll);
  if (negs.size() < k * speakers.size() + 2) {
    throw Error(ErrorCode::kInvalidArgument, "too few negatives for user negatives and tests");
  }
  const std::size_t rest = negs.size() - k * speakers.size();
  const std::size_t n_adapt_neg =
      static_cast<std::size_t>(std::lround(split.adapt_neg_fraction * static_cast<double>(rest)));
  const auto adapt_neg_begin = negs.begin() + static_cast<std::ptrdiff_t>(k * speakers.size());
  const auto test_neg_begin = adapt_neg_begin + static_cast<std::ptrdiff_t>(n_adapt_neg);

  std::vector<SpeakerTask> tasks;
  for (std::size_t si = 0; si < speakers.size(); ++si) {
    auto clips = by_speaker[speakers[si]];
    if (clips.size() < k + 2) {
      throw Error(ErrorCode::kInvalidArgument, "speaker '" + speakers[si] + "' has too few clips");
    }
    std::shuffle(clips.begin(), clips.end(), rng.engine());
    SpeakerTask t;
    t.speaker_id = speakers[si];
    for (std::size_t i = 0; i < k; ++i) {
      t.enroll_pos.push_back(*clips[i]);
      t.enroll_neg.push_back(*negs[si * k + i]);
    }
    const std::size_t m = clips.size() - k;
    const std::size_t n_adapt = static_cast<std::size_t>(
        std::lround(split.adapt_pos_fraction * static_cast<double>(m)));
    for (std::size_t i = 0; i < m; ++i) {
      (i < n_adapt ? t.adaptation : t.test_pos).push_back(*clips[k + i]);
    }
    for (auto it = adapt_neg_begin; it != test_neg_begin; ++it) t.adaptation.push_back(**it);
    for (auto it = test_neg_begin; it != negs.end(); ++it) t.test_neg.push_back(**it);
    std::shuffle(t.adaptation.begin(), t.adaptation.end(), rng.engine());
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::vector<SpeakerTask> TasksFromManifest(const Manifest& manifest,
                                           const std::filesystem::path& base_dir) {
  const auto enroll = LoadClips(manifest, base_dir, Split::kUserEnroll);
  const auto user_neg = LoadClips(manifest, base_dir, Split::kUserNeg);
  const auto adapt = LoadClips(manifest, base_dir, Split::kAdaptation);
  const auto test = LoadClips(manifest, base_dir, Split::kTest);
  std::vector<SpeakerTask> tasks;
  std::map<std::string, std::size_t> index;
  for (const auto& c : enroll) {
    const std::string s = c.speaker_id.value_or("");
    if (!index.count(s)) {
      index[s] = tasks.size();
      tasks.push_back({});
      tasks.back().speaker_id = s;
    }
    tasks[index[s]].enroll_pos.push_back(c);
  }
  if (tasks.empty()) throw Error(ErrorCode::kEmptyInput, "manifest has no enrollment clips");
  auto owned_by = [](const AudioClip& c, const std::string& s) {
    return !c.speaker_id || *c.speaker_id == s;
  };
  for (auto& t : tasks) {
    for (const auto& c : user_neg) if (owned_by(c, t.speaker_id)) t.enroll_neg.push_back(c);
    for (const auto& c : adapt) if (owned_by(c, t.speaker_id)) t.adaptation.push_back(c);
    for (const auto& c : test) {
      if (!owned_by(c, t.speaker_id)) continue;
      (c.true_label == Label::kPositive ? t.test_pos : t.test_neg).push_back(c);
    }
  }
  return tasks;
}

nlohmann::json ToJson(const ArmConfig& c) {
  nlohmann::json j = {{"tau_l", c.tau_l},
                      {"tau_h", c.tau_h},
                      {"train", ToJson(c.train)},
                      {"far_per_hour", c.far_per_hour},
                      {"store_max_pos", c.store_max_pos},
                      {"store_max_neg", c.store_max_neg},
                      {"augment_per_clip", c.augment_per_clip},
                      {"augment_snr_lo_db", c.augment_snr_lo_db},
                      {"augment_snr_hi_db", c.augment_snr_hi_db}};
  j["alpha_override"] = c.alpha_override ? nlohmann::json(*c.alpha_override) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json ToJson(const EvalResult& r) {
  nlohmann::json j = {{"speaker_id", r.speaker_id},
                      {"arm", ToString(r.arm)},
                      {"accuracy", r.accuracy},
                      {"n_pos_tested", r.n_pos_tested},
                      {"far_target_per_hour", r.far_target_per_hour},
                      {"neg_hours", r.neg_hours},
                      {"false_alarms", r.false_alarms},
                      {"alpha", r.alpha},
                      {"trained", r.trained},
                      {"margin_before", r.margin_before},
                      {"margin_after", r.margin_after}};
  // JSON has no infinity; an unbounded gamma is written as null.
  j["gamma_at_far"] = std::isfinite(r.gamma_at_far) ? nlohmann::json(r.gamma_at_far)
                                                     : nlohmann::json(nullptr);
  j["labeling"] = r.labeling ? ToJson(*r.labeling) : nlohmann::json(nullptr);
  return j;
}

namespace {

// Augmented copies of the enrollment clips, labeled by ground truth and
// reduced to their keyword (max-energy) window.
void AddAugmented(std::span<const AudioClip> source, Label label, const ArmConfig& cfg, const FrameWindow& window,
                  std::uint64_t seed, SampleStore& store) {
  double longest = 0.0;
  for (const auto& c : source) longest = std::max(longest, c.duration_s());
  const AudioClip noise = GenerateColoredNoise(longest + 2.0, 0.1, MixSeed(seed, 0xa0));
  const auto aug = AugmentSet(std::vector<AudioClip>(source.begin(), source.end()), {noise},
                              cfg.augment_per_clip, cfg.augment_snr_lo_db, cfg.augment_snr_hi_db,
                              MixSeed(seed, 0xa1));
  for (const auto& c : aug) {
    const ClipFeatures f = Featurize(c, window);
    PseudoSample s;
    s.map = f.maps.at(f.keyword_window);
    s.map.values = RoundToHalf(s.map.values);
    s.pseudo_label = label;
    s.clip_id = c.clip_id;
    s.window_start_s = s.map.window_start_s;
    s.true_label = label;
    store.Add(std::move(s));
  }
}

}  // namespace

SampleStore BuildStore(Arm arm, const Embedder& embed, const TaskFeatures& task,
                       const LabelerConfig& labeler, const ArmConfig& cfg, std::uint64_t seed,
                       LabelerStats* stats) {
  SampleStore store(cfg.store_max_pos, cfg.store_max_neg);
  switch (arm) {
    case Arm::kPretrained:
      break;
    case Arm::kSelf:
    case Arm::kOracle: {
      const LabelerStats st = RunStream(task.adaptation, embed, labeler, store,
                                        arm == Arm::kSelf ? LabelMode::kSelf : LabelMode::kOracle);
      if (stats) *stats = st;
      break;
    }
    case Arm::kAugment:
      AddAugmented(task.enroll_pos_audio, Label::kPositive, cfg, task.window, MixSeed(seed, 1), store);
      AddAugmented(task.enroll_neg_audio, Label::kNegative, cfg, task.window, MixSeed(seed, 2), store);
      break;
  }
  return store;
}

bool CanTrain(const SampleStore& store, const TrainConfig& cfg) {
  return store.positives().size() >= static_cast<std::size_t>(cfg.n_b_p) &&
         !store.negatives().empty();
}

EvalResult EvaluateTask(const Embedder& embed, const TaskFeatures& task, const LabelerConfig& cfg,
                        const ArmConfig& arm_cfg) {
  const int alpha = arm_cfg.alpha_override.value_or(cfg.alpha);
  const auto neg = ClipScores(task.test_neg, embed, cfg.prototype, alpha);
  const auto pos = ClipScores(task.test_pos, embed, cfg.prototype, alpha);
  const GammaSelection g = SelectGammaAtFar(neg, arm_cfg.far_per_hour, task.neg_hours);
  EvalResult r;
  r.speaker_id = task.speaker_id;
  r.gamma_at_far = g.gamma;
  r.false_alarms = g.alarms;
  r.accuracy = SpeakerAccuracy(pos, g.gamma);
  r.n_pos_tested = static_cast<int>(pos.size());
  r.far_target_per_hour = arm_cfg.far_per_hour;
  r.neg_hours = task.neg_hours;
  r.alpha = alpha;
  return r;
}

EvalResult RunArm(Arm arm, const EncoderState& pretrained, const TaskFeatures& task,
                  const ArmConfig& cfg, std::uint64_t seed, EncoderState* trained_out) {
  const Embedder base = MakeEmbedder(pretrained);
  const LabelerConfig pre =
      Calibrate(base, task.enroll_pos, task.enroll_neg, cfg.tau_l, cfg.tau_h, task.window);
  EncoderState enc = pretrained;
  LabelerConfig post = pre;
  bool trained = false;
  std::optional<LabelerStats> labeling;
  if (arm != Arm::kPretrained) {
    LabelerStats st;
    const SampleStore store = BuildStore(arm, base, task, pre, cfg, seed, &st);
    if (arm == Arm::kSelf || arm == Arm::kOracle) labeling = st;
    TrainConfig tc = cfg.train;
    tc.k_user = static_cast<int>(task.enroll_pos.size());
    tc.rng_seed = MixSeed(cfg.train.rng_seed, seed);
    if (CanTrain(store, tc)) {
      const auto user = KeywordMaps(task.enroll_pos);
      enc = Finetune(pretrained, store, user, tc).encoder;
      post = ReinitializeAfterTraining(MakeEmbedder(enc), task.enroll_pos, task.enroll_neg,
                                       cfg.tau_l, cfg.tau_h, task.window);
      trained = tc.epochs > 0;
    }
  }
  EvalResult r = EvaluateTask(MakeEmbedder(enc), task, post, cfg);
  r.arm = arm;
  r.trained = trained;
  r.labeling = labeling;
  r.margin_before = pre.dist_n - pre.dist_p;
  r.margin_after = post.dist_n - post.dist_p;
  if (trained_out) *trained_out = std::move(enc);
  return r;
}

std::vector<double> DefaultTauLGrid() { return {0.1, 0.2, 0.3, 0.4, 0.5}; }
std::vector<double> DefaultTauHGrid() { return {0.7, 0.8, 0.9, 1.0, 1.1}; }

std::vector<TauCell> SweepTauGrid(const EncoderState& pretrained,
                                  std::span<const TaskFeatures> tasks, const ArmConfig& base,
                                  std::span<const double> tau_ls, std::span<const double> tau_hs,
                                  std::uint64_t seed, int jobs) {
  if (tasks.empty()) throw Error(ErrorCode::kEmptyInput, "no speakers to sweep");
  const std::size_t n_cells = tau_ls.size() * tau_hs.size();
  std::vector<EvalResult> runs(n_cells * tasks.size());
  ParallelFor(runs.size(), jobs, [&](std::size_t i) {
    const std::size_t cell = i / tasks.size();
    const std::size_t t = i % tasks.size();
    ArmConfig cfg = base;
    cfg.tau_l = tau_ls[cell / tau_hs.size()];
    cfg.tau_h = tau_hs[cell % tau_hs.size()];
    runs[i] = RunArm(Arm::kSelf, pretrained, tasks[t], cfg, MixSeed(seed, t));
  });
  std::vector<TauCell> cells(n_cells);
  const double n = static_cast<double>(tasks.size());
  for (std::size_t c = 0; c < n_cells; ++c) {
    TauCell& cell = cells[c];
    cell.tau_l = tau_ls[c / tau_hs.size()];
    cell.tau_h = tau_hs[c % tau_hs.size()];
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const EvalResult& r = runs[c * tasks.size() + t];
      cell.mean_accuracy += r.accuracy / n;
      if (r.labeling) {
        cell.mean_n_pos += r.labeling->n_pos / n;
        cell.mean_n_neg += r.labeling->n_neg / n;
        cell.mean_false_pos_rate += r.labeling->false_pos_rate().value_or(0.0) / n;
        cell.mean_false_neg_rate += r.labeling->false_neg_rate().value_or(0.0) / n;
      }
    }
  }
  return cells;
}

std::string TauGridCsv(std::span<const TauCell> cells) {
  std::ostringstream out;
  out.precision(17);
  out << "tau_l,tau_h,mean_accuracy,mean_n_pos,mean_n_neg,mean_false_pos_rate,mean_false_neg_rate\n";
  for (const auto& c : cells) {
    out << c.tau_l << ',' << c.tau_h << ',' << c.mean_accuracy << ',' << c.mean_n_pos << ','
        << c.mean_n_neg << ',' << c.mean_false_pos_rate << ',' << c.mean_false_neg_rate << '\n';
  }
  return out.str();
}

std::vector<StrideCell> SweepStrideFilter(const EncoderState& pretrained,
                                          std::span<const SpeakerTask> tasks,
                                          const ArmConfig& base, std::span<const double> strides,
                                          std::span<const int> alphas, int jobs) {
  if (tasks.empty()) throw Error(ErrorCode::kEmptyInput, "no speakers to sweep");
  std::vector<StrideCell> cells;
  for (double stride : strides) {
    FrameWindow win;
    win.stride_s = stride;
    win.Validate();
    std::vector<TaskFeatures> feats(tasks.size());
    ParallelFor(tasks.size(), jobs, [&](std::size_t t) { feats[t] = FeaturizeTask(tasks[t], win); });
    double windows = 0.0, clips = 0.0;
    for (const auto& f : feats) {
      for (const auto* set : {&f.test_pos, &f.test_neg}) {
        for (const auto& c : *set) {
          windows += static_cast<double>(c.maps.size());
          clips += 1.0;
        }
      }
    }
    for (int alpha : alphas) {
      ArmConfig cfg = base;
      cfg.alpha_override = alpha;
      std::vector<double> acc(feats.size());
      ParallelFor(feats.size(), jobs, [&](std::size_t t) {
        acc[t] = RunArm(Arm::kPretrained, pretrained, feats[t], cfg, 0).accuracy;
      });
      StrideCell cell;
      cell.stride_s = stride;
      cell.alpha = alpha;
      cell.mean_accuracy = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
      cell.mean_windows_per_clip = clips > 0.0 ? windows / clips : 0.0;
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string StrideGridCsv(std::span<const StrideCell> cells) {
  std::ostringstream out;
  out.precision(17);
  out << "stride_s,alpha,mean_accuracy,mean_windows_per_clip\n";
  for (const auto& c : cells) {
    out << c.stride_s << ',' << c.alpha << ',' << c.mean_accuracy << ',' << c.mean_windows_per_clip
        << '\n';
  }
  return out.str();
}

std::string ResultsCsv(std::span<const EvalResult> results) {
  std::ostringstream out;
  out.precision(17);
  out << "speaker_id,arm,gamma_at_far,accuracy,n_pos_tested,far_target_per_hour,neg_hours,"
         "false_alarms,alpha,trained,n_pos,n_neg,n_abstain,false_pos_rate,false_neg_rate\n";
  auto opt = [](std::optional<double> v) {
    std::ostringstream s;
    s.precision(17);
    if (v) s << *v;
    return s.str();
  };
  for (const auto& r : results) {
    out << r.speaker_id << ',' << ToString(r.arm) << ',' << r.gamma_at_far << ',' << r.accuracy
        << ',' << r.n_pos_tested << ',' << r.far_target_per_hour << ',' << r.neg_hours << ','
        << r.false_alarms << ',' << r.alpha << ',' << (r.trained ? 1 : 0) << ',';
    if (r.labeling) {
      out << r.labeling->n_pos << ',' << r.labeling->n_neg << ',' << r.labeling->n_abstain << ','
          << opt(r.labeling->false_pos_rate()) << ',' << opt(r.labeling->false_neg_rate());
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json SummaryJson(std::span<const EvalResult> results) {
  std::map<std::string, std::vector<const EvalResult*>> by_arm;
  std::vector<std::string> order;
  for (const auto& r : results) {
    const std::string a(ToString(r.arm));
    if (!by_arm.count(a)) order.push_back(a);
    by_arm[a].push_back(&r);
  }
  auto mean_std = [](const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::pair<double, double>{mean, v.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0};
  };
  nlohmann::json out = nlohmann::json::object();
  for (const auto& a : order) {
    std::vector<double> acc, fp, fn;
    for (const auto* r : by_arm[a]) {
      acc.push_back(r->accuracy);
      if (r->labeling) {
        if (auto v = r->labeling->false_pos_rate()) fp.push_back(*v);
        if (auto v = r->labeling->false_neg_rate()) fn.push_back(*v);
      }
    }
    const auto [m, s] = mean_std(acc);
    nlohmann::json j = {{"n_speakers", acc.size()}, {"mean_accuracy", m}, {"std_accuracy", s}};
    if (!fp.empty()) j["mean_false_pos_rate"] = mean_std(fp).first;
    if (!fn.empty()) j["mean_false_neg_rate"] = mean_std(fn).first;
    out[a] = j;
  }
  return out;
}

}  // namespace skws
