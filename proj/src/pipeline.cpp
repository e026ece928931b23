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

#include "skws/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "skws/checkpoint.hpp"
#include "skws/common.hpp"
#include "skws/parallel.hpp"
#include "skws/resources.hpp"
#include "skws/rng.hpp"

namespace skws {

namespace fs = std::filesystem;
using nlohmann::json;

json ToJson(const SynthSpec& s) {
  return {{"n_pretrain_classes", s.n_pretrain_classes},
          {"n_clips_per_class", s.n_clips_per_class},
          {"keyword_pattern_seed", s.keyword_pattern_seed},
          {"noise_floor_db", s.noise_floor_db},
          {"clip_duration_range_s", {s.clip_duration_range_s.first, s.clip_duration_range_s.second}},
          {"rng_seed", s.rng_seed},
          {"n_target_speakers", s.n_target_speakers},
          {"n_target_clips_per_speaker", s.n_target_clips_per_speaker},
          {"n_negative_clips", s.n_negative_clips},
          {"confuser_fraction", s.confuser_fraction},
          {"speaker_spread", s.speaker_spread},
          {"n_units", s.n_units}};
}

SynthSpec SynthSpecFromJson(const json& j, SynthSpec s) {
  try {
    s.n_pretrain_classes = j.value("n_pretrain_classes", s.n_pretrain_classes);
    s.n_clips_per_class = j.value("n_clips_per_class", s.n_clips_per_class);
    s.keyword_pattern_seed = j.value("keyword_pattern_seed", s.keyword_pattern_seed);
    s.noise_floor_db = j.value("noise_floor_db", s.noise_floor_db);
    if (j.contains("clip_duration_range_s")) {
      const auto& r = j["clip_duration_range_s"];
      s.clip_duration_range_s = {r.at(0).get<double>(), r.at(1).get<double>()};
    }
    s.rng_seed = j.value("rng_seed", s.rng_seed);
    s.n_target_speakers = j.value("n_target_speakers", s.n_target_speakers);
    s.n_target_clips_per_speaker = j.value("n_target_clips_per_speaker", s.n_target_clips_per_speaker);
    s.n_negative_clips = j.value("n_negative_clips", s.n_negative_clips);
    s.confuser_fraction = j.value("confuser_fraction", s.confuser_fraction);
    s.speaker_spread = j.value("speaker_spread", s.speaker_spread);
    s.n_units = j.value("n_units", s.n_units);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("synth spec: ") + e.what());
  }
  ValidateSynthSpec(s);
  return s;
}

json ToJson(const TaskSplit& s) {
  return {{"k_enroll", s.k_enroll},
          {"adapt_pos_fraction", s.adapt_pos_fraction},
          {"adapt_neg_fraction", s.adapt_neg_fraction},
          {"rng_seed", s.rng_seed}};
}

TaskSplit TaskSplitFromJson(const json& j, TaskSplit s) {
  try {
    s.k_enroll = j.value("k_enroll", s.k_enroll);
    s.adapt_pos_fraction = j.value("adapt_pos_fraction", s.adapt_pos_fraction);
    s.adapt_neg_fraction = j.value("adapt_neg_fraction", s.adapt_neg_fraction);
    s.rng_seed = j.value("rng_seed", s.rng_seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("task split: ") + e.what());
  }
  return s;
}

void RunConfig::Validate() const {
  ArchByName(arch);
  if (!(tau_l < tau_h)) throw Error(ErrorCode::kInvalidArgument, "tau_l must be < tau_h");
  window.Validate();
  train.Validate();
  pretrain.Validate();
  ValidateSynthSpec(synth);
  if (!(far_per_hour >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "far_per_hour must be >= 0");
  if (alpha_override && (*alpha_override < 1 || *alpha_override > kMaxAlpha)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be in 1..5");
  }
  if (arms.empty()) throw Error(ErrorCode::kInvalidArgument, "no arms selected");
  if (jobs < 1) throw Error(ErrorCode::kInvalidArgument, "jobs must be >= 1");
  if (store_max_pos == 0 || store_max_neg == 0) {
    throw Error(ErrorCode::kInvalidArgument, "store capacities must be >= 1");
  }
  if (checkpoint && !fs::exists(*checkpoint)) {
    throw Error(ErrorCode::kMissingFile, "missing file: " + checkpoint->string());
  }
  if (manifest && !fs::exists(*manifest)) {
    throw Error(ErrorCode::kMissingFile, "missing file: " + manifest->string());
  }
}

ArmConfig RunConfig::arm_config() const {
  ArmConfig a;
  a.tau_l = tau_l;
  a.tau_h = tau_h;
  a.train = train;
  a.far_per_hour = far_per_hour;
  a.store_max_pos = store_max_pos;
  a.store_max_neg = store_max_neg;
  a.augment_per_clip = augment_per_clip;
  a.alpha_override = alpha_override;
  return a;
}

json ToJson(const RunConfig& c) {
  json arms = json::array();
  for (Arm a : c.arms) arms.push_back(ToString(a));
  json j = {{"arch", c.arch},
            {"synth", ToJson(c.synth)},
            {"split", ToJson(c.split)},
            {"pretrain", ToJson(c.pretrain)},
            {"tau_l", c.tau_l},
            {"tau_h", c.tau_h},
            {"stride", c.window.stride_s},
            {"profile", c.profile},
            {"train", ToJson(c.train)},
            {"far_per_hour", c.far_per_hour},
            {"store_max_pos", c.store_max_pos},
            {"store_max_neg", c.store_max_neg},
            {"augment_per_clip", c.augment_per_clip},
            {"arms", arms},
            {"seed", c.rng_seed},
            {"out", c.out_dir.string()},
            {"jobs", c.jobs}};
  j["checkpoint"] = c.checkpoint ? json(c.checkpoint->string()) : json(nullptr);
  j["manifest"] = c.manifest ? json(c.manifest->string()) : json(nullptr);
  j["alpha"] = c.alpha_override ? json(*c.alpha_override) : json(nullptr);
  return j;
}

RunConfig RunConfigFromJson(const json& j) {
  RunConfig c;
  try {
    if (j.contains("checkpoint") && !j["checkpoint"].is_null()) {
      c.checkpoint = j["checkpoint"].get<std::string>();
    }
    if (j.contains("manifest") && !j["manifest"].is_null()) {
      c.manifest = j["manifest"].get<std::string>();
    }
    c.arch = j.value("arch", c.arch);
    if (j.contains("synth")) c.synth = SynthSpecFromJson(j["synth"]);
    if (j.contains("split")) c.split = TaskSplitFromJson(j["split"]);
    if (j.contains("pretrain")) c.pretrain = PretrainConfigFromJson(j["pretrain"]);
    c.tau_l = j.value("tau_l", c.tau_l);
    c.tau_h = j.value("tau_h", c.tau_h);
    c.window.stride_s = j.value("stride", c.window.stride_s);
    c.profile = j.value("profile", c.profile);
    c.train = TrainConfig::ForProfile(c.profile);
    if (j.contains("train")) c.train = TrainConfigFromJson(j["train"], c.train);
    if (j.contains("epochs")) c.train.epochs = j["epochs"].get<int>();
    c.far_per_hour = j.value("far_per_hour", c.far_per_hour);
    if (j.contains("alpha") && !j["alpha"].is_null()) c.alpha_override = j["alpha"].get<int>();
    c.store_max_pos = j.value("store_max_pos", c.store_max_pos);
    c.store_max_neg = j.value("store_max_neg", c.store_max_neg);
    c.augment_per_clip = j.value("augment_per_clip", c.augment_per_clip);
    if (j.contains("arms")) {
      c.arms.clear();
      for (const auto& a : j["arms"]) c.arms.push_back(ParseArm(a.get<std::string>()));
    }
    c.rng_seed = j.value("seed", c.rng_seed);
    c.out_dir = j.value("out", c.out_dir.string());
    c.jobs = j.value("jobs", c.jobs);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig LoadRunConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "missing file: " + path.string());
  try {
    return RunConfigFromJson(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

namespace {

template <typename F>
auto InPhase(const std::string& phase, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), "[" + phase + "] " + e.what());
  }
}

void WriteText(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

json ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "missing file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

LabelerStats StatsFromJson(const json& j) {
  LabelerStats s;
  s.n_pos = j.at("n_pos");
  s.n_neg = j.at("n_neg");
  s.n_abstain = j.at("n_abstain");
  s.n_skipped = j.at("n_skipped");
  s.n_false_pos = j.at("n_false_pos");
  s.n_false_neg = j.at("n_false_neg");
  s.n_pos_with_truth = j.at("n_pos_with_truth");
  s.n_neg_with_truth = j.at("n_neg_with_truth");
  return s;
}

json StatsToJson(const LabelerStats& s) {
  return {{"n_pos", s.n_pos},
          {"n_neg", s.n_neg},
          {"n_abstain", s.n_abstain},
          {"n_skipped", s.n_skipped},
          {"n_false_pos", s.n_false_pos},
          {"n_false_neg", s.n_false_neg},
          {"n_pos_with_truth", s.n_pos_with_truth},
          {"n_neg_with_truth", s.n_neg_with_truth}};
}

std::string DirName(const std::string& id) {
  std::string out;
  for (char ch : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_';
    out += ok ? ch : '_';
  }
  return out.empty() ? "default" : out;
}

json CalibrationSummary(const LabelerConfig& c) {
  return {{"alpha", c.alpha},       {"th_l", c.th_l},     {"th_h", c.th_h},
          {"dist_p", c.dist_p},     {"dist_n", c.dist_n}, {"degenerate_margin", c.degenerate_margin}};
}

SyntheticCorpus MakeCorpus(const RunConfig& cfg) {
  SynthSpec spec = cfg.synth;
  spec.rng_seed = MixSeed(cfg.rng_seed, 0x5c0, cfg.synth.rng_seed);
  return GenerateSyntheticCorpus(spec);
}

EncoderState PretrainedEncoder(const RunConfig& cfg, std::ostream* progress) {
  if (cfg.checkpoint) {
    return InPhase("load", [&] { return LoadCheckpoint(*cfg.checkpoint, cfg.arch); });
  }
  const fs::path path = cfg.out_dir / "pretrained.ckpt";
  if (fs::exists(path)) {
    return InPhase("load", [&] { return LoadCheckpoint(path, cfg.arch); });
  }
  return InPhase("pretrain", [&] {
    if (progress) *progress << "pretraining " << cfg.arch << '\n';
    const SyntheticCorpus corpus = MakeCorpus(cfg);
    const auto feats = FeaturizeAll(corpus.pretrain, cfg.window);
    const EncoderState init = EncoderState::Initialized(ArchByName(cfg.arch), MixSeed(cfg.rng_seed, 0x1417));
    PretrainConfig pc = cfg.pretrain;
    pc.rng_seed = MixSeed(cfg.rng_seed, 0x9e, cfg.pretrain.rng_seed);
    fs::create_directories(cfg.out_dir);
    std::ofstream log(cfg.out_dir / "pretrain_log.jsonl");
    TrainResult r = Pretrain(init, feats, pc, &log);
    SaveCheckpoint(r.encoder, path);
    return r.encoder;
  });
}

std::vector<SpeakerTask> LoadTasks(const RunConfig& cfg) {
  return InPhase("data", [&] {
    if (cfg.manifest) {
      const Manifest m = LoadManifest(*cfg.manifest, cfg.split.k_enroll);
      return TasksFromManifest(m, cfg.manifest->parent_path());
    }
    TaskSplit split = cfg.split;
    split.rng_seed = MixSeed(cfg.rng_seed, 0x5b1, cfg.split.rng_seed);
    return TasksFromSynthetic(MakeCorpus(cfg), split);
  });
}

// One speaker and arm, with every phase cached on disk.
EvalResult RunCachedArm(Arm arm, const EncoderState& pretrained, const TaskFeatures& task,
                        const LabelerConfig& pre, const ArmConfig& acfg, std::uint64_t seed,
                        const fs::path& dir) {
  const std::string tag = task.speaker_id + "/" + std::string(ToString(arm));
  EncoderState enc = pretrained;
  LabelerConfig post = pre;
  bool trained = false;
  std::optional<LabelerStats> labeling;
  if (arm != Arm::kPretrained) {
    const Embedder base = MakeEmbedder(pretrained);
    const fs::path store_dir = dir / "store";
    SampleStore store = InPhase("label " + tag, [&] {
      if (fs::exists(store_dir / "index.json")) {
        if (arm != Arm::kAugment) labeling = StatsFromJson(ReadJson(dir / "labeling.json"));
        return SampleStore::Load(store_dir);
      }
      LabelerStats st;
      SampleStore s = BuildStore(arm, base, task, pre, acfg, seed, &st);
      if (arm != Arm::kAugment) {
        labeling = st;
        WriteText(dir / "labeling.json", StatsToJson(st).dump(2) + "\n");
      }
      s.Save(store_dir);
      return s;
    });
    TrainConfig tc = acfg.train;
    tc.k_user = static_cast<int>(task.enroll_pos.size());
    tc.rng_seed = MixSeed(acfg.train.rng_seed, seed);
    if (CanTrain(store, tc)) {
      const fs::path ckpt = dir / "model.ckpt";
      enc = InPhase("train " + tag, [&] {
        if (fs::exists(ckpt)) return LoadCheckpoint(ckpt, pretrained.arch().name);
        std::ofstream log(dir / "train_log.jsonl");
        EncoderState e = Finetune(pretrained, store, KeywordMaps(task.enroll_pos), tc, &log).encoder;
        SaveCheckpoint(e, ckpt);
        return e;
      });
      const fs::path post_path = dir / "labeler_post.json";
      post = InPhase("reinitialize " + tag, [&] {
        if (fs::exists(post_path)) return LoadLabelerConfig(post_path);
        LabelerConfig c = ReinitializeAfterTraining(MakeEmbedder(enc), task.enroll_pos,
                                                    task.enroll_neg, acfg.tau_l, acfg.tau_h,
                                                    task.window);
        SaveLabelerConfig(c, post_path);
        return c;
      });
      trained = tc.epochs > 0;
    }
  }
  EvalResult r = InPhase("evaluate " + tag, [&] {
    return EvaluateTask(MakeEmbedder(enc), task, post, acfg);
  });
  r.arm = arm;
  r.trained = trained;
  r.labeling = labeling;
  r.margin_before = pre.dist_n - pre.dist_p;
  r.margin_after = post.dist_n - post.dist_p;
  WriteText(dir / "result.json", ToJson(r).dump(2) + "\n");
  return r;
}

std::string Summarize(const json& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(1);
  out << "arch " << report["arch"]["name"].get<std::string>() << ", "
      << report["speakers"].size() << " speaker(s), FAR target "
      << report["config"]["far_per_hour"].get<double>() << "/h\n";
  for (const auto& [arm, s] : report["summary"].items()) {
    out << "  " << arm << ": accuracy " << 100.0 * s["mean_accuracy"].get<double>() << "% +- "
        << 100.0 * s["std_accuracy"].get<double>() << "%";
    if (s.contains("mean_false_pos_rate")) {
      out << ", pseudo-label error pos " << 100.0 * s["mean_false_pos_rate"].get<double>()
          << "% neg " << 100.0 * s.value("mean_false_neg_rate", 0.0) << "%";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

RunReport RunPipeline(const RunConfig& cfg, std::ostream* progress) {
  InPhase("config", [&] { cfg.Validate(); });
  fs::create_directories(cfg.out_dir);
  WriteText(cfg.out_dir / "config.json", ToJson(cfg).dump(2) + "\n");

  const EncoderState pretrained = PretrainedEncoder(cfg, progress);
  const std::vector<SpeakerTask> tasks = LoadTasks(cfg);
  const ArmConfig acfg = cfg.arm_config();

  const std::size_t n_arms = cfg.arms.size();
  std::vector<TaskFeatures> feats(tasks.size());
  std::vector<LabelerConfig> pre(tasks.size());
  ParallelFor(tasks.size(), cfg.jobs, [&](std::size_t s) {
    feats[s] = InPhase("featurize " + tasks[s].speaker_id,
                       [&] { return FeaturizeTask(tasks[s], cfg.window); });
    const fs::path path = cfg.out_dir / "speakers" / DirName(tasks[s].speaker_id) / "labeler_pre.json";
    pre[s] = InPhase("calibrate " + tasks[s].speaker_id, [&] {
      if (fs::exists(path)) return LoadLabelerConfig(path);
      LabelerConfig c = Calibrate(MakeEmbedder(pretrained), feats[s].enroll_pos,
                                  feats[s].enroll_neg, cfg.tau_l, cfg.tau_h, cfg.window);
      fs::create_directories(path.parent_path());
      SaveLabelerConfig(c, path);
      return c;
    });
  });

  std::vector<EvalResult> results(tasks.size() * n_arms);
  ParallelFor(results.size(), cfg.jobs, [&](std::size_t i) {
    const std::size_t s = i / n_arms;
    const Arm arm = cfg.arms[i % n_arms];
    if (progress) *progress << "speaker " + tasks[s].speaker_id + " arm " + std::string(ToString(arm)) + "\n";
    const fs::path dir =
        cfg.out_dir / "speakers" / DirName(tasks[s].speaker_id) / std::string(ToString(arm));
    fs::create_directories(dir);
    const std::uint64_t seed = MixSeed(cfg.rng_seed, s, static_cast<std::uint64_t>(arm));
    results[i] = RunCachedArm(arm, pretrained, feats[s], pre[s], acfg, seed, dir);
  });

  json config = ToJson(cfg);
  config.erase("out");
  config.erase("jobs");
  json report = {{"config", config},
                 {"arch",
                  {{"name", pretrained.arch().name},
                   {"param_count", pretrained.arch().param_count},
                   {"mac_count", pretrained.arch().mac_count},
                   {"embedding_dim", pretrained.arch().embedding_dim}}},
                 {"encoder_source", cfg.checkpoint ? "checkpoint" : "synthetic_pretraining"},
                 {"speakers", json::array()}};
  for (std::size_t s = 0; s < tasks.size(); ++s) {
    json arms = json::array();
    for (std::size_t a = 0; a < n_arms; ++a) arms.push_back(ToJson(results[s * n_arms + a]));
    report["speakers"].push_back({{"speaker_id", tasks[s].speaker_id},
                                  {"n_adaptation", feats[s].adaptation.size()},
                                  {"n_test_pos", feats[s].test_pos.size()},
                                  {"n_test_neg", feats[s].test_neg.size()},
                                  {"calibration", CalibrationSummary(pre[s])},
                                  {"arms", arms}});
  }
  report["summary"] = SummaryJson(results);

  RunReport out;
  out.json = std::move(report);
  out.summary = Summarize(out.json);
  WriteText(cfg.out_dir / "results.csv", ResultsCsv(results));
  WriteText(cfg.out_dir / "summary.json", out.json["summary"].dump(2) + "\n");
  WriteText(cfg.out_dir / "report.json", out.json.dump(2) + "\n");
  WriteText(cfg.out_dir / "report.txt", out.summary);
  return out;
}

}  // namespace skws
