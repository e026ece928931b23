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

// skws: command-line front end for the self-learning keyword-spotting library.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "skws/arch.hpp"
#include "skws/calibrate.hpp"
#include "skws/checkpoint.hpp"
#include "skws/common.hpp"
#include "skws/corpus.hpp"
#include "skws/evaluate.hpp"
#include "skws/labeler.hpp"
#include "skws/pipeline.hpp"
#include "skws/quantize.hpp"
#include "skws/resources.hpp"
#include "skws/rng.hpp"
#include "skws/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace skws;

namespace {

// Values shared by the subcommands. `--options file.json` preloads them (keys
// are the long flag names with '-' replaced by '_'); explicit flags win.
struct Flags {
  std::string arch = "tiny";
  std::string checkpoint;
  std::string manifest;
  std::string config;
  std::string store;
  std::string speaker;
  std::string out;
  std::string pretrain_list;
  std::string labeler_out;
  std::string sweep = "none";
  std::vector<std::string> arms{"pretrained"};
  double tau_l = 0.4;
  double tau_h = 0.9;
  double stride = 0.125;
  int alpha = 0;
  int epochs = -1;
  std::string profile = "public";
  double far_per_hour = 0.5;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool oracle = false;
  bool quantized = false;
  bool as_json = false;
  double activity = 0.1;
  int maps = 400;
  int batch = 0;
  json extra = json::object();  // nested sections (synth, pretrain, split, train)
};

void LoadOptions(const std::string& path, Flags& f) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "missing file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  try {
    f.arch = j.value("arch", f.arch);
    f.checkpoint = j.value("checkpoint", f.checkpoint);
    f.manifest = j.value("manifest", f.manifest);
    f.config = j.value("config", f.config);
    f.store = j.value("store", f.store);
    f.speaker = j.value("speaker", f.speaker);
    f.out = j.value("out", f.out);
    f.pretrain_list = j.value("pretrain_list", f.pretrain_list);
    f.labeler_out = j.value("labeler_out", f.labeler_out);
    f.sweep = j.value("sweep", f.sweep);
    if (j.contains("arms")) f.arms = j["arms"].get<std::vector<std::string>>();
    f.tau_l = j.value("tau_l", f.tau_l);
    f.tau_h = j.value("tau_h", f.tau_h);
    f.stride = j.value("stride", f.stride);
    f.alpha = j.value("alpha", f.alpha);
    f.epochs = j.value("epochs", f.epochs);
    f.profile = j.value("profile", f.profile);
    f.far_per_hour = j.value("far_per_hour", f.far_per_hour);
    if (j.contains("seed")) f.seed = j["seed"].get<std::uint64_t>();
    f.jobs = j.value("jobs", f.jobs);
    f.oracle = j.value("oracle", f.oracle);
    f.quantized = j.value("quantized", f.quantized);
    f.as_json = j.value("json", f.as_json);
    f.activity = j.value("activity", f.activity);
    f.maps = j.value("maps", f.maps);
    f.batch = j.value("batch", f.batch);
    for (const char* key : {"synth", "pretrain", "split", "train"}) {
      if (j.contains(key)) f.extra[key] = j[key];
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
}

std::uint64_t RequireSeed(const Flags& f) {
  if (!f.seed) throw Error(ErrorCode::kInvalidArgument, "--seed is required for this command");
  return *f.seed;
}

std::string RequirePath(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::kInvalidArgument, std::string(flag) + " is required");
  return value;
}

FrameWindow WindowOf(const Flags& f) {
  FrameWindow w;
  w.stride_s = f.stride;
  w.Validate();
  return w;
}

void PrintJson(const json& j) { std::cout << j.dump(2) << '\n'; }

void Warn(const std::string& clip_id, const std::string& reason) {
  std::cerr << json{{"warning", reason}, {"clip_id", clip_id}}.dump() << '\n';
}

std::vector<SpeakerTask> ManifestTasks(const Flags& f) {
  const fs::path path = RequirePath(f.manifest, "--manifest");
  return TasksFromManifest(LoadManifest(path), path.parent_path());
}

SpeakerTask PickSpeaker(const Flags& f) {
  auto tasks = ManifestTasks(f);
  if (f.speaker.empty()) return tasks.front();
  for (auto& t : tasks) {
    if (t.speaker_id == f.speaker) return t;
  }
  throw Error(ErrorCode::kInvalidArgument, "speaker '" + f.speaker + "' not in manifest");
}

EncoderState LoadEncoder(const Flags& f) {
  return LoadCheckpoint(RequirePath(f.checkpoint, "--checkpoint"));
}

Embedder EmbedderFor(const EncoderState& enc, const Flags& f,
                     std::span<const ClipFeatures> calib_source) {
  if (!f.quantized) return MakeEmbedder(enc);
  // Post-training quantization calibrated on 4 maps, as on the device.
  std::vector<MfccMatrix> maps;
  for (const auto& c : calib_source) {
    if (maps.size() == 4) break;
    if (!c.maps.empty()) maps.push_back(c.maps[c.keyword_window].values);
  }
  return MakeEmbedder(QuantizePtq(enc, maps));
}

// ---------------------------------------------------------------------------

int CmdSynth(const Flags& f) {
  const std::uint64_t seed = RequireSeed(f);
  const fs::path out = RequirePath(f.out, "--out");
  SynthSpec spec = f.extra.contains("synth") ? SynthSpecFromJson(f.extra["synth"]) : SynthSpec{};
  spec.rng_seed = MixSeed(seed, 0x5c0, spec.rng_seed);
  const SyntheticCorpus corpus = GenerateSyntheticCorpus(spec);
  TaskSplit split = f.extra.contains("split") ? TaskSplitFromJson(f.extra["split"]) : TaskSplit{};
  split.rng_seed = MixSeed(seed, 0x5b1, split.rng_seed);
  const auto tasks = TasksFromSynthetic(corpus, split);

  fs::create_directories(out / "audio");
  fs::create_directories(out / "pretrain");
  {
    std::ofstream list(out / "pretrain.jsonl");
    for (const auto& c : corpus.pretrain) {
      const std::string rel = "pretrain/" + c.clip_id + ".wav";
      WriteWav(c, out / rel);
      list << json{{"path", rel}, {"class_index", *c.class_index}}.dump() << '\n';
    }
  }
  Manifest m;
  std::set<std::string> written;
  auto add = [&](const AudioClip& c, Split split_kind, const std::string& speaker) {
    const std::string rel = "audio/" + c.clip_id + ".wav";
    if (!written.insert(rel).second) return;
    WriteWav(c, out / rel);
    m.entries.push_back({rel, *c.true_label, speaker, split_kind});
  };
  for (const auto& t : tasks) {
    for (const auto& c : t.enroll_pos) add(c, Split::kUserEnroll, t.speaker_id);
    for (const auto& c : t.enroll_neg) add(c, Split::kUserNeg, t.speaker_id);
    for (const auto& c : t.adaptation) {
      add(c, Split::kAdaptation, c.true_label == Label::kPositive ? t.speaker_id : "");
    }
    for (const auto& c : t.test_pos) add(c, Split::kTest, t.speaker_id);
    for (const auto& c : t.test_neg) add(c, Split::kTest, "");
  }
  SaveManifest(m, out / "manifest.jsonl");
  PrintJson({{"manifest", (out / "manifest.jsonl").string()},
             {"pretrain_list", (out / "pretrain.jsonl").string()},
             {"n_pretrain", corpus.pretrain.size()},
             {"n_entries", m.entries.size()},
             {"n_speakers", tasks.size()}});
  return 0;
}

std::vector<AudioClip> ReadPretrainList(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "missing file: " + path.string());
  std::vector<AudioClip> clips;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      fs::path p = j.at("path").get<std::string>();
      if (p.is_relative()) p = path.parent_path() / p;
      AudioClip c = ReadWav(p);
      c.clip_id = j["path"].get<std::string>();
      c.class_index = j.at("class_index").get<int>();
      clips.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
    }
  }
  return clips;
}

int CmdPretrain(const Flags& f) {
  const std::uint64_t seed = RequireSeed(f);
  const fs::path out = RequirePath(f.out, "--out");
  std::vector<AudioClip> clips;
  if (!f.pretrain_list.empty()) {
    clips = ReadPretrainList(f.pretrain_list);
  } else {
    SynthSpec spec = f.extra.contains("synth") ? SynthSpecFromJson(f.extra["synth"]) : SynthSpec{};
    spec.rng_seed = MixSeed(seed, 0x5c0, spec.rng_seed);
    clips = GenerateSyntheticCorpus(spec).pretrain;
  }
  PretrainConfig pc =
      f.extra.contains("pretrain") ? PretrainConfigFromJson(f.extra["pretrain"]) : PretrainConfig{};
  if (f.epochs >= 0) pc.epochs = f.epochs;
  pc.rng_seed = MixSeed(seed, 0x9e, pc.rng_seed);
  const auto feats = FeaturizeAll(clips, WindowOf(f));
  const EncoderState init = EncoderState::Initialized(ArchByName(f.arch), MixSeed(seed, 0x1417));
  std::ofstream log(fs::path(out).replace_extension(".log.jsonl"));
  const TrainResult r = Pretrain(init, feats, pc, &log);
  SaveCheckpoint(r.encoder, out);
  PrintJson({{"checkpoint", out.string()},
             {"arch", f.arch},
             {"epochs", pc.epochs},
             {"final_loss", r.log.empty() ? json(nullptr) : json(r.log.back().mean_loss)}});
  return 0;
}

int CmdCalibrate(const Flags& f) {
  const fs::path out = RequirePath(f.out, "--out");
  const EncoderState enc = LoadEncoder(f);
  const SpeakerTask task = PickSpeaker(f);
  const FrameWindow win = WindowOf(f);
  const auto pos = FeaturizeAll(task.enroll_pos, win);
  const auto neg = FeaturizeAll(task.enroll_neg, win);
  std::vector<ClipFeatures> calib(pos.begin(), pos.end());
  calib.insert(calib.end(), neg.begin(), neg.end());
  const LabelerConfig cfg = Calibrate(EmbedderFor(enc, f, calib), pos, neg, f.tau_l, f.tau_h, win);
  SaveLabelerConfig(cfg, out);
  PrintJson({{"config", out.string()},
             {"speaker_id", task.speaker_id},
             {"alpha", cfg.alpha},
             {"th_l", cfg.th_l},
             {"th_h", cfg.th_h},
             {"dist_p", cfg.dist_p},
             {"dist_n", cfg.dist_n},
             {"degenerate_margin", cfg.degenerate_margin}});
  return 0;
}

int CmdLabel(const Flags& f) {
  const fs::path store_dir = RequirePath(f.store, "--store");
  const EncoderState enc = LoadEncoder(f);
  const LabelerConfig cfg = LoadLabelerConfig(RequirePath(f.config, "--config"));
  const SpeakerTask task = PickSpeaker(f);
  const auto calib = FeaturizeAll(task.enroll_pos, cfg.window);
  SampleStore store;
  const LabelerStats st = RunStream(task.adaptation, EmbedderFor(enc, f, calib), cfg, store,
                                    f.oracle ? LabelMode::kOracle : LabelMode::kSelf, Warn);
  store.Save(store_dir);
  json j = ToJson(st);
  j["store"] = store_dir.string();
  j["speaker_id"] = task.speaker_id;
  PrintJson(j);
  return 0;
}

TrainConfig TrainConfigOf(const Flags& f) {
  TrainConfig tc = TrainConfig::ForProfile(f.profile);
  if (f.extra.contains("train")) tc = TrainConfigFromJson(f.extra["train"], tc);
  if (f.epochs >= 0) tc.epochs = f.epochs;
  return tc;
}

int CmdTrain(const Flags& f) {
  const std::uint64_t seed = RequireSeed(f);
  const fs::path out = RequirePath(f.out, "--out");
  const EncoderState enc = LoadEncoder(f);
  const SampleStore store = SampleStore::Load(RequirePath(f.store, "--store"));
  const SpeakerTask task = PickSpeaker(f);
  const FrameWindow win = WindowOf(f);
  const auto pos = FeaturizeAll(task.enroll_pos, win);
  const auto neg = FeaturizeAll(task.enroll_neg, win);
  TrainConfig tc = TrainConfigOf(f);
  tc.k_user = static_cast<int>(pos.size());
  tc.rng_seed = seed;
  std::ofstream log(fs::path(out).replace_extension(".log.jsonl"));
  const TrainResult r = Finetune(enc, store, KeywordMaps(pos), tc, &log);
  SaveCheckpoint(r.encoder, out);
  const LabelerConfig cfg =
      ReinitializeAfterTraining(MakeEmbedder(r.encoder), pos, neg, f.tau_l, f.tau_h, win);
  const fs::path labeler_out =
      f.labeler_out.empty() ? fs::path(out).replace_extension(".labeler.json") : fs::path(f.labeler_out);
  SaveLabelerConfig(cfg, labeler_out);
  PrintJson({{"checkpoint", out.string()},
             {"labeler_config", labeler_out.string()},
             {"epochs", tc.epochs},
             {"final_loss", r.log.empty() ? json(nullptr) : json(r.log.back().mean_loss)},
             {"alpha", cfg.alpha}});
  return 0;
}

void WriteFile(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

int CmdEval(const Flags& f) {
  const EncoderState enc = LoadEncoder(f);
  const FrameWindow win = WindowOf(f);
  ArmConfig acfg;
  acfg.tau_l = f.tau_l;
  acfg.tau_h = f.tau_h;
  acfg.train = TrainConfigOf(f);
  acfg.far_per_hour = f.far_per_hour;
  if (f.alpha > 0) acfg.alpha_override = f.alpha;
  const fs::path out = f.out.empty() ? fs::path("eval_out") : fs::path(f.out);
  auto tasks = ManifestTasks(f);
  if (!f.speaker.empty()) {
    std::erase_if(tasks, [&](const SpeakerTask& t) { return t.speaker_id != f.speaker; });
    if (tasks.empty()) throw Error(ErrorCode::kInvalidArgument, "speaker not in manifest");
  }
  json summary;
  if (f.sweep == "stride") {
    const std::vector<double> strides{0.0625, 0.125, 0.25, 0.5};
    const std::vector<int> alphas{1, 2, 3};
    const auto cells = SweepStrideFilter(enc, tasks, acfg, strides, alphas, f.jobs);
    WriteFile(out / "stride_alpha.csv", StrideGridCsv(cells));
    summary = {{"sweep", "stride"}, {"csv", (out / "stride_alpha.csv").string()}, {"cells", cells.size()}};
  } else {
    std::vector<TaskFeatures> feats;
    for (const auto& t : tasks) feats.push_back(FeaturizeTask(t, win));
    if (f.sweep == "tau") {
      const std::uint64_t seed = RequireSeed(f);
      const auto tl = DefaultTauLGrid();
      const auto th = DefaultTauHGrid();
      const auto cells = SweepTauGrid(enc, feats, acfg, tl, th, seed, f.jobs);
      WriteFile(out / "tau_grid.csv", TauGridCsv(cells));
      summary = {{"sweep", "tau"}, {"csv", (out / "tau_grid.csv").string()}, {"cells", cells.size()}};
    } else if (f.sweep == "none") {
      std::vector<EvalResult> results;
      for (std::size_t t = 0; t < feats.size(); ++t) {
        for (const auto& name : f.arms) {
          const Arm arm = ParseArm(name);
          if (arm == Arm::kPretrained && !f.config.empty()) {
            // Evaluate a given calibration as-is.
            EvalResult r = EvaluateTask(MakeEmbedder(enc), feats[t], LoadLabelerConfig(f.config), acfg);
            r.arm = arm;
            results.push_back(r);
            continue;
          }
          const std::uint64_t seed = arm == Arm::kPretrained ? 0 : RequireSeed(f);
          results.push_back(RunArm(arm, enc, feats[t], acfg, MixSeed(seed, t)));
        }
      }
      WriteFile(out / "results.csv", ResultsCsv(results));
      summary = SummaryJson(results);
      WriteFile(out / "summary.json", summary.dump(2) + "\n");
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown sweep '" + f.sweep + "'");
    }
  }
  PrintJson(summary);
  return 0;
}

std::string EstimateText(const json& r) {
  char buf[512];
  std::string s;
  std::snprintf(buf, sizeof(buf),
                "%s: %zu params, %.3g MMAC/inference\n"
                "  mem weights+grads  %.2f MiB\n"
                "  mem data           %.2f MiB (%d maps, raw/MFCC %.1fx)\n"
                "  mem activations    %.2f MiB (batch %d)\n",
                r["arch"].get<std::string>().c_str(), r["param_count"].get<std::size_t>(),
                r["mac_count"].get<double>() / 1e6, r["mem_weights_grads_mib"].get<double>(),
                r["mem_data_mib"].get<double>(), r["stored_maps"].get<int>(),
                r["raw_to_mfcc_storage_ratio"].get<double>(),
                r["mem_activations_mib"].get<double>(), r["batch_size"].get<int>());
  s += buf;
  if (r.contains("e_train_j")) {
    std::snprintf(buf, sizeof(buf),
                  "  training energy    %.1f J per run\n"
                  "  labeling power     %.2f mW%s\n"
                  "  10x crossover      %.2f s per sample\n"
                  "  power with sleep   %.3f mW at %.0f%% activity\n"
                  "  battery lifetime   %.1f days (%.2f months)\n",
                  r["e_train_j"].get<double>(), r["p_label_mw"].get<double>(),
                  r["constants_inferred"].get<bool>() ? " (inferred)" : "",
                  r["crossover_interval_10x_s"].get<double>(),
                  r["avg_power_with_sleep_mw"].get<double>(),
                  100.0 * r["activity_fraction"].get<double>(),
                  r["battery_lifetime_days"].get<double>(),
                  r["battery_lifetime_months"].get<double>());
    s += buf;
  }
  if (r.contains("duty_cycle")) {
    std::snprintf(buf, sizeof(buf), "  labeling duty      %.1f%% (%.1f ms per %.0f ms stride)\n",
                  100.0 * r["duty_cycle"].get<double>(), r["t_active_ms"].get<double>(),
                  r["stride_ms"].get<double>());
    s += buf;
  }
  return s;
}

int CmdEstimate(const Flags& f, bool all_archs) {
  const PlatformConstants platform = PlatformConstants::Defaults();
  std::vector<std::string> archs;
  if (all_archs) {
    for (const auto& name : ArchNames()) {
      if (platform.per_arch.count(name)) archs.push_back(name);
    }
  } else {
    archs.push_back(f.arch);
  }
  json reports = json::array();
  std::string text;
  for (const auto& name : archs) {
    const ArchDescriptor arch = ArchByName(name);
    // Default batch: the recorded-data profile that runs on the device.
    const int batch = f.batch > 0 ? f.batch : TrainConfig::Recorded().batch_size();
    json r = EstimateReport(arch, platform, f.maps, batch, f.activity);
    if (platform.per_arch.count(name)) {
      const DutyReport d = SimulateDutyCycle(WindowOf(f), name, platform);
      r["duty_cycle"] = d.duty;
      r["t_active_ms"] = d.t_active_ms;
      r["stride_ms"] = d.stride_ms;
    }
    text += EstimateText(r);
    reports.push_back(r);
  }
  if (!f.out.empty()) {
    const fs::path out = f.out;
    WriteFile(out / "estimate.json", reports.dump(2) + "\n");
    WriteFile(out / "estimate.txt", text);
    std::vector<std::string> with_energy;
    for (const auto& a : archs) {
      if (platform.per_arch.count(a)) with_energy.push_back(a);
    }
    if (!with_energy.empty()) {
      std::vector<double> intervals;
      for (double t = 1.0; t <= 1000.0; t *= 1.25) intervals.push_back(t);
      WriteFile(out / "energy_tradeoff.csv", EnergyTradeoffCsv(with_energy, platform, intervals));
    }
  }
  if (f.as_json) {
    PrintJson(all_archs ? reports : reports[0]);
  } else {
    std::cout << text;
  }
  return 0;
}

int CmdPipeline(const Flags& f, const std::map<std::string, bool>& given) {
  RunConfig rc = f.config.empty() ? RunConfig{} : LoadRunConfig(f.config);
  auto set = [&](const char* name) { return given.count(name) && given.at(name); };
  if (set("arch")) rc.arch = f.arch;
  if (set("checkpoint")) rc.checkpoint = f.checkpoint;
  if (set("manifest")) rc.manifest = f.manifest;
  if (set("tau-l")) rc.tau_l = f.tau_l;
  if (set("tau-h")) rc.tau_h = f.tau_h;
  if (set("stride")) rc.window.stride_s = f.stride;
  if (set("alpha")) rc.alpha_override = f.alpha;
  if (set("profile")) {
    rc.profile = f.profile;
    rc.train = TrainConfig::ForProfile(f.profile);
  }
  if (set("epochs")) rc.train.epochs = f.epochs;
  if (set("far-per-hour")) rc.far_per_hour = f.far_per_hour;
  if (f.seed) rc.rng_seed = *f.seed;
  if (set("jobs")) rc.jobs = f.jobs;
  if (set("out")) rc.out_dir = f.out;
  if (set("arms")) {
    rc.arms.clear();
    for (const auto& a : f.arms) rc.arms.push_back(ParseArm(a));
  }
  if (f.config.empty() && !f.seed) RequireSeed(f);
  const RunReport report = RunPipeline(rc, &std::cerr);
  std::cout << report.summary;
  std::cout << "report: " << (rc.out_dir / "report.json").string() << '\n';
  return 0;
}

void ErrorJson(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
}

// Returns the --options path if present, so it can be applied before parsing.
std::string ScanOptionsPath(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--options" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--options=", 0) == 0) return a.substr(10);
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  Flags f;
  try {
    if (const std::string opts = ScanOptionsPath(argc, argv); !opts.empty()) LoadOptions(opts, f);
  } catch (const Error& e) {
    ErrorJson(std::string(ToString(e.code())), e.what());
    return 2;
  }

  CLI::App app{"Self-learning personalized keyword spotting"};
  app.require_subcommand(1);
  std::string options_path;
  std::optional<std::uint64_t> seed_flag;
  std::map<std::string, CLI::Option*> opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--options", options_path, "JSON file with defaults for any flag");
  };
  auto arch = [&](CLI::App* s) {
    opts["arch"] = s->add_option("--arch", f.arch, "Encoder architecture")
                       ->check(CLI::IsMember(ArchNames()));
  };
  auto checkpoint = [&](CLI::App* s) { opts["checkpoint"] = s->add_option("--checkpoint", f.checkpoint, "Encoder checkpoint"); };
  auto manifest = [&](CLI::App* s) { opts["manifest"] = s->add_option("--manifest", f.manifest, "JSON-lines manifest"); };
  auto speaker = [&](CLI::App* s) { s->add_option("--speaker", f.speaker, "Speaker id (default: first)"); };
  auto taus = [&](CLI::App* s) {
    opts["tau-l"] = s->add_option("--tau-l", f.tau_l, "Low threshold parameter");
    opts["tau-h"] = s->add_option("--tau-h", f.tau_h, "High threshold parameter");
  };
  auto stride = [&](CLI::App* s) { opts["stride"] = s->add_option("--stride", f.stride, "Window stride in seconds"); };
  auto seed = [&](CLI::App* s) { s->add_option("--seed", seed_flag, "Master random seed"); };
  auto out = [&](CLI::App* s, const char* what) { opts["out"] = s->add_option("--out", f.out, what); };
  auto epochs = [&](CLI::App* s) { opts["epochs"] = s->add_option("--epochs", f.epochs, "Training epochs"); };
  auto profile = [&](CLI::App* s) {
    opts["profile"] = s->add_option("--profile", f.profile, "Batch profile")
                          ->check(CLI::IsMember({"public", "recorded"}));
  };
  auto jobs = [&](CLI::App* s) { opts["jobs"] = s->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber); };
  auto far = [&](CLI::App* s) { opts["far-per-hour"] = s->add_option("--far-per-hour", f.far_per_hour, "False alarms per hour"); };
  auto alpha = [&](CLI::App* s) { opts["alpha"] = s->add_option("--alpha", f.alpha, "Override filter length")->check(CLI::Range(1, 5)); };

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic corpus and manifest");
  add_common(synth); seed(synth); out(synth, "Output directory");

  CLI::App* pretrain = app.add_subcommand("pretrain", "Triplet pretraining of an encoder");
  add_common(pretrain); arch(pretrain); seed(pretrain); epochs(pretrain); stride(pretrain);
  out(pretrain, "Checkpoint to write");
  pretrain->add_option("--pretrain-list", f.pretrain_list, "JSON lines {path, class_index}");

  CLI::App* calibrate = app.add_subcommand("calibrate", "Enroll a prototype and calibrate thresholds");
  add_common(calibrate); checkpoint(calibrate); manifest(calibrate); speaker(calibrate);
  taus(calibrate); stride(calibrate); out(calibrate, "Labeler config to write");
  calibrate->add_flag("--quantized", f.quantized, "Use the int8 encoder");

  CLI::App* label = app.add_subcommand("label", "Pseudo-label a speaker's adaptation stream");
  add_common(label); checkpoint(label); manifest(label); speaker(label);
  label->add_option("--config", f.config, "Labeler config");
  label->add_option("--store", f.store, "Sample store directory to write");
  label->add_flag("--oracle", f.oracle, "Use ground-truth labels");
  label->add_flag("--quantized", f.quantized, "Use the int8 encoder");

  CLI::App* train = app.add_subcommand("train", "Fine-tune on a sample store and re-initialize");
  add_common(train); checkpoint(train); manifest(train); speaker(train); taus(train);
  stride(train); profile(train); epochs(train); seed(train); out(train, "Checkpoint to write");
  train->add_option("--store", f.store, "Sample store directory");
  train->add_option("--labeler-out", f.labeler_out, "Re-initialized labeler config");

  CLI::App* eval = app.add_subcommand("eval", "FAR-calibrated accuracy, arms and sweeps");
  add_common(eval); checkpoint(eval); manifest(eval); speaker(eval); taus(eval); stride(eval);
  profile(eval); epochs(eval); far(eval); alpha(eval); seed(eval); jobs(eval);
  out(eval, "Output directory");
  eval->add_option("--config", f.config, "Labeler config for the pretrained arm");
  eval->add_option("--arms", f.arms, "Arms to run")->delimiter(',');
  eval->add_option("--sweep", f.sweep, "none | tau | stride")
      ->check(CLI::IsMember({"none", "tau", "stride"}));

  CLI::App* estimate = app.add_subcommand("estimate", "Memory, energy and battery estimates");
  add_common(estimate); arch(estimate); stride(estimate); out(estimate, "Output directory");
  bool all_archs = false;
  estimate->add_flag("--all", all_archs, "Every architecture with platform constants");
  estimate->add_flag("--json", f.as_json, "Print JSON instead of text");
  estimate->add_option("--activity", f.activity, "Active fraction for sleep-mode power")
      ->check(CLI::Range(0.0, 1.0));
  estimate->add_option("--maps", f.maps, "Stored MFCC maps");
  estimate->add_option("--batch", f.batch, "Training batch size");

  CLI::App* pipeline = app.add_subcommand("pipeline", "Calibrate, label, train and evaluate end to end");
  add_common(pipeline); arch(pipeline); checkpoint(pipeline); manifest(pipeline); taus(pipeline);
  stride(pipeline); alpha(pipeline); epochs(pipeline); profile(pipeline); far(pipeline);
  seed(pipeline); jobs(pipeline); out(pipeline, "Run directory");
  pipeline->add_option("--config", f.config, "Run config JSON");
  opts["arms"] = pipeline->add_option("--arms", f.arms, "Arms to run")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    ErrorJson("usage", e.what());
    return 2;
  }
  if (seed_flag) f.seed = seed_flag;
  std::map<std::string, bool> given;
  for (const auto& [name, opt] : opts) given[name] = opt->count() > 0;

  try {
    if (*synth) return CmdSynth(f);
    if (*pretrain) return CmdPretrain(f);
    if (*calibrate) return CmdCalibrate(f);
    if (*label) return CmdLabel(f);
    if (*train) return CmdTrain(f);
    if (*eval) return CmdEval(f);
    if (*estimate) return CmdEstimate(f, all_archs);
    if (*pipeline) return CmdPipeline(f, given);
  } catch (const Error& e) {
    ErrorJson(std::string(ToString(e.code())), e.what());
    return 1;
  } catch (const std::exception& e) {
    ErrorJson("internal", e.what());
    return 1;
  }
  return 0;
}
