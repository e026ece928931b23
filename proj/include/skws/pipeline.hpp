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

#ifndef SKWS_PIPELINE_HPP_
#define SKWS_PIPELINE_HPP_

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "skws/evaluate.hpp"

namespace skws {

struct RunConfig {
  /// Pretrained encoder; when absent the encoder is pretrained on the
  /// synthetic corpus and saved in the output directory.
  std::optional<std::filesystem::path> checkpoint;
  std::string arch = "tiny";
  /// Speaker data from a manifest; when absent the synthetic corpus is used.
  std::optional<std::filesystem::path> manifest;
  SynthSpec synth;
  TaskSplit split;
  PretrainConfig pretrain;
  double tau_l = 0.4;
  double tau_h = 0.9;
  FrameWindow window;
  std::string profile = "public";
  TrainConfig train = TrainConfig::Public();
  double far_per_hour = 0.5;
  std::optional<int> alpha_override;
  std::size_t store_max_pos = SampleStore::kDefaultMaxPos;
  std::size_t store_max_neg = SampleStore::kDefaultMaxNeg;
  int augment_per_clip = 30;
  std::vector<Arm> arms{Arm::kPretrained, Arm::kSelf, Arm::kOracle, Arm::kAugment};
  std::uint64_t rng_seed = 0;
  std::filesystem::path out_dir = "skws_run";
  int jobs = 1;

  void Validate() const;
  ArmConfig arm_config() const;
};

nlohmann::json ToJson(const SynthSpec& s);
SynthSpec SynthSpecFromJson(const nlohmann::json& j, SynthSpec base = {});
nlohmann::json ToJson(const TaskSplit& s);
TaskSplit TaskSplitFromJson(const nlohmann::json& j, TaskSplit base = {});

nlohmann::json ToJson(const RunConfig& c);
/// Missing keys keep their defaults. A "profile" key selects the training
/// profile before any explicit "train" overrides apply.
RunConfig RunConfigFromJson(const nlohmann::json& j);
RunConfig LoadRunConfig(const std::filesystem::path& path);

struct RunReport {
  nlohmann::json json;   // deterministic; no timings or absolute paths
  std::string summary;   // human-readable digest of `json`
};

/// pretrain (if needed) -> per speaker and arm: calibrate -> label -> train ->
/// re-initialize -> evaluate. Every phase persists its artifact under out_dir
/// and is skipped when that artifact already exists. Errors carry the phase
/// name.
RunReport RunPipeline(const RunConfig& cfg, std::ostream* progress = nullptr);

}  // namespace skws

#endif  // SKWS_PIPELINE_HPP_
