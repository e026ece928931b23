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

#include "skws/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace skws {

using nlohmann::json;

void LabelerConfig::Validate() const {
  window.Validate();
  if (alpha < 1 || alpha > kMaxAlpha) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be in {1..5}");
  }
  if (!(tau_l < tau_h)) throw Error(ErrorCode::kInvalidArgument, "tau_l must be < tau_h");
  if (prototype.vector.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty prototype");
}

json ToJson(const LabelerConfig& cfg) {
  return {{"prototype", std::vector<float>(cfg.prototype.vector.data(),
                                           cfg.prototype.vector.data() +
                                               cfg.prototype.vector.size())},
          {"class_id", cfg.prototype.class_id},
          {"k_used", cfg.prototype.k_used},
          {"alpha", cfg.alpha},
          {"tau_l", cfg.tau_l},
          {"tau_h", cfg.tau_h},
          {"th_l", cfg.th_l},
          {"th_h", cfg.th_h},
          {"dist_p", cfg.dist_p},
          {"dist_n", cfg.dist_n},
          {"stride_s", cfg.window.stride_s},
          {"margins", cfg.margins},
          {"degenerate_margin", cfg.degenerate_margin}};
}

LabelerConfig LabelerConfigFromJson(const json& j) {
  try {
    LabelerConfig cfg;
    const auto proto = j.at("prototype").get<std::vector<float>>();
    cfg.prototype.vector = Eigen::Map<const Embedding>(proto.data(),
                                                       static_cast<Eigen::Index>(proto.size()));
    cfg.prototype.class_id = j.value("class_id", std::string("keyword"));
    cfg.prototype.k_used = j.value("k_used", 0);
    cfg.alpha = j.at("alpha").get<int>();
    cfg.tau_l = j.at("tau_l").get<double>();
    cfg.tau_h = j.at("tau_h").get<double>();
    cfg.th_l = j.at("th_l").get<double>();
    cfg.th_h = j.at("th_h").get<double>();
    cfg.dist_p = j.at("dist_p").get<double>();
    cfg.dist_n = j.at("dist_n").get<double>();
    cfg.window.stride_s = j.at("stride_s").get<double>();
    if (j.contains("margins")) cfg.margins = j["margins"].get<std::array<double, kMaxAlpha>>();
    cfg.degenerate_margin = j.value("degenerate_margin", false);
    cfg.Validate();
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("labeler config: ") + e.what());
  }
}

void SaveLabelerConfig(const LabelerConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << ToJson(cfg).dump(2) << '\n';
}

LabelerConfig LoadLabelerConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "missing file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("labeler config: ") + e.what());
  }
  return LabelerConfigFromJson(j);
}

std::vector<double> RawDistances(std::span<const Embedding> window_embs, const Embedding& proto) {
  std::vector<double> d;
  d.reserve(window_embs.size());
  for (const auto& e : window_embs) d.push_back(Euclidean(e, proto));
  return d;
}

std::vector<Embedding> EmbedWindows(const ClipFeatures& clip, const Embedder& embed) {
  std::vector<Embedding> out;
  out.reserve(clip.maps.size());
  for (const auto& m : clip.maps) out.push_back(embed(m.values));
  return out;
}

std::vector<double> FilteredDistances(std::span<const double> raw, int alpha) {
  if (alpha < 1) throw Error(ErrorCode::kInvalidArgument, "filter length must be >= 1");
  std::vector<double> out(raw.size());
  for (std::size_t t = 0; t < raw.size(); ++t) {
    const std::size_t n = std::min(t + 1, static_cast<std::size_t>(alpha));
    double s = 0.0;
    for (std::size_t k = t + 1 - n; k <= t; ++k) s += raw[k];
    out[t] = s / static_cast<double>(n);
  }
  return out;
}

ClipScore MinScore(std::span<const double> filtered) {
  if (filtered.empty()) throw Error(ErrorCode::kEmptyInput, "empty distance sequence");
  const auto it = std::min_element(filtered.begin(), filtered.end());
  return {*it, static_cast<std::size_t>(it - filtered.begin())};
}

std::vector<double> FilteredDistanceSequence(const AudioClip& clip, const Embedder& embed,
                                             const Prototype& proto, int alpha,
                                             const FrameWindow& window) {
  const ClipFeatures f = Featurize(clip, window);
  const auto embs = EmbedWindows(f, embed);
  return FilteredDistances(RawDistances(embs, proto.vector), alpha);
}

double ClipScoreOf(const AudioClip& clip, const Embedder& embed, const Prototype& proto,
                   int alpha, const FrameWindow& window) {
  return MinScore(FilteredDistanceSequence(clip, embed, proto, alpha, window)).score;
}

int SelectAlpha(std::span<const double> margins) {
  if (margins.empty()) throw Error(ErrorCode::kEmptyInput, "no candidate margins");
  return static_cast<int>(std::max_element(margins.begin(), margins.end()) - margins.begin()) + 1;
}

Prototype EnrollPrototype(std::span<const ClipFeatures> user_pos, const Embedder& embed,
                          std::string class_id) {
  std::vector<Embedding> embs;
  for (const auto& c : user_pos) embs.push_back(embed(c.maps.at(c.keyword_window).values));
  return ComputePrototype(embs, std::move(class_id));
}

LabelerConfig Calibrate(const Embedder& embed, std::span<const ClipFeatures> user_pos,
                        std::span<const ClipFeatures> user_neg, double tau_l, double tau_h,
                        const FrameWindow& window) {
  if (user_pos.empty() || user_neg.empty()) {
    throw Error(ErrorCode::kEmptyInput, "calibration needs K >= 1 positive and negative clips");
  }
  if (!(tau_l < tau_h)) throw Error(ErrorCode::kInvalidArgument, "tau_l must be < tau_h");
  for (const auto* set : {&user_pos, &user_neg}) {
    for (const auto& c : *set) {
      if (c.maps.empty()) {
        throw Error(ErrorCode::kClipTooShort, "calibration clip '" + c.clip_id + "' < 1 s");
      }
    }
  }
  LabelerConfig cfg;
  cfg.window = window;
  cfg.tau_l = tau_l;
  cfg.tau_h = tau_h;
  cfg.prototype = EnrollPrototype(user_pos, embed);

  auto raw_of = [&](std::span<const ClipFeatures> clips) {
    std::vector<std::vector<double>> raw;
    for (const auto& c : clips) raw.push_back(RawDistances(EmbedWindows(c, embed), cfg.prototype.vector));
    return raw;
  };
  const auto raw_p = raw_of(user_pos);
  const auto raw_n = raw_of(user_neg);
  auto mean_score = [](const std::vector<std::vector<double>>& raw, int alpha) {
    double s = 0.0;
    for (const auto& r : raw) s += MinScore(FilteredDistances(r, alpha)).score;
    return s / static_cast<double>(raw.size());
  };
  std::array<double, kMaxAlpha> dp{}, dn{};
  for (int a = 1; a <= kMaxAlpha; ++a) {
    dp[a - 1] = mean_score(raw_p, a);
    dn[a - 1] = mean_score(raw_n, a);
    cfg.margins[a - 1] = dn[a - 1] - dp[a - 1];
  }
  cfg.alpha = SelectAlpha(cfg.margins);
  cfg.dist_p = dp[cfg.alpha - 1];
  cfg.dist_n = dn[cfg.alpha - 1];
  cfg.degenerate_margin = !(cfg.dist_n > cfg.dist_p);
  cfg.th_l = Threshold(cfg.dist_p, cfg.dist_n, tau_l);
  cfg.th_h = Threshold(cfg.dist_p, cfg.dist_n, tau_h);
  return cfg;
}

LabelerConfig Calibrate(const Embedder& embed, std::span<const AudioClip> user_pos,
                        std::span<const AudioClip> user_neg, double tau_l, double tau_h,
                        const FrameWindow& window) {
  for (const auto* set : {&user_pos, &user_neg}) {
    for (const auto& c : *set) {
      if (c.samples.size() < static_cast<std::size_t>(kWindowSamples)) {
        throw Error(ErrorCode::kClipTooShort, "calibration clip '" + c.clip_id + "' < 1 s");
      }
    }
  }
  const auto pos = FeaturizeAll(user_pos, window);
  const auto neg = FeaturizeAll(user_neg, window);
  return Calibrate(embed, pos, neg, tau_l, tau_h, window);
}

}  // namespace skws
