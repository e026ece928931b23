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

#ifndef SKWS_TRAINER_HPP_
#define SKWS_TRAINER_HPP_

#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "skws/calibrate.hpp"
#include "skws/encoder.hpp"
#include "skws/labeler.hpp"
#include "skws/rng.hpp"

namespace skws {

struct TrainConfig {
  int n_b_p = 20;
  int n_b_n = 120;
  int k_user = 3;
  int epochs = 20;
  double lr = 1e-3;
  double margin = 0.5;
  std::uint64_t rng_seed = 0;
  Precision precision = Precision::kF32;

  static TrainConfig Public() { return {}; }
  static TrainConfig Recorded() { return {10, 60, 3, 8, 1e-3, 0.5}; }
  static TrainConfig ForProfile(std::string_view name);

  int batch_size() const { return n_b_p + n_b_n + k_user; }
  void Validate() const;
};

nlohmann::json ToJson(const TrainConfig& c);
/// Fields missing from `j` keep the values of `base`.
TrainConfig TrainConfigFromJson(const nlohmann::json& j, TrainConfig base = {});

/// Indices into a batch's embedding list.
struct Triplet {
  int anchor;
  int positive;
  int negative;
};

/// Batch layout: pseudo-positives, then pseudo-negatives, then user samples.
struct TripletBatch {
  std::vector<MfccMatrix> maps;
  int n_p = 0;
  int n_n = 0;
  int k = 0;
  std::vector<Triplet> triplets;

  std::size_t size() const { return maps.size(); }
};

/// Every (pseudo-positive, user sample, pseudo-negative) combination.
std::vector<Triplet> EnumerateTriplets(int n_p, int n_n, int k);

template <typename Scalar>
struct TripletLossResult {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  double loss = 0.0;
  std::vector<Vector> grads;  // dloss/dz for every embedding
  int n_active = 0;
};

/// Mean over `triplets` of max(d(a,p) - d(a,n) + margin, 0). With
/// `mean_over_active`, the mean runs over the non-zero terms only. The
/// distance gradient is taken as zero below 1e-12.
template <typename Scalar>
TripletLossResult<Scalar> TripletLoss(
    std::span<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> embs,
    std::span<const Triplet> triplets, double margin, bool mean_over_active = false) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  TripletLossResult<Scalar> r;
  r.grads.assign(embs.size(), Vector::Zero(embs.empty() ? 0 : embs[0].size()));
  if (triplets.empty()) return r;
  std::vector<std::size_t> active;
  std::vector<Vector> ga, gn;
  double sum = 0.0;
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    const auto& tr = triplets[t];
    const Vector dap = embs[tr.anchor] - embs[tr.positive];
    const Vector dan = embs[tr.anchor] - embs[tr.negative];
    const double d_ap = std::sqrt(static_cast<double>(dap.squaredNorm()));
    const double d_an = std::sqrt(static_cast<double>(dan.squaredNorm()));
    const double term = d_ap - d_an + margin;
    if (term <= 0.0) continue;
    sum += term;
    active.push_back(t);
    ga.push_back(d_ap < 1e-12 ? Vector::Zero(dap.size()) : Vector(dap / static_cast<Scalar>(d_ap)));
    gn.push_back(d_an < 1e-12 ? Vector::Zero(dan.size()) : Vector(dan / static_cast<Scalar>(d_an)));
  }
  r.n_active = static_cast<int>(active.size());
  const double denom = mean_over_active ? static_cast<double>(std::max<std::size_t>(active.size(), 1))
                                        : static_cast<double>(triplets.size());
  r.loss = sum / denom;
  const Scalar w = static_cast<Scalar>(1.0 / denom);
  for (std::size_t i = 0; i < active.size(); ++i) {
    const auto& tr = triplets[active[i]];
    r.grads[tr.anchor] += w * (ga[i] - gn[i]);
    r.grads[tr.positive] -= w * ga[i];
    r.grads[tr.negative] += w * gn[i];
  }
  return r;
}

/// Shuffles the pseudo-positives into full groups of n_b_p and pairs each with
/// n_b_n pseudo-negatives and the k user samples.
std::vector<TripletBatch> AssembleEpoch(const SampleStore& store,
                                        std::span<const MfccMatrix> user_pos,
                                        const TrainConfig& cfg, Rng& rng);

class Adam {
 public:
  Adam(Eigen::Index n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void Step(Eigen::VectorXf& w, const Eigen::VectorXf& grad);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  int n_batches = 0;
  double wall_time_s = 0.0;
};

nlohmann::json ToJson(const EpochLog& e);

struct TrainResult {
  EncoderState encoder;
  std::vector<EpochLog> log;
};

/// Incremental training on the store. Runs cfg.epochs epochs with a fresh
/// optimizer and returns the last weights. Writes one JSON line per epoch to
/// `log` if given.
TrainResult Finetune(const EncoderState& enc, const SampleStore& store,
                     std::span<const MfccMatrix> user_pos, const TrainConfig& cfg,
                     std::ostream* log = nullptr);

struct PretrainConfig {
  int epochs = 30;
  int classes_per_batch = 6;
  int samples_per_class = 8;
  double lr = 1e-3;
  double margin = 0.5;
  /// Windows around the keyword window drawn as shift augmentation.
  int window_jitter = 1;
  std::uint64_t rng_seed = 0;

  void Validate() const;
};

nlohmann::json ToJson(const PretrainConfig& c);
PretrainConfig PretrainConfigFromJson(const nlohmann::json& j, PretrainConfig base = {});

/// Class-balanced batch-all triplet training on labeled multi-class clips.
TrainResult Pretrain(const EncoderState& enc, std::span<const ClipFeatures> corpus,
                     const PretrainConfig& cfg, std::ostream* log = nullptr);

/// Recomputes prototype and calibration with the trained encoder.
LabelerConfig ReinitializeAfterTraining(const Embedder& embed,
                                        std::span<const ClipFeatures> user_pos,
                                        std::span<const ClipFeatures> user_neg, double tau_l,
                                        double tau_h, const FrameWindow& window);

/// Keyword-window maps of the enrollment clips.
std::vector<MfccMatrix> KeywordMaps(std::span<const ClipFeatures> clips);

}  // namespace skws

#endif  // SKWS_TRAINER_HPP_
