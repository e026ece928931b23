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

#include "skws/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>

#include "skws/common.hpp"

namespace skws {

TrainConfig TrainConfig::ForProfile(std::string_view name) {
  if (name == "public") return Public();
  if (name == "recorded") return Recorded();
  throw Error(ErrorCode::kInvalidArgument, "unknown training profile '" + std::string(name) + "'");
}

void TrainConfig::Validate() const {
  if (n_b_p < 1) throw Error(ErrorCode::kInvalidArgument, "n_b_p must be >= 1");
  if (n_b_n < 1) throw Error(ErrorCode::kInvalidArgument, "n_b_n must be >= 1");
  if (k_user < 1) throw Error(ErrorCode::kInvalidArgument, "k_user must be >= 1");
  if (epochs < 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 0");
  if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lr must be > 0");
  if (!(margin > 0.0)) throw Error(ErrorCode::kInvalidArgument, "margin must be > 0");
}

nlohmann::json ToJson(const TrainConfig& c) {
  return {{"n_b_p", c.n_b_p},   {"n_b_n", c.n_b_n}, {"k_user", c.k_user},
          {"epochs", c.epochs}, {"lr", c.lr},       {"margin", c.margin},
          {"rng_seed", c.rng_seed}, {"precision", ToString(c.precision)}};
}

TrainConfig TrainConfigFromJson(const nlohmann::json& j, TrainConfig c) {
  try {
    if (j.contains("profile")) {
      const auto seed = c.rng_seed;
      c = TrainConfig::ForProfile(j["profile"].get<std::string>());
      c.rng_seed = seed;
    }
    c.n_b_p = j.value("n_b_p", c.n_b_p);
    c.n_b_n = j.value("n_b_n", c.n_b_n);
    c.k_user = j.value("k_user", c.k_user);
    c.epochs = j.value("epochs", c.epochs);
    c.lr = j.value("lr", c.lr);
    c.margin = j.value("margin", c.margin);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    if (j.contains("precision")) c.precision = ParsePrecision(j["precision"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("train config: ") + e.what());
  }
  c.Validate();
  return c;
}

std::vector<Triplet> EnumerateTriplets(int n_p, int n_n, int k) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(n_p) * k * n_n);
  for (int p = 0; p < n_p; ++p) {
    for (int u = 0; u < k; ++u) {
      for (int n = 0; n < n_n; ++n) t.push_back({p, n_p + n_n + u, n_p + n});
    }
  }
  return t;
}

std::vector<TripletBatch> AssembleEpoch(const SampleStore& store,
                                        std::span<const MfccMatrix> user_pos,
                                        const TrainConfig& cfg, Rng& rng) {
  cfg.Validate();
  const auto& pos = store.positives();
  const auto& neg = store.negatives();
  if (pos.size() < static_cast<std::size_t>(cfg.n_b_p)) {
    throw Error(ErrorCode::kInsufficientPositives,
                "training needs >= " + std::to_string(cfg.n_b_p) + " pseudo-positives, store has " +
                    std::to_string(pos.size()));
  }
  if (neg.empty()) throw Error(ErrorCode::kEmptyInput, "store has no pseudo-negatives");
  if (user_pos.size() != static_cast<std::size_t>(cfg.k_user)) {
    throw Error(ErrorCode::kInvalidArgument, "expected " + std::to_string(cfg.k_user) +
                                                 " user samples, got " +
                                                 std::to_string(user_pos.size()));
  }
  std::vector<std::size_t> order(pos.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());

  const bool enough_neg = neg.size() >= static_cast<std::size_t>(cfg.n_b_n);
  std::vector<std::size_t> pool(neg.size());
  std::iota(pool.begin(), pool.end(), 0);
  std::size_t cursor = pool.size();  // forces a shuffle on first use

  const std::size_t n_groups = pos.size() / cfg.n_b_p;
  const auto triplets = EnumerateTriplets(cfg.n_b_p, cfg.n_b_n, cfg.k_user);
  std::vector<TripletBatch> batches(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    TripletBatch& b = batches[g];
    b.n_p = cfg.n_b_p;
    b.n_n = cfg.n_b_n;
    b.k = cfg.k_user;
    b.maps.reserve(b.n_p + b.n_n + b.k);
    for (int i = 0; i < cfg.n_b_p; ++i) b.maps.push_back(pos[order[g * cfg.n_b_p + i]].map.values);
    for (int i = 0; i < cfg.n_b_n; ++i) {
      std::size_t idx;
      if (enough_neg) {
        // A batch never straddles a reshuffle, so it holds no duplicates.
        if (i == 0 && cursor + cfg.n_b_n > pool.size()) cursor = pool.size();
        if (cursor >= pool.size()) {
          std::shuffle(pool.begin(), pool.end(), rng.engine());
          cursor = 0;
        }
        idx = pool[cursor++];
      } else {
        idx = static_cast<std::size_t>(rng.UniformInt(0, static_cast<int>(neg.size()) - 1));
      }
      b.maps.push_back(neg[idx].map.values);
    }
    for (const auto& u : user_pos) b.maps.push_back(u);
    b.triplets = triplets;
  }
  return batches;
}

Adam::Adam(Eigen::Index n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

void Adam::Step(Eigen::VectorXf& w, const Eigen::VectorXf& grad) {
  if (grad.size() != m_.size() || w.size() != m_.size()) {
    throw Error(ErrorCode::kDimMismatch, "optimizer state size mismatch");
  }
  ++t_;
  const Eigen::VectorXd g = grad.cast<double>();
  m_ = beta1_ * m_ + (1.0 - beta1_) * g;
  v_ = beta2_ * v_ + (1.0 - beta2_) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const Eigen::VectorXd step =
      lr_ * (m_ / c1).array() / ((v_ / c2).array().sqrt() + eps_);
  w -= step.cast<float>();
}

nlohmann::json ToJson(const EpochLog& e) {
  return {{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"n_batches", e.n_batches},
          {"wall_time_s", e.wall_time_s}};
}

namespace {

using Clock = std::chrono::steady_clock;

// One optimizer step on a batch; returns the loss.
double TrainStep(EncoderState& enc, Eigen::VectorXf& master, Adam& opt,
                 std::span<const MfccMatrix> maps, std::span<const Triplet> triplets,
                 double margin, bool mean_over_active, int epoch, std::size_t batch) {
  const auto pass = ForwardTraining(enc, maps);
  const auto res = TripletLoss<float>(pass.embeddings, triplets, margin, mean_over_active);
  if (!std::isfinite(res.loss)) {
    throw Error(ErrorCode::kNonFinite, "non-finite loss at epoch " + std::to_string(epoch) +
                                           ", batch " + std::to_string(batch));
  }
  const Eigen::VectorXf g = Backward(enc, pass.tape, std::span<const Eigen::VectorXf>(res.grads));
  if (!g.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "non-finite gradient at epoch " + std::to_string(epoch) +
                                           ", batch " + std::to_string(batch));
  }
  opt.Step(master, g);
  enc.set_weights(master);
  return res.loss;
}

void EmitLog(std::ostream* log, const EpochLog& e) {
  if (log) *log << ToJson(e).dump() << '\n';
}

}  // namespace

TrainResult Finetune(const EncoderState& enc, const SampleStore& store,
                     std::span<const MfccMatrix> user_pos, const TrainConfig& cfg,
                     std::ostream* log) {
  cfg.Validate();
  Rng rng(MixSeed(cfg.rng_seed, 0x5e1f));
  // Surface an infeasible store even when no epoch will run.
  if (store.positives().size() < static_cast<std::size_t>(cfg.n_b_p)) {
    Rng probe(0);
    AssembleEpoch(store, user_pos, cfg, probe);
  }
  TrainResult out;
  out.encoder = enc;
  if (cfg.epochs == 0) return out;
  if (out.encoder.precision() != cfg.precision) {
    EncoderState converted(enc.arch(), cfg.precision);
    converted.set_weights(enc.weights());
    converted.set_seed(enc.seed());
    out.encoder = std::move(converted);
  }
  Eigen::VectorXf master = out.encoder.weights();
  Adam opt(master.size(), cfg.lr);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    const auto batches = AssembleEpoch(store, user_pos, cfg, rng);
    double sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      sum += TrainStep(out.encoder, master, opt, batches[b].maps, batches[b].triplets,
                       cfg.margin, false, epoch, b);
    }
    EpochLog e{epoch, sum / static_cast<double>(batches.size()),
               static_cast<int>(batches.size()),
               std::chrono::duration<double>(Clock::now() - t0).count()};
    EmitLog(log, e);
    out.log.push_back(e);
  }
  return out;
}

void PretrainConfig::Validate() const {
  if (epochs < 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 0");
  if (classes_per_batch < 2) throw Error(ErrorCode::kInvalidArgument, "classes_per_batch must be >= 2");
  if (samples_per_class < 2) throw Error(ErrorCode::kInvalidArgument, "samples_per_class must be >= 2");
  if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lr must be > 0");
  if (!(margin > 0.0)) throw Error(ErrorCode::kInvalidArgument, "margin must be > 0");
  if (window_jitter < 0) throw Error(ErrorCode::kInvalidArgument, "window_jitter must be >= 0");
}

nlohmann::json ToJson(const PretrainConfig& c) {
  return {{"epochs", c.epochs},
          {"classes_per_batch", c.classes_per_batch},
          {"samples_per_class", c.samples_per_class},
          {"lr", c.lr},
          {"margin", c.margin},
          {"window_jitter", c.window_jitter},
          {"rng_seed", c.rng_seed}};
}

PretrainConfig PretrainConfigFromJson(const nlohmann::json& j, PretrainConfig c) {
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.classes_per_batch = j.value("classes_per_batch", c.classes_per_batch);
    c.samples_per_class = j.value("samples_per_class", c.samples_per_class);
    c.lr = j.value("lr", c.lr);
    c.margin = j.value("margin", c.margin);
    c.window_jitter = j.value("window_jitter", c.window_jitter);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("pretrain config: ") + e.what());
  }
  c.Validate();
  return c;
}

TrainResult Pretrain(const EncoderState& enc, std::span<const ClipFeatures> corpus,
                     const PretrainConfig& cfg, std::ostream* log) {
  cfg.Validate();
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!corpus[i].class_index) {
      throw Error(ErrorCode::kInvalidArgument, "pretraining clip '" + corpus[i].clip_id +
                                                   "' has no class index");
    }
    if (!corpus[i].maps.empty()) by_class[*corpus[i].class_index].push_back(i);
  }
  if (by_class.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "pretraining needs at least two classes");
  }
  std::vector<int> classes;
  for (const auto& [c, v] : by_class) classes.push_back(c);
  const int p = std::min<int>(cfg.classes_per_batch, static_cast<int>(classes.size()));
  const int k = cfg.samples_per_class;
  std::size_t total = 0;
  for (const auto& [c, v] : by_class) total += v.size();
  const std::size_t steps = std::max<std::size_t>(1, total / static_cast<std::size_t>(p * k));

  // Batch-all triplets over the fixed class-major layout.
  std::vector<Triplet> triplets;
  for (int ca = 0; ca < p; ++ca) {
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        if (a == b) continue;
        for (int cn = 0; cn < p; ++cn) {
          if (cn == ca) continue;
          for (int n = 0; n < k; ++n) triplets.push_back({ca * k + a, ca * k + b, cn * k + n});
        }
      }
    }
  }

  TrainResult out;
  out.encoder = enc;
  if (cfg.epochs == 0) return out;
  Rng rng(MixSeed(cfg.rng_seed, 0x9e7a));
  Eigen::VectorXf master = out.encoder.weights();
  Adam opt(master.size(), cfg.lr);
  std::map<int, std::size_t> cursor;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    for (auto& [c, v] : by_class) {
      std::shuffle(v.begin(), v.end(), rng.engine());
      cursor[c] = 0;
    }
    double sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      std::shuffle(classes.begin(), classes.end(), rng.engine());
      std::vector<MfccMatrix> maps;
      maps.reserve(static_cast<std::size_t>(p * k));
      for (int ci = 0; ci < p; ++ci) {
        const auto& members = by_class[classes[ci]];
        auto& cur = cursor[classes[ci]];
        for (int i = 0; i < k; ++i) {
          const ClipFeatures& clip = corpus[members[cur++ % members.size()]];
          const int last = static_cast<int>(clip.maps.size()) - 1;
          const int w = std::clamp(static_cast<int>(clip.keyword_window) +
                                       rng.UniformInt(-cfg.window_jitter, cfg.window_jitter),
                                   0, last);
          maps.push_back(clip.maps[w].values);
        }
      }
      sum += TrainStep(out.encoder, master, opt, maps, triplets, cfg.margin, true, epoch, s);
    }
    EpochLog e{epoch, sum / static_cast<double>(steps), static_cast<int>(steps),
               std::chrono::duration<double>(Clock::now() - t0).count()};
    EmitLog(log, e);
    out.log.push_back(e);
  }
  return out;
}

LabelerConfig ReinitializeAfterTraining(const Embedder& embed,
                                        std::span<const ClipFeatures> user_pos,
                                        std::span<const ClipFeatures> user_neg, double tau_l,
                                        double tau_h, const FrameWindow& window) {
  return Calibrate(embed, user_pos, user_neg, tau_l, tau_h, window);
}

std::vector<MfccMatrix> KeywordMaps(std::span<const ClipFeatures> clips) {
  std::vector<MfccMatrix> out;
  out.reserve(clips.size());
  for (const auto& c : clips) {
    if (c.maps.empty()) throw Error(ErrorCode::kClipTooShort, "clip '" + c.clip_id + "' < 1 s");
    out.push_back(c.maps.at(c.keyword_window).values);
  }
  return out;
}

}  // namespace skws
