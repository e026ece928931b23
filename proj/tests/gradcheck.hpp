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

#ifndef SKWS_TESTS_GRADCHECK_HPP_
#define SKWS_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "skws/encoder.hpp"
#include "skws/rng.hpp"
#include "skws/trainer.hpp"

namespace skws::testing {

/// Central differences are evaluated through the float64 instantiation of the
/// same layer code; the analytic side runs in float32.
inline constexpr double kFdEps = 1e-4;

struct GradCheck {
  double max_rel_error = 0.0;
  int n_checked = 0;
  int n_kinks = 0;  // coordinates skipped because a ReLU or hinge flipped
};

/// Relative error with a floor of 1e-3 x the largest gradient magnitude, so
/// that near-zero coordinates are judged on an absolute scale.
inline double RelativeError(double analytic, double fd, double scale) {
  const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-3 * scale, 1e-12});
  return std::abs(analytic - fd) / denom;
}

inline void Accumulate(GradCheck& gc, const std::vector<double>& analytic,
                       const std::vector<double>& fd, const std::vector<bool>& skip) {
  double scale = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    if (!skip[i]) scale = std::max({scale, std::abs(fd[i]), std::abs(analytic[i])});
  }
  for (std::size_t i = 0; i < fd.size(); ++i) {
    if (skip[i]) {
      ++gc.n_kinks;
      continue;
    }
    gc.max_rel_error = std::max(gc.max_rel_error, RelativeError(analytic[i], fd[i], scale));
    ++gc.n_checked;
  }
}

/// Builds a small network containing every layer type on a 7x5 input.
inline ArchDescriptor LayerZooArch() {
  ArchDescriptor a;
  a.name = "zoo";
  a.input_h = 7;
  a.input_w = 5;
  a.embedding_dim = 3;
  auto add = [&a](LayerKind kind, int kh = 1, int kw = 1, int sh = 1, int sw = 1, int out = 0) {
    LayerSpec l;
    l.kind = kind;
    l.kernel_h = kh;
    l.kernel_w = kw;
    l.stride_h = sh;
    l.stride_w = sw;
    l.out_channels = out;
    a.layers.push_back(l);
  };
  add(LayerKind::kConv2d, 3, 2, 2, 1, 4);
  add(LayerKind::kBatchNormFold);
  add(LayerKind::kRelu);
  add(LayerKind::kDepthwiseConv, 3, 3, 1, 2);
  add(LayerKind::kPointwiseConv, 1, 1, 1, 1, 4);
  LayerSpec res;
  res.kind = LayerKind::kResidualAdd;
  res.residual_from = 4;  // output of the depthwise layer
  a.layers.push_back(res);
  add(LayerKind::kConv2d, 2, 2, 1, 1, 4);
  add(LayerKind::kAvgPool);
  add(LayerKind::kDense, 1, 1, 1, 1, 3);
  a.Finalize();
  return a;
}

/// Checks dL/dparams and dL/dx of one layer for L = <dy, layer(x)>.
inline GradCheck CheckLayer(const LayerSpec& l, std::size_t param_count, std::uint64_t seed) {
  using TF = layers::Tensor<float>;
  using TD = layers::Tensor<double>;
  Rng rng(seed);
  auto normal = [&rng] { return static_cast<float>(rng.Normal()); };
  Eigen::VectorXf params = Eigen::VectorXf::NullaryExpr(static_cast<Eigen::Index>(param_count), normal);
  const TF x = TF::NullaryExpr(l.in_h * l.in_w, l.in_c, normal);
  const TF res = TF::NullaryExpr(l.out_h * l.out_w, l.out_c, normal);
  const TF dy = TF::NullaryExpr(l.out_h * l.out_w, l.out_c, normal);
  const bool has_res = l.kind == LayerKind::kResidualAdd;

  const TF y = layers::LayerForward<float>(l, params.data(), x, has_res ? &res : nullptr);
  Eigen::VectorXf dparams = Eigen::VectorXf::Zero(params.size());
  TF dres = TF::Zero(res.rows(), res.cols());
  const TF dx = layers::LayerBackward<float>(l, params.data(), x, y, dy, dparams.data(),
                                             has_res ? &dres : nullptr);

  const Eigen::VectorXd pd = params.cast<double>();
  const TD xd = x.cast<double>(), resd = res.cast<double>(), dyd = dy.cast<double>();
  auto loss = [&](const Eigen::VectorXd& p, const TD& xx, const TD& rr) {
    return (layers::LayerForward<double>(l, p.data(), xx, has_res ? &rr : nullptr).array() *
            dyd.array())
        .sum();
  };
  auto relu_flip = [&](const TD& a, const TD& b) {
    if (l.kind != LayerKind::kRelu) return false;
    return ((a.array() > 0) != (b.array() > 0)).any();
  };

  GradCheck gc;
  std::vector<double> an, fd;
  std::vector<bool> skip;
  const std::size_t lo = l.weight_offset, hi = l.weight_offset + l.weight_count + l.bias_count;
  for (std::size_t i = lo; i < hi; ++i) {
    Eigen::VectorXd p = pd, m = pd;
    p[static_cast<Eigen::Index>(i)] += kFdEps;
    m[static_cast<Eigen::Index>(i)] -= kFdEps;
    an.push_back(dparams[static_cast<Eigen::Index>(i)]);
    fd.push_back((loss(p, xd, resd) - loss(m, xd, resd)) / (2 * kFdEps));
    skip.push_back(false);
  }
  for (Eigen::Index i = 0; i < xd.size(); ++i) {
    TD p = xd, m = xd;
    p.data()[i] += kFdEps;
    m.data()[i] -= kFdEps;
    an.push_back(dx.data()[i]);
    fd.push_back((loss(pd, p, resd) - loss(pd, m, resd)) / (2 * kFdEps));
    skip.push_back(relu_flip(p, m));
  }
  if (has_res) {
    for (Eigen::Index i = 0; i < resd.size(); ++i) {
      TD p = resd, m = resd;
      p.data()[i] += kFdEps;
      m.data()[i] -= kFdEps;
      an.push_back(dres.data()[i]);
      fd.push_back((loss(pd, xd, p) - loss(pd, xd, m)) / (2 * kFdEps));
      skip.push_back(false);
    }
  }
  Accumulate(gc, an, fd, skip);
  return gc;
}

/// Triplet loss and kink signature (ReLU activation pattern plus active
/// triplet set) from one forward pass; a signature change between the two
/// sides of a central difference marks a kink.
struct SideEval {
  double loss = 0.0;
  std::vector<bool> signature;
};

inline SideEval EvaluateSide(const Encoder<double>& enc, const std::vector<MfccMatrix>& maps,
                             const std::vector<Triplet>& triplets, double margin) {
  const auto pass = ForwardTraining(enc, std::span<const MfccMatrix>(maps));
  SideEval out;
  for (const auto& tape : pass.tape.tensors) {
    for (std::size_t i = 0; i < enc.arch().layers.size(); ++i) {
      if (enc.arch().layers[i].kind != LayerKind::kRelu) continue;
      const auto& t = tape[i];
      for (Eigen::Index k = 0; k < t.size(); ++k) out.signature.push_back(t.data()[k] > 0);
    }
  }
  for (const auto& tr : triplets) {
    const double d_ap = (pass.embeddings[tr.anchor] - pass.embeddings[tr.positive]).norm();
    const double d_an = (pass.embeddings[tr.anchor] - pass.embeddings[tr.negative]).norm();
    out.signature.push_back(d_ap - d_an + margin > 0.0);
  }
  out.loss = TripletLoss<double>(std::span<const Eigen::VectorXd>(pass.embeddings), triplets,
                                 margin).loss;
  return out;
}

/// Full encoder + triplet loss on the given architecture, batch layout
/// [n_p positives | n_n negatives | k user samples].
inline GradCheck CheckEncoderTriplet(const ArchDescriptor& arch, std::uint64_t seed, int n_p = 2,
                                     int n_n = 2, int k = 1, double margin = 0.5) {
  Rng rng(MixSeed(seed, 0x6763));
  auto enc = EncoderState::Initialized(arch, seed);
  Eigen::VectorXf w = enc.weights();
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] += 0.05f * static_cast<float>(rng.Normal());
  enc.set_weights(w);
  std::vector<MfccMatrix> maps;
  for (int i = 0; i < n_p + n_n + k; ++i) {
    maps.push_back(MfccMatrix::NullaryExpr([&] { return static_cast<float>(rng.Normal()); }));
  }
  const auto triplets = EnumerateTriplets(n_p, n_n, k);

  const auto pass = ForwardTraining(enc, std::span<const MfccMatrix>(maps));
  const auto tl = TripletLoss<float>(std::span<const Eigen::VectorXf>(pass.embeddings),
                                     triplets, margin);
  const Eigen::VectorXf grad =
      Backward(enc, pass.tape, std::span<const Eigen::VectorXf>(tl.grads));

  const auto encd = enc.cast<double>();
  std::vector<double> an, fd;
  std::vector<bool> skip;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Eigen::VectorXd wp = encd.weights(), wm = encd.weights();
    wp[i] += kFdEps;
    wm[i] -= kFdEps;
    auto ep = encd, em = encd;
    ep.set_weights(wp);
    em.set_weights(wm);
    an.push_back(grad[i]);
    const SideEval plus = EvaluateSide(ep, maps, triplets, margin);
    const SideEval minus = EvaluateSide(em, maps, triplets, margin);
    const bool kink = plus.signature != minus.signature;
    skip.push_back(kink);
    fd.push_back(kink ? 0.0 : (plus.loss - minus.loss) / (2 * kFdEps));
  }
  GradCheck gc;
  Accumulate(gc, an, fd, skip);
  return gc;
}

}  // namespace skws::testing

#endif  // SKWS_TESTS_GRADCHECK_HPP_
