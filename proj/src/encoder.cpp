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

#include "skws/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "skws/rng.hpp"

namespace skws {

std::string_view ToString(Precision p) {
  return p == Precision::kF32 ? "f32" : "f16_emulated";
}

Precision ParsePrecision(std::string_view text) {
  if (text == "f32") return Precision::kF32;
  if (text == "f16_emulated" || text == "f16") return Precision::kF16Emulated;
  throw Error(ErrorCode::kParseError, "unknown precision '" + std::string(text) + "'");
}

namespace {

template <typename Derived>
void RoundHalfInPlace(Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  m = m.unaryExpr([](Scalar v) {
    return static_cast<Scalar>(static_cast<float>(Eigen::half(static_cast<float>(v))));
  });
}

}  // namespace

template <typename Scalar>
Encoder<Scalar>::Encoder(ArchDescriptor arch, Precision precision)
    : arch_(std::move(arch)), precision_(precision) {
  if (arch_.param_count == 0 && !arch_.layers.empty()) arch_.Finalize();
  weights_ = Vector::Zero(static_cast<Eigen::Index>(arch_.param_count));
}

template <typename Scalar>
Encoder<Scalar> Encoder<Scalar>::Initialized(ArchDescriptor arch, std::uint64_t seed,
                                             Precision precision) {
  Encoder enc(std::move(arch), precision);
  enc.seed_ = seed;
  Rng rng(MixSeed(seed, 0x656e63u));
  Vector w = Vector::Zero(enc.weights_.size());
  for (const LayerSpec& l : enc.arch_.layers) {
    if (l.weight_count == 0) continue;
    std::size_t fan_in = 0;
    switch (l.kind) {
      case LayerKind::kConv2d:
        fan_in = static_cast<std::size_t>(l.kernel_h) * l.kernel_w * l.in_c;
        break;
      case LayerKind::kDepthwiseConv:
        fan_in = static_cast<std::size_t>(l.kernel_h) * l.kernel_w;
        break;
      case LayerKind::kPointwiseConv:
        fan_in = static_cast<std::size_t>(l.in_c);
        break;
      default:
        fan_in = l.in_elems();
        break;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < l.weight_count; ++i) {
      w[static_cast<Eigen::Index>(l.weight_offset + i)] =
          static_cast<Scalar>(rng.Uniform(-bound, bound));
    }
  }
  enc.set_weights(std::move(w));
  return enc;
}

template <typename Scalar>
void Encoder<Scalar>::set_weights(Vector w) {
  if (static_cast<std::size_t>(w.size()) != arch_.param_count) {
    throw Error(ErrorCode::kDimMismatch, "weight vector length " + std::to_string(w.size()) +
                                             " != param_count " +
                                             std::to_string(arch_.param_count));
  }
  if (!w.allFinite()) throw Error(ErrorCode::kNonFinite, "non-finite encoder weights");
  if (precision_ == Precision::kF16Emulated) RoundHalfInPlace(w);
  weights_ = std::move(w);
}

namespace layers {

namespace {

struct Padding {
  int top;
  int left;
};

Padding SamePadding(const LayerSpec& l) {
  const int ph = std::max((l.out_h - 1) * l.stride_h + l.kernel_h - l.in_h, 0);
  const int pw = std::max((l.out_w - 1) * l.stride_w + l.kernel_w - l.in_w, 0);
  return {ph / 2, pw / 2};
}

// Patch matrix: one row per output position, columns ordered (i, j, channel).
template <typename Scalar>
Tensor<Scalar> Im2Col(const LayerSpec& l, const Tensor<Scalar>& x) {
  const Padding pad = SamePadding(l);
  const int k = l.kernel_h * l.kernel_w * l.in_c;
  Tensor<Scalar> patches = Tensor<Scalar>::Zero(l.out_h * l.out_w, k);
  for (int oh = 0; oh < l.out_h; ++oh) {
    for (int ow = 0; ow < l.out_w; ++ow) {
      const int row = oh * l.out_w + ow;
      for (int i = 0; i < l.kernel_h; ++i) {
        const int ih = oh * l.stride_h + i - pad.top;
        if (ih < 0 || ih >= l.in_h) continue;
        for (int j = 0; j < l.kernel_w; ++j) {
          const int iw = ow * l.stride_w + j - pad.left;
          if (iw < 0 || iw >= l.in_w) continue;
          const int col = (i * l.kernel_w + j) * l.in_c;
          patches.row(row).segment(col, l.in_c) = x.row(ih * l.in_w + iw);
        }
      }
    }
  }
  return patches;
}

template <typename Scalar>
Tensor<Scalar> Col2Im(const LayerSpec& l, const Tensor<Scalar>& dpatches) {
  const Padding pad = SamePadding(l);
  Tensor<Scalar> dx = Tensor<Scalar>::Zero(l.in_h * l.in_w, l.in_c);
  for (int oh = 0; oh < l.out_h; ++oh) {
    for (int ow = 0; ow < l.out_w; ++ow) {
      const int row = oh * l.out_w + ow;
      for (int i = 0; i < l.kernel_h; ++i) {
        const int ih = oh * l.stride_h + i - pad.top;
        if (ih < 0 || ih >= l.in_h) continue;
        for (int j = 0; j < l.kernel_w; ++j) {
          const int iw = ow * l.stride_w + j - pad.left;
          if (iw < 0 || iw >= l.in_w) continue;
          const int col = (i * l.kernel_w + j) * l.in_c;
          dx.row(ih * l.in_w + iw) += dpatches.row(row).segment(col, l.in_c);
        }
      }
    }
  }
  return dx;
}

template <typename Scalar>
using MatMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>;
template <typename Scalar>
using MutMatMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>;
template <typename Scalar>
using RowMap = Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>;
template <typename Scalar>
using MutRowMap = Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>;

}  // namespace

template <typename Scalar>
Tensor<Scalar> LayerForward(const LayerSpec& l, const Scalar* params, const Tensor<Scalar>& x,
                            const Tensor<Scalar>* residual) {
  const Scalar* w = params ? params + l.weight_offset : nullptr;
  const Scalar* b = w ? w + l.weight_count : nullptr;
  switch (l.kind) {
    case LayerKind::kConv2d: {
      const MatMap<Scalar> kernel(w, l.kernel_h * l.kernel_w * l.in_c, l.out_c);
      Tensor<Scalar> y = Im2Col<Scalar>(l, x) * kernel;
      y.rowwise() += RowMap<Scalar>(b, l.out_c);
      return y;
    }
    case LayerKind::kPointwiseConv: {
      const MatMap<Scalar> kernel(w, l.in_c, l.out_c);
      Tensor<Scalar> y = x * kernel;
      y.rowwise() += RowMap<Scalar>(b, l.out_c);
      return y;
    }
    case LayerKind::kDepthwiseConv: {
      const Padding pad = SamePadding(l);
      Tensor<Scalar> y(l.out_h * l.out_w, l.out_c);
      for (int c = 0; c < l.out_c; ++c) {
        const Scalar* kc = w + static_cast<std::size_t>(c) * l.kernel_h * l.kernel_w;
        for (int oh = 0; oh < l.out_h; ++oh) {
          for (int ow = 0; ow < l.out_w; ++ow) {
            Scalar acc = b[c];
            for (int i = 0; i < l.kernel_h; ++i) {
              const int ih = oh * l.stride_h + i - pad.top;
              if (ih < 0 || ih >= l.in_h) continue;
              for (int j = 0; j < l.kernel_w; ++j) {
                const int iw = ow * l.stride_w + j - pad.left;
                if (iw < 0 || iw >= l.in_w) continue;
                acc += kc[i * l.kernel_w + j] * x(ih * l.in_w + iw, c);
              }
            }
            y(oh * l.out_w + ow, c) = acc;
          }
        }
      }
      return y;
    }
    case LayerKind::kRelu:
      return x.cwiseMax(Scalar(0));
    case LayerKind::kBatchNormFold:
      return x;
    case LayerKind::kAvgPool:
      return x.colwise().mean();
    case LayerKind::kDense: {
      const MatMap<Scalar> kernel(w, static_cast<Eigen::Index>(l.in_elems()), l.out_c);
      const Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> flat(x.data(), x.size());
      Tensor<Scalar> y = flat * kernel;
      y += RowMap<Scalar>(b, l.out_c);
      return y;
    }
    case LayerKind::kResidualAdd:
      return x + *residual;
  }
  return x;
}

template <typename Scalar>
Tensor<Scalar> LayerBackward(const LayerSpec& l, const Scalar* params, const Tensor<Scalar>& x,
                             const Tensor<Scalar>& y, const Tensor<Scalar>& dy,
                             Scalar* dparams, Tensor<Scalar>* dresidual) {
  const Scalar* w = params ? params + l.weight_offset : nullptr;
  Scalar* dw = dparams ? dparams + l.weight_offset : nullptr;
  Scalar* db = dw ? dw + l.weight_count : nullptr;
  switch (l.kind) {
    case LayerKind::kConv2d: {
      const Eigen::Index k = l.kernel_h * l.kernel_w * l.in_c;
      const MatMap<Scalar> kernel(w, k, l.out_c);
      const Tensor<Scalar> patches = Im2Col<Scalar>(l, x);
      MutMatMap<Scalar>(dw, k, l.out_c).noalias() += patches.transpose() * dy;
      MutRowMap<Scalar>(db, l.out_c) += dy.colwise().sum();
      return Col2Im<Scalar>(l, dy * kernel.transpose());
    }
    case LayerKind::kPointwiseConv: {
      const MatMap<Scalar> kernel(w, l.in_c, l.out_c);
      MutMatMap<Scalar>(dw, l.in_c, l.out_c).noalias() += x.transpose() * dy;
      MutRowMap<Scalar>(db, l.out_c) += dy.colwise().sum();
      return dy * kernel.transpose();
    }
    case LayerKind::kDepthwiseConv: {
      const Padding pad = SamePadding(l);
      Tensor<Scalar> dx = Tensor<Scalar>::Zero(x.rows(), x.cols());
      for (int c = 0; c < l.out_c; ++c) {
        const std::size_t kbase = static_cast<std::size_t>(c) * l.kernel_h * l.kernel_w;
        for (int oh = 0; oh < l.out_h; ++oh) {
          for (int ow = 0; ow < l.out_w; ++ow) {
            const Scalar g = dy(oh * l.out_w + ow, c);
            db[c] += g;
            for (int i = 0; i < l.kernel_h; ++i) {
              const int ih = oh * l.stride_h + i - pad.top;
              if (ih < 0 || ih >= l.in_h) continue;
              for (int j = 0; j < l.kernel_w; ++j) {
                const int iw = ow * l.stride_w + j - pad.left;
                if (iw < 0 || iw >= l.in_w) continue;
                const std::size_t kidx = kbase + static_cast<std::size_t>(i * l.kernel_w + j);
                dw[kidx] += g * x(ih * l.in_w + iw, c);
                dx(ih * l.in_w + iw, c) += g * w[kidx];
              }
            }
          }
        }
      }
      return dx;
    }
    case LayerKind::kRelu:
      return (y.array() > Scalar(0)).select(dy, Scalar(0));
    case LayerKind::kBatchNormFold:
      return dy;
    case LayerKind::kAvgPool: {
      Tensor<Scalar> dx(x.rows(), x.cols());
      dx.rowwise() = dy.row(0) / static_cast<Scalar>(x.rows());
      return dx;
    }
    case LayerKind::kDense: {
      const auto in = static_cast<Eigen::Index>(l.in_elems());
      const MatMap<Scalar> kernel(w, in, l.out_c);
      const Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> flat(x.data(), x.size());
      MutMatMap<Scalar>(dw, in, l.out_c).noalias() += flat * dy.row(0);
      MutRowMap<Scalar>(db, l.out_c) += dy.row(0);
      Tensor<Scalar> dx(x.rows(), x.cols());
      Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(dx.data(), dx.size()) =
          dy.row(0) * kernel.transpose();
      return dx;
    }
    case LayerKind::kResidualAdd:
      *dresidual += dy;
      return dy;
  }
  return dy;
}

}  // namespace layers

namespace {

template <typename Scalar>
typename Encoder<Scalar>::Tensor InputTensor(const Encoder<Scalar>& enc, const MfccMatrix& map) {
  const ArchDescriptor& a = enc.arch();
  if (a.input_h != kMfccFrames || a.input_w != kMfccCoeffs) {
    throw Error(ErrorCode::kDimMismatch, "arch '" + a.name + "' expects " +
                                             std::to_string(a.input_h) + "x" +
                                             std::to_string(a.input_w) + " input, got 47x10");
  }
  // Row-major map data is exactly (time, coeff) positions with one channel.
  return Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, 1>>(map.data(), map.size())
      .template cast<Scalar>();
}

template <typename Scalar>
void RunLayers(const Encoder<Scalar>& enc, typename Encoder<Scalar>::Tensor input,
               std::vector<typename Encoder<Scalar>::Tensor>& tape) {
  const auto& layer_specs = enc.arch().layers;
  tape.clear();
  tape.reserve(layer_specs.size() + 1);
  tape.push_back(std::move(input));
  const Scalar* params = enc.weights().data();
  for (const LayerSpec& l : layer_specs) {
    const auto* residual = l.kind == LayerKind::kResidualAdd
                               ? &tape[static_cast<std::size_t>(l.residual_from)]
                               : nullptr;
    auto y = layers::LayerForward<Scalar>(l, params, tape.back(), residual);
    if (enc.precision() == Precision::kF16Emulated) RoundHalfInPlace(y);
    tape.push_back(std::move(y));
  }
}

}  // namespace

template <typename Scalar>
typename Encoder<Scalar>::Vector Forward(const Encoder<Scalar>& enc, const MfccMatrix& map) {
  std::vector<typename Encoder<Scalar>::Tensor> tape;
  RunLayers(enc, InputTensor(enc, map), tape);
  return tape.back().row(0).transpose();
}

template <typename Scalar>
TrainingPass<Scalar> ForwardTraining(const Encoder<Scalar>& enc,
                                     std::span<const MfccMatrix> batch) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyInput, "empty training batch");
  TrainingPass<Scalar> pass;
  pass.tape.arch_name = enc.arch().name;
  pass.tape.param_count = enc.arch().param_count;
  pass.tape.elems_per_sample = enc.arch().activation_elems_per_sample();
  pass.tape.tensors.resize(batch.size());
  pass.embeddings.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    RunLayers(enc, InputTensor(enc, batch[b]), pass.tape.tensors[b]);
    pass.embeddings.push_back(pass.tape.tensors[b].back().row(0).transpose());
  }
  return pass;
}

template <typename Scalar>
typename Encoder<Scalar>::Vector Backward(
    const Encoder<Scalar>& enc, const ActivationTape<Scalar>& tape,
    std::span<const typename Encoder<Scalar>::Vector> grad_wrt_embeddings) {
  using Tensor = typename Encoder<Scalar>::Tensor;
  const ArchDescriptor& a = enc.arch();
  if (tape.arch_name != a.name || tape.param_count != a.param_count) {
    throw Error(ErrorCode::kTapeMismatch, "activation tape was recorded for a different encoder");
  }
  if (grad_wrt_embeddings.size() != tape.batch_size()) {
    throw Error(ErrorCode::kTapeMismatch, "gradient count does not match tape batch size");
  }
  typename Encoder<Scalar>::Vector grad =
      Encoder<Scalar>::Vector::Zero(static_cast<Eigen::Index>(a.param_count));
  const std::size_t n_layers = a.layers.size();
  std::vector<Tensor> dtape(n_layers + 1);
  for (std::size_t b = 0; b < tape.batch_size(); ++b) {
    const auto& t = tape.tensors[b];
    if (t.size() != n_layers + 1) {
      throw Error(ErrorCode::kTapeMismatch, "tape depth does not match the architecture");
    }
    if (grad_wrt_embeddings[b].size() != a.embedding_dim) {
      throw Error(ErrorCode::kDimMismatch, "embedding gradient has wrong dimension");
    }
    for (std::size_t i = 0; i < n_layers; ++i) dtape[i] = Tensor::Zero(t[i].rows(), t[i].cols());
    dtape[n_layers] = grad_wrt_embeddings[b].transpose();
    for (std::size_t i = n_layers; i-- > 0;) {
      const LayerSpec& l = a.layers[i];
      Tensor* dres = l.kind == LayerKind::kResidualAdd
                         ? &dtape[static_cast<std::size_t>(l.residual_from)]
                         : nullptr;
      dtape[i] += layers::LayerBackward<Scalar>(l, enc.weights().data(), t[i], t[i + 1],
                                                dtape[i + 1], grad.data(), dres);
    }
  }
  return grad;
}

template class Encoder<float>;
template class Encoder<double>;

#define SKWS_INSTANTIATE(S)                                                               \
  template Encoder<S>::Vector Forward<S>(const Encoder<S>&, const MfccMatrix&);           \
  template TrainingPass<S> ForwardTraining<S>(const Encoder<S>&,                          \
                                              std::span<const MfccMatrix>);               \
  template Encoder<S>::Vector Backward<S>(const Encoder<S>&, const ActivationTape<S>&,    \
                                          std::span<const Encoder<S>::Vector>);           \
  template layers::Tensor<S> layers::LayerForward<S>(const LayerSpec&, const S*,          \
                                                     const layers::Tensor<S>&,            \
                                                     const layers::Tensor<S>*);           \
  template layers::Tensor<S> layers::LayerBackward<S>(                                    \
      const LayerSpec&, const S*, const layers::Tensor<S>&, const layers::Tensor<S>&,     \
      const layers::Tensor<S>&, S*, layers::Tensor<S>*);

SKWS_INSTANTIATE(float)
SKWS_INSTANTIATE(double)

#undef SKWS_INSTANTIATE

}  // namespace skws
