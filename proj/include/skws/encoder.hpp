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

#ifndef SKWS_ENCODER_HPP_
#define SKWS_ENCODER_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "skws/arch.hpp"
#include "skws/frontend.hpp"

namespace skws {

enum class Precision { kF32, kF16Emulated };

std::string_view ToString(Precision p);
Precision ParsePrecision(std::string_view text);

using Embedding = Eigen::VectorXf;

/// The embedding network f(.): architecture, flat weight vector and precision
/// mode. Batch-norm is always folded into the conv weights.
template <typename Scalar>
class Encoder {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  /// Activation tensor, (H*W) rows x C columns, one channel per column.
  using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Encoder() = default;
  /// Zero weights.
  explicit Encoder(ArchDescriptor arch, Precision precision = Precision::kF32);

  /// Kaiming-uniform fan-in initialization from `seed`; biases start at zero.
  static Encoder Initialized(ArchDescriptor arch, std::uint64_t seed,
                             Precision precision = Precision::kF32);

  const ArchDescriptor& arch() const { return arch_; }
  const Vector& weights() const { return weights_; }
  /// Replaces the weights; rounds to half precision in f16-emulated mode.
  void set_weights(Vector w);
  Precision precision() const { return precision_; }
  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  template <typename Other>
  Encoder<Other> cast() const {
    Encoder<Other> out(arch_, precision_);
    out.set_weights(weights_.template cast<Other>());
    out.set_seed(seed_);
    return out;
  }

 private:
  ArchDescriptor arch_;
  Vector weights_;
  Precision precision_ = Precision::kF32;
  std::uint64_t seed_ = 0;
};

using EncoderState = Encoder<float>;

/// Per-sample activations recorded by ForwardTraining. tensors[b][0] is the
/// input map, tensors[b][i + 1] the output of layer i.
template <typename Scalar>
struct ActivationTape {
  using Tensor = typename Encoder<Scalar>::Tensor;

  std::string arch_name;
  std::size_t param_count = 0;
  std::size_t elems_per_sample = 0;
  std::vector<std::vector<Tensor>> tensors;

  std::size_t batch_size() const { return tensors.size(); }
  /// Bytes an on-device implementation stores for this batch.
  std::size_t ReportedBytes(int bytes_per_elem) const {
    return elems_per_sample * batch_size() * static_cast<std::size_t>(bytes_per_elem);
  }
};

template <typename Scalar>
struct TrainingPass {
  std::vector<typename Encoder<Scalar>::Vector> embeddings;
  ActivationTape<Scalar> tape;
};

template <typename Scalar>
typename Encoder<Scalar>::Vector Forward(const Encoder<Scalar>& enc, const MfccMatrix& map);

inline Embedding Forward(const EncoderState& enc, const MfccMap& map) {
  return Forward(enc, map.values);
}

template <typename Scalar>
TrainingPass<Scalar> ForwardTraining(const Encoder<Scalar>& enc,
                                     std::span<const MfccMatrix> batch);

/// Gradient of sum_b <grad_wrt_embeddings[b], z_b> with respect to the weights.
template <typename Scalar>
typename Encoder<Scalar>::Vector Backward(
    const Encoder<Scalar>& enc, const ActivationTape<Scalar>& tape,
    std::span<const typename Encoder<Scalar>::Vector> grad_wrt_embeddings);

/// Layer-level primitives, exposed for gradient checking.
namespace layers {

template <typename Scalar>
using Tensor = typename Encoder<Scalar>::Tensor;
template <typename Scalar>
using ConstWeights = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

template <typename Scalar>
Tensor<Scalar> LayerForward(const LayerSpec& l, const Scalar* params, const Tensor<Scalar>& x,
                            const Tensor<Scalar>* residual);

/// Accumulates the parameter gradient into `dparams` and returns dL/dx.
/// `dresidual` receives the gradient for kResidualAdd's second operand.
template <typename Scalar>
Tensor<Scalar> LayerBackward(const LayerSpec& l, const Scalar* params, const Tensor<Scalar>& x,
                             const Tensor<Scalar>& y, const Tensor<Scalar>& dy,
                             Scalar* dparams, Tensor<Scalar>* dresidual);

}  // namespace layers

extern template class Encoder<float>;
extern template class Encoder<double>;

}  // namespace skws

#endif  // SKWS_ENCODER_HPP_
