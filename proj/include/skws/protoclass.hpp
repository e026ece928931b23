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

#ifndef SKWS_PROTOCLASS_HPP_
#define SKWS_PROTOCLASS_HPP_

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skws/encoder.hpp"
#include "skws/quantize.hpp"

namespace skws {

/// L2 distance, accumulated in double. Symmetric by construction.
template <typename DerivedA, typename DerivedB>
double Euclidean(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimMismatch, "embedding dimensions differ");
  }
  return (a.template cast<double>() - b.template cast<double>()).norm();
}

struct Prototype {
  Embedding vector;
  std::string class_id;
  int k_used = 0;
};

/// Arithmetic mean of K embeddings.
Prototype ComputePrototype(std::span<const Embedding> embs, std::string class_id);

struct OpenSetDecision {
  std::optional<std::string> predicted;  // empty means "unknown"
  double distance = 0.0;
  double gamma_used = 0.0;

  bool unknown() const { return !predicted.has_value(); }
};

/// Nearest prototype if its distance is strictly below gamma, otherwise
/// unknown. Equal distances resolve to the lexicographically smallest id.
OpenSetDecision ClassifyOpenSet(const Embedding& z, std::span<const Prototype> protos,
                                double gamma);

/// Maps one MFCC window to an embedding; float or quantized inference.
using Embedder = std::function<Embedding(const MfccMatrix&)>;

Embedder MakeEmbedder(const EncoderState& enc);
Embedder MakeEmbedder(const QuantizedEncoder& qenc);

}  // namespace skws

#endif  // SKWS_PROTOCLASS_HPP_
