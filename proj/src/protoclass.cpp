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

#include "skws/protoclass.hpp"

#include <memory>

namespace skws {

Prototype ComputePrototype(std::span<const Embedding> embs, std::string class_id) {
  if (embs.empty()) throw Error(ErrorCode::kEmptyInput, "prototype needs at least one embedding");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(embs.front().size());
  for (const auto& e : embs) {
    if (e.size() != sum.size()) throw Error(ErrorCode::kDimMismatch, "embedding dimensions differ");
    sum += e.cast<double>();
  }
  Prototype p;
  p.vector = (sum / static_cast<double>(embs.size())).cast<float>();
  p.class_id = std::move(class_id);
  p.k_used = static_cast<int>(embs.size());
  return p;
}

OpenSetDecision ClassifyOpenSet(const Embedding& z, std::span<const Prototype> protos,
                                double gamma) {
  if (protos.empty()) throw Error(ErrorCode::kEmptyInput, "no prototypes");
  if (!(gamma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must be positive");
  const Prototype* best = nullptr;
  double best_d = 0.0;
  for (const auto& p : protos) {
    const double d = Euclidean(z, p.vector);
    if (!best || d < best_d || (d == best_d && p.class_id < best->class_id)) {
      best = &p;
      best_d = d;
    }
  }
  OpenSetDecision out;
  out.distance = best_d;
  out.gamma_used = gamma;
  if (best_d < gamma) out.predicted = best->class_id;
  return out;
}

Embedder MakeEmbedder(const EncoderState& enc) {
  auto shared = std::make_shared<const EncoderState>(enc);
  return [shared](const MfccMatrix& m) -> Embedding { return Forward(*shared, m); };
}

Embedder MakeEmbedder(const QuantizedEncoder& qenc) {
  auto shared = std::make_shared<const QuantizedEncoder>(qenc);
  return [shared](const MfccMatrix& m) { return ForwardQuantized(*shared, m); };
}

}  // namespace skws
