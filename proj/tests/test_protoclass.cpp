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

#include <gtest/gtest.h>

#include "skws/protoclass.hpp"
#include "test_util.hpp"

namespace skws {
namespace {

Embedding Vec(std::initializer_list<float> v) {
  Embedding e(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (float x : v) e[i++] = x;
  return e;
}

TEST(Protoclass, PrototypeIsTheMean) {
  const std::vector<Embedding> embs{Vec({1, 2}), Vec({3, 4}), Vec({5, 9})};
  const Prototype p = ComputePrototype(embs, "kw");
  EXPECT_FLOAT_EQ(p.vector[0], 3.0f);
  EXPECT_FLOAT_EQ(p.vector[1], 5.0f);
  EXPECT_EQ(p.k_used, 3);
  EXPECT_EQ(p.class_id, "kw");
}

TEST(Protoclass, PrototypeErrors) {
  EXPECT_THROW(ComputePrototype({}, "kw"), Error);
  const std::vector<Embedding> mixed{Vec({1, 2}), Vec({1, 2, 3})};
  try {
    ComputePrototype(mixed, "kw");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimMismatch);
  }
}

TEST(Protoclass, OpenSetUsesStrictThreshold) {
  const std::vector<Prototype> protos{{Vec({0, 0}), "a", 1}, {Vec({10, 0}), "b", 1}};
  const auto d = ClassifyOpenSet(Vec({3, 4}), protos, 5.0);
  EXPECT_TRUE(d.unknown());  // distance exactly 5 is not < 5
  EXPECT_DOUBLE_EQ(d.distance, 5.0);
  const auto d2 = ClassifyOpenSet(Vec({3, 4}), protos, 5.0001);
  ASSERT_FALSE(d2.unknown());
  EXPECT_EQ(*d2.predicted, "a");
  const auto d3 = ClassifyOpenSet(Vec({9, 1}), protos, 2.0);
  EXPECT_EQ(d3.predicted, "b");
}

TEST(Protoclass, TiesBreakByClassId) {
  const std::vector<Prototype> protos{{Vec({2, 0}), "z", 1}, {Vec({-2, 0}), "m", 1}};
  EXPECT_EQ(ClassifyOpenSet(Vec({0, 0}), protos, 3.0).predicted, "m");
}

TEST(Protoclass, OpenSetErrors) {
  EXPECT_THROW(ClassifyOpenSet(Vec({0}), {}, 1.0), Error);
  const std::vector<Prototype> protos{{Vec({0, 0}), "a", 1}};
  EXPECT_THROW(ClassifyOpenSet(Vec({0, 0}), protos, 0.0), Error);
  EXPECT_THROW(ClassifyOpenSet(Vec({0, 0, 0}), protos, 1.0), Error);
}

TEST(Protoclass, EmbedderWrapsEncoder) {
  const auto enc = EncoderState::Initialized(TinyArch(), 5);
  const Embedder f = MakeEmbedder(enc);
  Rng rng(1);
  const MfccMatrix m = testing::RandomMap(rng);
  EXPECT_EQ(f(m), Forward(enc, m));
}

}  // namespace
}  // namespace skws
