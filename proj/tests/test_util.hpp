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

#ifndef SKWS_TESTS_TEST_UTIL_HPP_
#define SKWS_TESTS_TEST_UTIL_HPP_

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "skws/corpus.hpp"
#include "skws/frontend.hpp"
#include "skws/rng.hpp"

namespace skws::testing {

inline MfccMatrix RandomMap(Rng& rng) {
  return MfccMatrix::NullaryExpr([&] { return static_cast<float>(rng.Normal()); });
}

inline std::vector<MfccMatrix> RandomMaps(Rng& rng, int n) {
  std::vector<MfccMatrix> maps;
  for (int i = 0; i < n; ++i) maps.push_back(RandomMap(rng));
  return maps;
}

/// Two tones, a DC offset and a low noise bed; same formula as the Python oracle.
inline std::vector<float> OracleSignal() {
  std::vector<float> x(kSampleRate);
  std::uint64_t state = 12345;
  constexpr double kPi = 3.14159265358979323846;
  for (int i = 0; i < kSampleRate; ++i) {
    const double n = i;
    const double v = 0.5 * std::sin(2 * kPi * (300.0 + 2000.0 * n / kSampleRate) * n / kSampleRate) +
                     0.1 * std::sin(2 * kPi * 1234.0 * n / kSampleRate) + 0.05;
    state = (state * 1103515245u + 12345u) % (1ull << 31);
    const double noise = static_cast<double>(state) / static_cast<double>(1ull << 31) - 0.5;
    x[static_cast<std::size_t>(i)] = static_cast<float>(v + 0.02 * noise);
  }
  return x;
}

inline AudioClip ToneClip(double seconds, double hz, double amp, std::string id) {
  AudioClip c;
  c.samples.resize(static_cast<std::size_t>(seconds * kSampleRate));
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    c.samples[i] = static_cast<float>(amp * std::sin(2 * 3.14159265358979323846 * hz *
                                                     static_cast<double>(i) / kSampleRate));
  }
  c.clip_id = std::move(id);
  return c;
}

/// Small corpus that keeps every unit test fast.
inline SynthSpec SmallSpec(std::uint64_t seed = 1) {
  SynthSpec s;
  s.n_pretrain_classes = 3;
  s.n_clips_per_class = 6;
  s.n_target_speakers = 2;
  s.n_target_clips_per_speaker = 12;
  s.n_negative_clips = 16;
  s.rng_seed = seed;
  s.keyword_pattern_seed = seed;
  return s;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("skws_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace skws::testing

#endif  // SKWS_TESTS_TEST_UTIL_HPP_
