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

#include "skws/frontend.hpp"

#include <unsupported/Eigen/FFT>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <numbers>

namespace skws {

int FrameWindow::stride_samples() const {
  return static_cast<int>(std::lround(stride_s * kSampleRate));
}

void FrameWindow::Validate() const {
  if (length_s != 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "window length must be 1.0 s");
  }
  if (!(stride_s > 0.0 && stride_s < length_s) || stride_samples() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "stride must satisfy 0 < stride < 1 s");
  }
}

int WindowCount(std::size_t n_samples, const FrameWindow& win) {
  if (n_samples < static_cast<std::size_t>(kWindowSamples)) return 0;
  return static_cast<int>((n_samples - kWindowSamples) /
                          static_cast<std::size_t>(win.stride_samples())) + 1;
}

std::vector<WindowSlice> SlidingWindows(const AudioClip& clip, const FrameWindow& win) {
  win.Validate();
  if (clip.samples.size() < static_cast<std::size_t>(kWindowSamples)) {
    throw Error(ErrorCode::kClipTooShort,
                "clip '" + clip.clip_id + "' shorter than 1 s");
  }
  const int n = WindowCount(clip.samples.size(), win);
  const int stride = win.stride_samples();
  std::vector<WindowSlice> out;
  out.reserve(static_cast<std::size_t>(n));
  const std::span<const float> all(clip.samples);
  for (int k = 0; k < n; ++k) {
    const auto start = static_cast<std::size_t>(k) * static_cast<std::size_t>(stride);
    out.push_back({static_cast<double>(start) / kSampleRate,
                   all.subspan(start, kWindowSamples)});
  }
  return out;
}

std::vector<float> PreEmphasizeAndCenter(std::span<const float> frame) {
  double sum = 0.0;
  for (float s : frame) sum += s;
  const double mean = frame.empty() ? 0.0 : sum / static_cast<double>(frame.size());
  std::vector<float> out(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(frame[i]) - mean);
  }
  return out;
}

namespace {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MfccTables {
  Eigen::VectorXf window;  // periodic Hann
  Eigen::MatrixXf mel;     // bands x bins
  Eigen::MatrixXf dct;     // coeffs x bands, orthonormal DCT-II rows

  MfccTables() {
    constexpr int kBins = kFftSize / 2 + 1;
    window.resize(kFftSize);
    for (int i = 0; i < kFftSize; ++i) {
      window[i] = static_cast<float>(
          0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / kFftSize));
    }
    mel = Eigen::MatrixXf::Zero(kMelBands, kBins);
    const double lo = HzToMel(kMelLowHz);
    const double hi = HzToMel(kMelHighHz);
    std::vector<double> edges(kMelBands + 2);
    for (int i = 0; i < kMelBands + 2; ++i) {
      edges[i] = MelToHz(lo + (hi - lo) * i / (kMelBands + 1));
    }
    for (int m = 0; m < kMelBands; ++m) {
      for (int k = 0; k < kBins; ++k) {
        const double f = static_cast<double>(k) * kSampleRate / kFftSize;
        double w = 0.0;
        if (f > edges[m] && f <= edges[m + 1]) {
          w = (f - edges[m]) / (edges[m + 1] - edges[m]);
        } else if (f > edges[m + 1] && f < edges[m + 2]) {
          w = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
        }
        mel(m, k) = static_cast<float>(w);
      }
    }
    dct.resize(kMfccCoeffs, kMelBands);
    for (int c = 0; c < kMfccCoeffs; ++c) {
      const double s = c == 0 ? std::sqrt(1.0 / kMelBands) : std::sqrt(2.0 / kMelBands);
      for (int n = 0; n < kMelBands; ++n) {
        dct(c, n) = static_cast<float>(
            s * std::cos(std::numbers::pi * c * (2.0 * n + 1.0) / (2.0 * kMelBands)));
      }
    }
  }
};

const MfccTables& Tables() {
  static const MfccTables tables;
  return tables;
}

}  // namespace

MfccMap ComputeMfcc(std::span<const float> frame) {
  if (frame.size() != static_cast<std::size_t>(kWindowSamples)) {
    throw Error(ErrorCode::kDimMismatch, "MFCC frame must hold exactly 16000 samples");
  }
  for (float s : frame) {
    if (!std::isfinite(s)) throw Error(ErrorCode::kNonFinite, "non-finite sample in frame");
  }
  const MfccTables& t = Tables();
  thread_local Eigen::FFT<float> fft;
  std::vector<float> buf(kFftSize);
  std::vector<std::complex<float>> spec;
  Eigen::VectorXf power(kFftSize / 2 + 1);
  MfccMap out;
  for (int r = 0; r < kMfccFrames; ++r) {
    const std::size_t off = static_cast<std::size_t>(r) * kHopSamples;
    for (int i = 0; i < kFftSize; ++i) buf[i] = frame[off + i] * t.window[i];
    fft.fwd(spec, buf);
    for (int k = 0; k <= kFftSize / 2; ++k) power[k] = std::norm(spec[k]);
    Eigen::VectorXf logmel = (t.mel * power).array().max(static_cast<float>(kLogFloor)).log();
    out.values.row(r) = (t.dct * logmel).transpose();
  }
  return out;
}

std::vector<MfccMap> ClipMfccs(const AudioClip& clip, const FrameWindow& win) {
  std::vector<MfccMap> maps;
  for (const auto& w : SlidingWindows(clip, win)) {
    MfccMap m = ComputeMfcc(PreEmphasizeAndCenter(w.samples));
    m.source_clip_id = clip.clip_id;
    m.window_start_s = w.start_s;
    maps.push_back(std::move(m));
  }
  return maps;
}

std::size_t MaxEnergyWindow(const AudioClip& clip, const FrameWindow& win) {
  const auto windows = SlidingWindows(clip, win);
  std::vector<double> prefix(clip.samples.size() + 1, 0.0);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    prefix[i + 1] = prefix[i] + static_cast<double>(clip.samples[i]) * clip.samples[i];
  }
  const auto stride = static_cast<std::size_t>(win.stride_samples());
  std::size_t best = 0;
  double best_e = -1.0;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const double e = prefix[k * stride + kWindowSamples] - prefix[k * stride];
    if (e > best_e) {
      best_e = e;
      best = k;
    }
  }
  return best;
}

ClipFeatures Featurize(const AudioClip& clip, const FrameWindow& win) {
  ValidateClip(clip);
  ClipFeatures f;
  f.clip_id = clip.clip_id;
  f.true_label = clip.true_label;
  f.speaker_id = clip.speaker_id;
  f.class_index = clip.class_index;
  f.duration_s = clip.duration_s();
  f.maps = ClipMfccs(clip, win);
  f.keyword_window = MaxEnergyWindow(clip, win);
  return f;
}

std::vector<ClipFeatures> FeaturizeAll(std::span<const AudioClip> clips, const FrameWindow& win) {
  std::vector<ClipFeatures> out;
  out.reserve(clips.size());
  for (const auto& c : clips) out.push_back(Featurize(c, win));
  return out;
}

MfccMatrix RoundToHalf(const MfccMatrix& m) {
  return m.unaryExpr([](float v) { return static_cast<float>(Eigen::half(v)); });
}

void WriteMfccMap(const MfccMap& map, const std::filesystem::path& path) {
  std::string s = "SKMF";
  auto put16 = [&s](std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>(v >> 8));
  };
  put16(kMfccFrames);
  put16(kMfccCoeffs);
  put16(1);
  put16(0);
  for (int r = 0; r < kMfccFrames; ++r) {
    for (int c = 0; c < kMfccCoeffs; ++c) {
      put16(Eigen::numext::bit_cast<std::uint16_t>(Eigen::half(map.values(r, c))));
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

MfccMap ReadMfccMap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "missing file: " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  auto get16 = [&buf](std::size_t at) {
    return static_cast<std::uint16_t>(buf[at] | (buf[at + 1] << 8));
  };
  if (buf.size() != 12 + kMfccPayloadBytes || std::memcmp(buf.data(), "SKMF", 4) != 0 ||
      get16(4) != kMfccFrames || get16(6) != kMfccCoeffs || get16(8) != 1) {
    throw Error(ErrorCode::kBadFormat, path.string() + ": not an MFCC map file");
  }
  MfccMap map;
  std::size_t at = 12;
  for (int r = 0; r < kMfccFrames; ++r) {
    for (int c = 0; c < kMfccCoeffs; ++c, at += 2) {
      map.values(r, c) =
          static_cast<float>(Eigen::numext::bit_cast<Eigen::half>(get16(at)));
    }
  }
  return map;
}

}  // namespace skws
