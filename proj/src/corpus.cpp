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

#include "skws/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "skws/rng.hpp"

namespace skws {

namespace fs = std::filesystem;
using nlohmann::json;

void ValidateClip(const AudioClip& clip) {
  if (clip.sample_rate != kSampleRate) {
    throw Error(ErrorCode::kBadSampleRate,
                "clip '" + clip.clip_id + "' has sample rate " +
                    std::to_string(clip.sample_rate) + ", expected 16000");
  }
  if (clip.samples.empty()) {
    throw Error(ErrorCode::kEmptyInput, "clip '" + clip.clip_id + "' is empty");
  }
  for (float s : clip.samples) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kNonFinite,
                  "clip '" + clip.clip_id + "' has non-finite samples");
    }
  }
}

std::string_view ToString(Split split) {
  switch (split) {
    case Split::kAdaptation: return "adaptation";
    case Split::kTest: return "test";
    case Split::kUserEnroll: return "user_enroll";
    case Split::kUserNeg: return "user_neg";
  }
  return "adaptation";
}

Split ParseSplit(std::string_view text) {
  if (text == "adaptation") return Split::kAdaptation;
  if (text == "test") return Split::kTest;
  if (text == "user_enroll") return Split::kUserEnroll;
  if (text == "user_neg") return Split::kUserNeg;
  throw Error(ErrorCode::kParseError, "unknown split '" + std::string(text) + "'");
}

std::size_t Manifest::CountSplit(Split split) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(),
      [split](const ManifestEntry& e) { return e.split == split; }));
}

void ValidateManifest(const Manifest& manifest, int k_enroll) {
  std::set<std::string> seen;
  std::unordered_map<std::string, int> enroll_count;
  for (const auto& e : manifest.entries) {
    if (!seen.insert(e.path).second) {
      throw Error(ErrorCode::kDuplicatePath, "duplicate clip path '" + e.path + "'");
    }
    if (e.split == Split::kUserEnroll) ++enroll_count[e.speaker_id];
  }
  for (const auto& [speaker, n] : enroll_count) {
    if (n != k_enroll) {
      throw Error(ErrorCode::kInvalidArgument,
                  "speaker '" + speaker + "' has " + std::to_string(n) +
                      " user_enroll entries, expected " + std::to_string(k_enroll));
    }
  }
}

Manifest LoadManifest(const fs::path& path, int k_enroll, bool check_files) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "missing file: " + path.string());
  Manifest manifest;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.label = ParseLabel(j.at("label").get<std::string>());
      e.speaker_id = j.value("speaker_id", std::string());
      e.split = ParseSplit(j.at("split").get<std::string>());
      if (j.contains("sample_rate") && j["sample_rate"].get<int>() != kSampleRate) {
        throw Error(ErrorCode::kBadSampleRate,
                    "manifest line " + std::to_string(line_no) +
                        ": declared sample rate " +
                        std::to_string(j["sample_rate"].get<int>()));
      }
      manifest.entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kParseError, "manifest line " + std::to_string(line_no) +
                                              ": " + ex.what());
    }
  }
  ValidateManifest(manifest, k_enroll);
  if (check_files) {
    const fs::path base = path.parent_path();
    for (const auto& e : manifest.entries) {
      fs::path p = e.path;
      if (p.is_relative()) p = base / p;
      if (!fs::exists(p)) throw Error(ErrorCode::kMissingFile, "missing file: " + p.string());
    }
  }
  return manifest;
}

void SaveManifest(const Manifest& manifest, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  for (const auto& e : manifest.entries) {
    json j = {{"path", e.path},
              {"label", std::string(ToString(e.label))},
              {"speaker_id", e.speaker_id},
              {"split", std::string(ToString(e.split))}};
    out << j.dump() << '\n';
  }
}

namespace {

std::uint32_t ReadU32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void PutU32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutU16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

AudioClip ReadWav(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "missing file: " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  auto bad = [&](const std::string& why) {
    return Error(ErrorCode::kBadFormat, path.string() + ": " + why);
  };
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw bad("not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  int channels = 0, rate = 0, bits = 0, format = 0;
  while (pos + 8 <= buf.size()) {
    const unsigned char* chunk = buf.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > buf.size()) throw bad("truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw bad("short fmt chunk");
      format = ReadU16(buf.data() + body);
      channels = ReadU16(buf.data() + body + 2);
      rate = static_cast<int>(ReadU32(buf.data() + body + 4));
      bits = ReadU16(buf.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw bad("data before fmt");
      if (format != 1 || bits != 16) throw bad("only 16-bit PCM is supported");
      if (channels != 1) throw bad("only mono is supported");
      if (rate != kSampleRate) {
        throw Error(ErrorCode::kBadSampleRate,
                    path.string() + ": sample rate " + std::to_string(rate));
      }
      AudioClip clip;
      clip.sample_rate = rate;
      clip.clip_id = path.stem().string();
      clip.samples.resize(size / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(ReadU16(buf.data() + body + 2 * i));
        clip.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      if (clip.samples.empty()) throw bad("empty data chunk");
      return clip;
    }
    pos = body + size + (size & 1u);
  }
  throw bad("no data chunk");
}

void WriteWav(const AudioClip& clip, const fs::path& path) {
  std::string s;
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  s += "RIFF";
  PutU32(s, 36 + 2 * n);
  s += "WAVEfmt ";
  PutU32(s, 16);
  PutU16(s, 1);
  PutU16(s, 1);
  PutU32(s, static_cast<std::uint32_t>(clip.sample_rate));
  PutU32(s, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  PutU16(s, 2);
  PutU16(s, 16);
  s += "data";
  PutU32(s, 2 * n);
  for (float x : clip.samples) {
    const float c = std::clamp(x, -1.0f, 32767.0f / 32768.0f);
    PutU16(s, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32768.0f))));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::vector<AudioClip> LoadClips(const Manifest& manifest, const fs::path& base_dir,
                                 std::optional<Split> only) {
  std::vector<AudioClip> clips;
  for (const auto& e : manifest.entries) {
    if (only && e.split != *only) continue;
    fs::path p = e.path;
    if (p.is_relative()) p = base_dir / p;
    AudioClip clip = ReadWav(p);
    clip.clip_id = e.path;
    clip.true_label = e.label;
    if (!e.speaker_id.empty()) clip.speaker_id = e.speaker_id;
    clips.push_back(std::move(clip));
  }
  return clips;
}

void ValidateSynthSpec(const SynthSpec& spec) {
  auto fail = [](const std::string& why) {
    throw Error(ErrorCode::kInvalidArgument, "synth spec: " + why);
  };
  if (spec.n_pretrain_classes < 0 || spec.n_clips_per_class < 0) fail("negative counts");
  if (spec.clip_duration_range_s.first < 1.0) fail("clip durations must be >= 1.0 s");
  if (spec.clip_duration_range_s.second < spec.clip_duration_range_s.first) {
    fail("empty duration range");
  }
  if (spec.n_target_speakers < 0 || spec.n_target_clips_per_speaker < 0 ||
      spec.n_negative_clips < 0) {
    fail("negative counts");
  }
  if (spec.confuser_fraction < 0.0 || spec.confuser_fraction > 1.0) {
    fail("confuser_fraction outside [0,1]");
  }
  if (spec.speaker_spread < 0.0 || spec.speaker_spread >= 0.5) {
    fail("speaker_spread outside [0,0.5)");
  }
  if (spec.n_units < 0) fail("n_units must be >= 0");
}

namespace {

struct Burst {
  double f_start;  // Hz
  double f_end;    // Hz
  double onset;    // s, relative to keyword start
  double length;   // s
  double gain;
};

constexpr double kMaxKeywordLength = 0.8;

// Burst shapes shared by every word, like the phone set of a language.
std::vector<Burst> UnitInventory(std::uint64_t pattern_seed, int n_units) {
  Rng rng(MixSeed(pattern_seed, 0x756e6974u));
  std::vector<Burst> units(static_cast<std::size_t>(n_units));
  for (auto& u : units) {
    u.f_start = std::exp(rng.Uniform(std::log(300.0), std::log(3500.0)));
    u.f_end = u.f_start * std::exp(rng.Uniform(std::log(0.7), std::log(1.4)));
    u.length = rng.Uniform(0.07, 0.14);
    u.onset = 0.0;
    u.gain = 1.0;
  }
  return units;
}

// A word of n bursts: free-form shapes, or drawn from `units` when non-empty.
std::vector<Burst> RandomBursts(Rng& rng, int n, const std::vector<Burst>& units = {}) {
  std::vector<Burst> bursts;
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    Burst b;
    if (units.empty()) {
      b.f_start = std::exp(rng.Uniform(std::log(300.0), std::log(3500.0)));
      b.f_end = b.f_start * std::exp(rng.Uniform(std::log(0.7), std::log(1.4)));
      b.length = rng.Uniform(0.07, 0.14);
    } else {
      b = units[static_cast<std::size_t>(rng.UniformInt(0, static_cast<int>(units.size()) - 1))];
    }
    b.gain = rng.Uniform(0.6, 1.0);
    b.onset = t;
    t += b.length + rng.Uniform(0.02, 0.05);
    bursts.push_back(b);
  }
  const double total = bursts.back().onset + bursts.back().length;
  if (total > kMaxKeywordLength) {
    const double s = kMaxKeywordLength / total;
    for (auto& b : bursts) {
      b.onset *= s;
      b.length *= s;
    }
  }
  return bursts;
}

std::vector<Burst> ClassPattern(const SynthSpec& spec, int class_index) {
  Rng rng(MixSeed(spec.keyword_pattern_seed, 0x6b6579u, static_cast<std::uint64_t>(class_index)));
  const auto units = UnitInventory(spec.keyword_pattern_seed, spec.n_units);
  return RandomBursts(rng, rng.UniformInt(3, 5), units);
}

double PatternLength(const std::vector<Burst>& bursts) {
  double end = 0.0;
  for (const auto& b : bursts) end = std::max(end, b.onset + b.length);
  return end;
}

// Renders bursts (with pitch and tempo factors) into `out` starting at `offset`.
void RenderBursts(const std::vector<Burst>& bursts, double pitch, double tempo,
                  double amplitude, double offset, std::vector<float>& out) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (const auto& b : bursts) {
    const double len = b.length * tempo;
    const auto n = static_cast<std::size_t>(len * kSampleRate);
    const auto start = static_cast<std::size_t>((offset + b.onset * tempo) * kSampleRate);
    double phase = 0.0;
    for (std::size_t i = 0; i < n && start + i < out.size(); ++i) {
      const double frac = static_cast<double>(i) / static_cast<double>(n);
      const double f = pitch * (b.f_start + (b.f_end - b.f_start) * frac);
      phase += kTwoPi * f / kSampleRate;
      const double env = 0.5 - 0.5 * std::cos(kTwoPi * frac);
      const double v = std::sin(phase) + 0.3 * std::sin(2.0 * phase);
      out[start + i] += static_cast<float>(amplitude * b.gain * env * v);
    }
  }
}

std::vector<float> NoiseBed(double duration_s, double floor_db, Rng& rng) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * kSampleRate));
  const double rms = std::pow(10.0, floor_db / 20.0);
  std::vector<float> out(n);
  for (auto& s : out) s = static_cast<float>(rms * rng.Normal());
  return out;
}

double DrawDuration(const SynthSpec& spec, Rng& rng) {
  const auto [lo, hi] = spec.clip_duration_range_s;
  // Whole samples, clamped back into range after rounding.
  const double d = lo == hi ? lo : rng.Uniform(lo, hi);
  const double n = std::floor(d * kSampleRate);
  return std::clamp(n / kSampleRate, lo, hi);
}

}  // namespace

AudioClip RenderKeyword(const SynthSpec& spec, int class_index, double duration_s,
                        double pitch, double tempo, std::uint64_t seed) {
  Rng rng(seed);
  const auto pattern = ClassPattern(spec, class_index);
  AudioClip clip;
  clip.samples = NoiseBed(duration_s, spec.noise_floor_db, rng);
  const double p = pitch * rng.Uniform(0.97, 1.03);
  const double t = std::min(tempo * rng.Uniform(0.95, 1.05), 0.98 / kMaxKeywordLength);
  const double len = PatternLength(pattern) * t;
  const double offset = rng.Uniform(0.0, std::max(0.0, duration_s - len - 0.01));
  RenderBursts(pattern, p, t, rng.Uniform(0.3, 0.6), offset, clip.samples);
  clip.class_index = class_index;
  return clip;
}

SyntheticCorpus GenerateSyntheticCorpus(const SynthSpec& spec) {
  ValidateSynthSpec(spec);
  SyntheticCorpus corpus;
  const double spread = spec.speaker_spread;

  for (int c = 0; c < spec.n_pretrain_classes; ++c) {
    for (int i = 0; i < spec.n_clips_per_class; ++i) {
      Rng rng(MixSeed(spec.rng_seed, 1, static_cast<std::uint64_t>(c) * 100000 + i));
      const double dur = DrawDuration(spec, rng);
      const double pitch = 1.0 + rng.Uniform(-spread, spread);
      const double tempo = 1.0 + rng.Uniform(-spread, spread);
      AudioClip clip = RenderKeyword(spec, c, dur, pitch, tempo, rng.NextU64());
      clip.clip_id = "pre_c" + std::to_string(c) + "_" + std::to_string(i);
      clip.speaker_id = "pre" + std::to_string(i % 10);
      corpus.pretrain.push_back(std::move(clip));
    }
  }

  const int target_class = spec.n_pretrain_classes;
  for (int s = 0; s < spec.n_target_speakers; ++s) {
    Rng speaker_rng(MixSeed(spec.rng_seed, 2, static_cast<std::uint64_t>(s)));
    const double pitch = 1.0 + speaker_rng.Uniform(-spread, spread);
    const double tempo = 1.0 + speaker_rng.Uniform(-spread, spread);
    for (int i = 0; i < spec.n_target_clips_per_speaker; ++i) {
      Rng rng(MixSeed(spec.rng_seed, 3, static_cast<std::uint64_t>(s) * 100000 + i));
      const double dur = DrawDuration(spec, rng);
      AudioClip clip = RenderKeyword(spec, target_class, dur, pitch, tempo, rng.NextU64());
      clip.clip_id = "kw_s" + std::to_string(s) + "_" + std::to_string(i);
      clip.speaker_id = "spk" + std::to_string(s);
      clip.true_label = Label::kPositive;
      corpus.target.push_back(std::move(clip));
    }
  }

  const auto target_pattern = ClassPattern(spec, target_class);
  const auto units = UnitInventory(spec.keyword_pattern_seed, spec.n_units);
  for (int i = 0; i < spec.n_negative_clips; ++i) {
    Rng rng(MixSeed(spec.rng_seed, 4, static_cast<std::uint64_t>(i)));
    const double dur = DrawDuration(spec, rng);
    AudioClip clip;
    clip.samples = NoiseBed(dur, spec.noise_floor_db, rng);
    auto bursts = RandomBursts(rng, rng.UniformInt(2, 6), units);
    if (rng.Uniform(0.0, 1.0) < spec.confuser_fraction) {
      // Borrow one or two keyword bursts in place of random ones.
      const int n_borrow = rng.UniformInt(1, 2);
      for (int k = 0; k < n_borrow; ++k) {
        auto& dst = bursts[static_cast<std::size_t>(
            rng.UniformInt(0, static_cast<int>(bursts.size()) - 1))];
        const auto& src = target_pattern[static_cast<std::size_t>(
            rng.UniformInt(0, static_cast<int>(target_pattern.size()) - 1))];
        dst.f_start = src.f_start;
        dst.f_end = src.f_end;
      }
    }
    const double len = PatternLength(bursts);
    const double offset = rng.Uniform(0.0, std::max(0.0, dur - len - 0.01));
    RenderBursts(bursts, 1.0, 1.0, rng.Uniform(0.3, 0.6), offset, clip.samples);
    clip.clip_id = "neg_" + std::to_string(i);
    clip.true_label = Label::kNegative;
    corpus.negative.push_back(std::move(clip));
  }
  return corpus;
}

AudioClip GenerateColoredNoise(double duration_s, double rms, std::uint64_t seed) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * kSampleRate));
  AudioClip clip;
  clip.samples.resize(n);
  double y = 0.0;
  for (auto& s : clip.samples) {
    y = 0.98 * y + rng.Normal();
    s = static_cast<float>(y);
  }
  const double p = SignalPower(clip.samples);
  const double g = p > 0.0 ? rms / std::sqrt(p) : 0.0;
  for (auto& s : clip.samples) s = static_cast<float>(s * g);
  clip.clip_id = "colored_noise_" + std::to_string(seed);
  return clip;
}

double SignalPower(const std::vector<float>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (float s : samples) acc += static_cast<double>(s) * s;
  return acc / static_cast<double>(samples.size());
}

AudioClip AugmentWithNoise(const AudioClip& clip, const AudioClip& noise, double snr_db,
                           std::uint64_t rng_seed) {
  if (!std::isfinite(snr_db)) throw Error(ErrorCode::kInvalidArgument, "snr_db not finite");
  if (noise.samples.size() < clip.samples.size()) {
    throw Error(ErrorCode::kNoiseTooShort, "noise clip shorter than signal clip");
  }
  Rng rng(rng_seed);
  const std::size_t n = clip.samples.size();
  const auto start = static_cast<std::size_t>(
      rng.UniformInt(0, static_cast<int>(noise.samples.size() - n)));
  const std::vector<float> segment(noise.samples.begin() + static_cast<std::ptrdiff_t>(start),
                                   noise.samples.begin() + static_cast<std::ptrdiff_t>(start + n));
  const double ps = SignalPower(clip.samples);
  const double pn = SignalPower(segment);
  if (ps <= 0.0 || pn <= 0.0) throw Error(ErrorCode::kZeroPower, "zero-power signal or noise");
  const double gain = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  AudioClip out = clip;
  for (std::size_t i = 0; i < n; ++i) {
    out.samples[i] = static_cast<float>(clip.samples[i] + gain * segment[i]);
  }
  out.clip_id = clip.clip_id + "+noise";
  return out;
}

std::vector<AudioClip> AugmentSet(const std::vector<AudioClip>& clips,
                                  const std::vector<AudioClip>& noises, int per_clip,
                                  double snr_lo, double snr_hi, std::uint64_t rng_seed) {
  if (noises.empty()) throw Error(ErrorCode::kEmptyInput, "no noise clips");
  Rng rng(rng_seed);
  std::vector<AudioClip> out;
  out.reserve(clips.size() * static_cast<std::size_t>(per_clip));
  for (const auto& clip : clips) {
    for (int k = 0; k < per_clip; ++k) {
      const auto& noise =
          noises[static_cast<std::size_t>(rng.UniformInt(0, static_cast<int>(noises.size()) - 1))];
      const double snr = rng.Uniform(snr_lo, snr_hi);
      AudioClip a = AugmentWithNoise(clip, noise, snr, rng.NextU64());
      a.clip_id = clip.clip_id + "+aug" + std::to_string(k);
      out.push_back(std::move(a));
    }
  }
  return out;
}

}  // namespace skws
