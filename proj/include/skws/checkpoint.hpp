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

#ifndef SKWS_CHECKPOINT_HPP_
#define SKWS_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "skws/encoder.hpp"

namespace skws {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout: "SKWSCKPT" | u32 version | u32 descriptor length | descriptor JSON |
// u64 weight count | f32 weights (little-endian) | u32 CRC32 of all preceding bytes.
void SaveCheckpoint(const EncoderState& enc, const std::filesystem::path& path);

/// Throws kCorruptCheckpoint, kVersionMismatch, or kArchMismatch when
/// `expected_arch` is given and differs from the stored architecture.
EncoderState LoadCheckpoint(const std::filesystem::path& path,
                            std::optional<std::string> expected_arch = std::nullopt);

nlohmann::json ArchToJson(const ArchDescriptor& arch);
ArchDescriptor ArchFromJson(const nlohmann::json& j);

}  // namespace skws

#endif  // SKWS_CHECKPOINT_HPP_
