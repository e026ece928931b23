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

#ifndef SKWS_COMMON_HPP_
#define SKWS_COMMON_HPP_

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace skws {

enum class ErrorCode {
  kInvalidArgument,
  kParseError,
  kMissingFile,
  kDuplicatePath,
  kBadSampleRate,
  kBadFormat,
  kClipTooShort,
  kNonFinite,
  kDimMismatch,
  kEmptyInput,
  kCorruptCheckpoint,
  kVersionMismatch,
  kArchMismatch,
  kTapeMismatch,
  kInsufficientPositives,
  kRealtimeViolation,
  kNoiseTooShort,
  kZeroPower,
  kIoError,
};

std::string_view ToString(ErrorCode code);

// Every failure surfaced by the library carries a machine-readable code so the
// CLI can report it as JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

enum class Label { kPositive, kNegative };

std::string_view ToString(Label label);
Label ParseLabel(std::string_view text);

inline constexpr int kSampleRate = 16000;

}  // namespace skws

#endif  // SKWS_COMMON_HPP_
