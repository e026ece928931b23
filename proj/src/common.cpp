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

#include "skws/common.hpp"

namespace skws {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kParseError: return "parse_error";
    case ErrorCode::kMissingFile: return "missing_file";
    case ErrorCode::kDuplicatePath: return "duplicate_path";
    case ErrorCode::kBadSampleRate: return "bad_sample_rate";
    case ErrorCode::kBadFormat: return "bad_format";
    case ErrorCode::kClipTooShort: return "clip_too_short";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kDimMismatch: return "dim_mismatch";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kCorruptCheckpoint: return "corrupt_checkpoint";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kArchMismatch: return "arch_mismatch";
    case ErrorCode::kTapeMismatch: return "tape_mismatch";
    case ErrorCode::kInsufficientPositives: return "insufficient_positives";
    case ErrorCode::kRealtimeViolation: return "realtime_violation";
    case ErrorCode::kNoiseTooShort: return "noise_too_short";
    case ErrorCode::kZeroPower: return "zero_power";
    case ErrorCode::kIoError: return "io_error";
  }
  return "unknown";
}

std::string_view ToString(Label label) {
  return label == Label::kPositive ? "positive" : "negative";
}

Label ParseLabel(std::string_view text) {
  if (text == "positive" || text == "pos") return Label::kPositive;
  if (text == "negative" || text == "neg") return Label::kNegative;
  throw Error(ErrorCode::kParseError, "unknown label '" + std::string(text) + "'");
}

}  // namespace skws
