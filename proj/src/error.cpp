// Copyright 2026 The PD-ADSV Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pdadsv/error.hpp"

namespace pdadsv {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedContainer: return "malformed_container";
    case ErrorCode::kUnsupportedEncoding: return "unsupported_encoding";
    case ErrorCode::kEmptyAudio: return "empty_audio";
    case ErrorCode::kClipTooShortForFrame: return "clip_too_short_for_frame";
    case ErrorCode::kNonPowerOfTwoLength: return "non_power_of_two_length";
    case ErrorCode::kInvalidFrequencyRange: return "invalid_frequency_range";
    case ErrorCode::kInvalidConfig: return "invalid_config";
    case ErrorCode::kSilentSignal: return "silent_signal";
    case ErrorCode::kClipTooShort: return "clip_too_short";
    case ErrorCode::kMissingColumn: return "missing_column";
    case ErrorCode::kNonNumericValue: return "non_numeric_value";
    case ErrorCode::kReplicationMismatch: return "replication_mismatch";
    case ErrorCode::kInconsistentLabel: return "inconsistent_label";
    case ErrorCode::kEmptyDataset: return "empty_dataset";
    case ErrorCode::kTooFewSubjects: return "too_few_subjects";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kSingleClassDataset: return "single_class_dataset";
    case ErrorCode::kInvalidFractions: return "invalid_fractions";
    case ErrorCode::kInvalidVote: return "invalid_vote";
    case ErrorCode::kEmptyEvaluation: return "empty_evaluation";
    case ErrorCode::kUnsupportedVersion: return "unsupported_version";
    case ErrorCode::kSchemaViolation: return "schema_violation";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

}  // namespace pdadsv
