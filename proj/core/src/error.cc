// Copyright 2026 The ctrnas Authors.
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

#include "ctrnas/error.h"

namespace ctrnas {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidArchitecture: return "invalid-architecture";
    case ErrorCode::kMalformedVector: return "malformed-vector";
    case ErrorCode::kExhausted: return "exhausted";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kTooFewRecords: return "too-few-records";
    case ErrorCode::kDegenerateLabels: return "degenerate-labels";
    case ErrorCode::kUnknownName: return "unknown-name";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kLabelDomain: return "label-domain";
    case ErrorCode::kRowsExceedSize: return "rows-exceed-size";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kWindowTooLarge: return "window-too-large";
    case ErrorCode::kSingleClass: return "single-class";
    case ErrorCode::kEmptyPopulation: return "empty-population";
    case ErrorCode::kDoubleClear: return "double-clear";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

}  // namespace ctrnas
