// Copyright 2026 The kvbeam Authors
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

#include "kvbeam/error.hpp"

namespace kvbeam {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kHypothesis: return "hypothesis";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kAccuracy: return "accuracy";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kFit: return "fit";
    case ErrorCode::kSolver: return "solver";
    case ErrorCode::kCapability: return "capability";
    case ErrorCode::kInstability: return "instability";
    case ErrorCode::kInput: return "input";
    case ErrorCode::kOnSpectrum: return "on-spectrum";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace kvbeam
