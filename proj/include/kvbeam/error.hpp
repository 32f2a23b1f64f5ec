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

#pragma once

#include <stdexcept>
#include <string>

namespace kvbeam {

// Error categories. The numeric values are mirrored by kvb_status in kvbeam.h.
enum class ErrorCode : int {
  kConfiguration = 1,
  kHypothesis = 2,
  kDomain = 3,
  kAccuracy = 4,
  kDivergence = 5,
  kFit = 6,
  kSolver = 7,
  kCapability = 8,
  kInstability = 9,
  kInput = 10,
  kOnSpectrum = 11,
  kIo = 12,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kvbeam
