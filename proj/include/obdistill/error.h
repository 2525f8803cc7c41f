/*
 * Copyright 2026 The obdistill Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef OBDISTILL_ERROR_H_
#define OBDISTILL_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace obdistill {

enum class ErrorCode {
  kInvalidArgument,
  kArityMismatch,
  kNonFiniteValue,
  kEnvironmentFault,
  kParseError,
  kDimensionMismatch,
  kUnknownActivation,
  kNotStochastic,
  kEmptyProbe,
  kArityTooSmall,
  kEmptyDataset,
  kNoUsefulSplit,
  kSingleLeafTree,
  kQUnavailable,
  kSpecMismatch,
  kNameArityMismatch,
  kSyntaxError,
  kUnknownFeatureName,
  kUnknownActionName,
  kIoError,
};

// Stable identifier used in machine-readable error reports.
std::string_view ToString(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace obdistill

#endif  // OBDISTILL_ERROR_H_
