// Copyright 2026 The SDAI Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdai {

enum class ErrorCode {
  kParse,
  kValidation,
  kGpuDisabled,
  kInfeasiblePlan,
  kUnknownAgent,
  kUnknownGpu,
  kUnknownModel,
  kUnknownSession,
  kPortCollision,
  kMainAgentConflict,
  kAgentUnavailable,
  kDeployRejected,
  kWrongStage,
  kAgentNotSelected,
  kExceedsCapacity,
  kGpuNotEnabled,
  kUnknownModelInPlan,
  kEmptyPlan,
  kVersionConflict,
  kCorruptStore,
  kNoHealthyReplica,
  kRegistrationFailed,
  kPortBindFailure,
  kTransport,
};

/// Stable wire name of an error code, e.g. "ExceedsCapacity".
std::string_view ErrorCodeName(ErrorCode code);

/// Base of every error raised by the library. The code is what callers and
/// the HTTP layer dispatch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sdai
