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

#include "sdai/common/error.hpp"

namespace sdai {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kGpuDisabled: return "GpuDisabled";
    case ErrorCode::kInfeasiblePlan: return "InfeasiblePlan";
    case ErrorCode::kUnknownAgent: return "UnknownAgent";
    case ErrorCode::kUnknownGpu: return "UnknownGpu";
    case ErrorCode::kUnknownModel: return "UnknownModel";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kPortCollision: return "PortCollision";
    case ErrorCode::kMainAgentConflict: return "MainAgentConflict";
    case ErrorCode::kAgentUnavailable: return "AgentUnavailable";
    case ErrorCode::kDeployRejected: return "DeployRejected";
    case ErrorCode::kWrongStage: return "WrongStage";
    case ErrorCode::kAgentNotSelected: return "AgentNotSelected";
    case ErrorCode::kExceedsCapacity: return "ExceedsCapacity";
    case ErrorCode::kGpuNotEnabled: return "GpuNotEnabled";
    case ErrorCode::kUnknownModelInPlan: return "UnknownModelInPlan";
    case ErrorCode::kEmptyPlan: return "EmptyPlan";
    case ErrorCode::kVersionConflict: return "VersionConflict";
    case ErrorCode::kCorruptStore: return "CorruptStore";
    case ErrorCode::kNoHealthyReplica: return "NoHealthyReplica";
    case ErrorCode::kRegistrationFailed: return "RegistrationFailed";
    case ErrorCode::kPortBindFailure: return "PortBindFailure";
    case ErrorCode::kTransport: return "TransportError";
  }
  return "Unknown";
}

}  // namespace sdai
