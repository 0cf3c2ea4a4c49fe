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

#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdai/domain/domain.hpp"

namespace sdai {

/// Largest k >= 0 with k * model.vram_per_instance + Σ(already_placed) <=
/// EffectiveVram(gpu). Throws Error(kGpuDisabled) for a disabled GPU.
std::int64_t MaxInstances(const GpuDevice &gpu, const ModelSpec &model,
                          std::span<const ModelSpec> already_placed);
/// Same rule with the already placed VRAM given as a sum.
std::int64_t MaxInstancesWithUsed(const GpuDevice &gpu, const ModelSpec &model, Mib used);

enum class ViolationKind {
  kVramExceeded,
  kUnknownModel,
  kUnknownGpu,
  kGpuDisabled,
  kAgentUnavailable,
  kDuplicateInstance,
};
std::string_view ToString(ViolationKind kind);

struct PlanViolation {
  ViolationKind kind;
  std::string subject;
  std::string detail;

  bool operator==(const PlanViolation &) const = default;
};

/// Thrown by operations whose precondition is a valid plan.
class InfeasiblePlanError : public Error {
 public:
  explicit InfeasiblePlanError(std::vector<PlanViolation> violations);
  const std::vector<PlanViolation> &violations() const { return violations_; }

 private:
  std::vector<PlanViolation> violations_;
};

/// Checks VRAM feasibility per GPU, referential integrity (known model, known
/// and enabled GPU, agent not unavailable) and instance uniqueness. Returns
/// violations sorted by (subject, kind); empty means the plan is valid.
std::vector<PlanViolation> ValidatePlan(const PlacementPlan &plan, const FleetManifest &manifest,
                                        const ModelCatalog &catalog,
                                        const std::set<std::string> &unavailable_agents = {});

/// Throws InfeasiblePlanError when ValidatePlan is non-empty.
void RequireValidPlan(const PlacementPlan &plan, const FleetManifest &manifest,
                      const ModelCatalog &catalog);

struct GpuCapacity {
  std::string agent_name;
  std::string gpu_id;
  Mib effective = 0;
  Mib used = 0;
  Mib free = 0;
  std::map<std::string, std::int64_t> max_additional;  // model_id -> count
};

struct CapacityReport {
  std::vector<GpuCapacity> rows;  // one per enabled GPU, manifest order

  const GpuCapacity *Find(std::string_view agent_name, std::string_view gpu_id) const;
};

CapacityReport BuildCapacityReport(const PlacementPlan &plan, const FleetManifest &manifest,
                                   const ModelCatalog &catalog);

struct ModelCount {
  std::string model_id;
  int count = 0;
  bool operator==(const ModelCount &) const = default;
};

struct ReallocationResult {
  PlacementPlan plan;
  std::vector<ModelCount> unplaced;  // sorted by model_id
};

/// Removes every assignment on `failed_agent` and re-places each lost
/// instance on the surviving enabled GPU with the most free VRAM that fits,
/// ties broken by (agent_name, gpu_id). Replica indices are renumbered
/// densely per (model, agent, gpu). Throws Error(kUnknownAgent).
ReallocationResult ReallocateOnFailure(const PlacementPlan &plan, const FleetManifest &manifest,
                                       const ModelCatalog &catalog,
                                       const std::string &failed_agent);

struct AgentDistribution {
  int instances = 0;
  int gpus = 0;
  Mib free_vram = 0;
  bool operator==(const AgentDistribution &) const = default;
};

struct DistributionSummary {
  int total_agents = 0;
  int total_instances = 0;
  int distinct_models = 0;
  std::map<std::string, int> per_model;
  std::map<std::string, AgentDistribution> per_agent;
  bool operator==(const DistributionSummary &) const = default;
};

DistributionSummary BuildDistributionSummary(const PlacementPlan &plan,
                                             const FleetManifest &manifest,
                                             const ModelCatalog &catalog);

/// Sorts assignments by (agent, gpu, model, replica) and rewrites replica
/// indices to 0..k-1 per (model, agent, gpu), regenerating instance ids.
void NormalizeReplicas(PlacementPlan &plan);

}  // namespace sdai
