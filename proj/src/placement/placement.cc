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

#include "sdai/placement/placement.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <tuple>

namespace sdai {

namespace {

using GpuKey = std::pair<std::string, std::string>;

std::string GpuSubject(const std::string &agent, const std::string &gpu) {
  return "gpus/" + agent + "/" + gpu;
}

std::string InfeasibleMessage(const std::vector<PlanViolation> &violations) {
  std::string msg = "plan is infeasible:";
  for (const auto &v : violations) {
    msg += " [" + std::string(ToString(v.kind)) + " " + v.subject + "]";
  }
  return msg;
}

// Σ v_m per GPU over assignments whose model is known.
std::map<GpuKey, Mib> UsedByGpu(const PlacementPlan &plan, const ModelCatalog &catalog) {
  std::map<GpuKey, Mib> used;
  for (const auto &a : plan.assignments) {
    if (const ModelSpec *m = catalog.Find(a.model_id)) {
      used[{a.agent_name, a.gpu_id}] += m->vram_per_instance;
    }
  }
  return used;
}

}  // namespace

std::int64_t MaxInstancesWithUsed(const GpuDevice &gpu, const ModelSpec &model, Mib used) {
  if (!gpu.enabled) {
    throw Error(ErrorCode::kGpuDisabled, "gpu '" + gpu.gpu_id + "' is disabled");
  }
  if (model.vram_per_instance <= 0) {
    throw Error(ErrorCode::kValidation, "model '" + model.model_id + "' has non-positive VRAM");
  }
  const Mib free = EffectiveVram(gpu) - used;
  if (free <= 0) return 0;
  return free / model.vram_per_instance;
}

std::int64_t MaxInstances(const GpuDevice &gpu, const ModelSpec &model,
                          std::span<const ModelSpec> already_placed) {
  Mib used = 0;
  for (const auto &m : already_placed) used += m.vram_per_instance;
  return MaxInstancesWithUsed(gpu, model, used);
}

std::string_view ToString(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kVramExceeded: return "VRAM_EXCEEDED";
    case ViolationKind::kUnknownModel: return "UNKNOWN_MODEL";
    case ViolationKind::kUnknownGpu: return "UNKNOWN_GPU";
    case ViolationKind::kGpuDisabled: return "GPU_DISABLED";
    case ViolationKind::kAgentUnavailable: return "AGENT_UNAVAILABLE";
    case ViolationKind::kDuplicateInstance: return "DUPLICATE_INSTANCE";
  }
  return "UNKNOWN";
}

InfeasiblePlanError::InfeasiblePlanError(std::vector<PlanViolation> violations)
    : Error(ErrorCode::kInfeasiblePlan, InfeasibleMessage(violations)),
      violations_(std::move(violations)) {}

std::vector<PlanViolation> ValidatePlan(const PlacementPlan &plan, const FleetManifest &manifest,
                                        const ModelCatalog &catalog,
                                        const std::set<std::string> &unavailable_agents) {
  std::vector<PlanViolation> out;
  std::set<std::tuple<std::string, std::string, std::string, int>> keys;
  std::set<std::string> instance_ids;
  std::set<GpuKey> disabled_reported;
  std::set<std::string> unavailable_reported;

  for (const auto &a : plan.assignments) {
    const std::string subject = "assignments/" + a.instance_id;
    if (!keys.emplace(a.model_id, a.agent_name, a.gpu_id, a.replica_index).second ||
        !instance_ids.insert(a.instance_id).second) {
      out.push_back({ViolationKind::kDuplicateInstance, subject,
                     "duplicate (model, agent, gpu, replica) or instance id"});
    }
    if (catalog.Find(a.model_id) == nullptr) {
      out.push_back({ViolationKind::kUnknownModel, subject,
                     "model '" + a.model_id + "' is not in the catalog"});
    }
    const AgentEntry *agent = manifest.Find(a.agent_name);
    const GpuDevice *gpu = agent ? agent->FindGpu(a.gpu_id) : nullptr;
    if (gpu == nullptr) {
      out.push_back({ViolationKind::kUnknownGpu, subject,
                     "gpu '" + a.agent_name + "/" + a.gpu_id + "' does not exist"});
      continue;
    }
    if (!gpu->enabled && disabled_reported.insert({a.agent_name, a.gpu_id}).second) {
      out.push_back({ViolationKind::kGpuDisabled, GpuSubject(a.agent_name, a.gpu_id),
                     "instances assigned to a disabled gpu"});
    }
    if (unavailable_agents.count(a.agent_name) != 0 &&
        unavailable_reported.insert(a.agent_name).second) {
      out.push_back({ViolationKind::kAgentUnavailable, "agents/" + a.agent_name,
                     "instances assigned to an unavailable agent"});
    }
  }

  for (const auto &[key, used] : UsedByGpu(plan, catalog)) {
    const AgentEntry *agent = manifest.Find(key.first);
    const GpuDevice *gpu = agent ? agent->FindGpu(key.second) : nullptr;
    if (gpu == nullptr) continue;
    const Mib capacity = EffectiveVram(*gpu);
    if (used > capacity) {
      out.push_back({ViolationKind::kVramExceeded, GpuSubject(key.first, key.second),
                     std::to_string(used) + " MiB assigned > " + std::to_string(capacity) +
                         " MiB effective"});
    }
  }

  std::sort(out.begin(), out.end(), [](const PlanViolation &x, const PlanViolation &y) {
    return std::tie(x.subject, x.kind) < std::tie(y.subject, y.kind);
  });
  return out;
}

void RequireValidPlan(const PlacementPlan &plan, const FleetManifest &manifest,
                      const ModelCatalog &catalog) {
  auto violations = ValidatePlan(plan, manifest, catalog);
  if (!violations.empty()) throw InfeasiblePlanError(std::move(violations));
}

const GpuCapacity *CapacityReport::Find(std::string_view agent_name,
                                        std::string_view gpu_id) const {
  for (const auto &row : rows) {
    if (row.agent_name == agent_name && row.gpu_id == gpu_id) return &row;
  }
  return nullptr;
}

CapacityReport BuildCapacityReport(const PlacementPlan &plan, const FleetManifest &manifest,
                                   const ModelCatalog &catalog) {
  RequireValidPlan(plan, manifest, catalog);
  const auto used = UsedByGpu(plan, catalog);
  CapacityReport report;
  for (const auto &agent : manifest.agents) {
    for (const auto &gpu : agent.gpus) {
      if (!gpu.enabled) continue;
      GpuCapacity row;
      row.agent_name = agent.agent_name;
      row.gpu_id = gpu.gpu_id;
      row.effective = EffectiveVram(gpu);
      auto it = used.find({agent.agent_name, gpu.gpu_id});
      row.used = it == used.end() ? 0 : it->second;
      row.free = row.effective - row.used;
      for (const auto &m : catalog.models()) {
        row.max_additional[m.model_id] = row.free / m.vram_per_instance;
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void NormalizeReplicas(PlacementPlan &plan) {
  auto &as = plan.assignments;
  std::stable_sort(as.begin(), as.end(),
                   [](const InstanceAssignment &x, const InstanceAssignment &y) {
                     return std::tie(x.agent_name, x.gpu_id, x.model_id, x.replica_index) <
                            std::tie(y.agent_name, y.gpu_id, y.model_id, y.replica_index);
                   });
  for (std::size_t i = 0; i < as.size(); ++i) {
    const bool same_group = i > 0 && as[i].agent_name == as[i - 1].agent_name &&
                            as[i].gpu_id == as[i - 1].gpu_id &&
                            as[i].model_id == as[i - 1].model_id;
    as[i].replica_index = same_group ? as[i - 1].replica_index + 1 : 0;
    as[i].instance_id =
        MakeInstanceId(as[i].agent_name, as[i].gpu_id, as[i].model_id, as[i].replica_index);
  }
}

ReallocationResult ReallocateOnFailure(const PlacementPlan &plan, const FleetManifest &manifest,
                                       const ModelCatalog &catalog,
                                       const std::string &failed_agent) {
  if (manifest.Find(failed_agent) == nullptr) {
    throw Error(ErrorCode::kUnknownAgent, "unknown agent '" + failed_agent + "'");
  }

  ReallocationResult result;
  result.plan.catalog_version = plan.catalog_version;
  result.plan.created_at = plan.created_at;

  std::vector<InstanceAssignment> lost;
  for (const auto &a : plan.assignments) {
    if (a.agent_name == failed_agent) {
      lost.push_back(a);
    } else {
      result.plan.assignments.push_back(a);
    }
  }

  struct Target {
    std::string agent_name;
    std::string gpu_id;
    Mib free;
  };
  std::vector<Target> targets;
  const auto used = UsedByGpu(result.plan, catalog);
  for (const auto &agent : manifest.agents) {
    if (agent.agent_name == failed_agent) continue;
    for (const auto &gpu : agent.gpus) {
      if (!gpu.enabled) continue;
      auto it = used.find({agent.agent_name, gpu.gpu_id});
      targets.push_back({agent.agent_name, gpu.gpu_id,
                         EffectiveVram(gpu) - (it == used.end() ? 0 : it->second)});
    }
  }

  auto vram_of = [&](const InstanceAssignment &a) -> Mib {
    const ModelSpec *m = catalog.Find(a.model_id);
    return m ? m->vram_per_instance : 0;
  };
  std::sort(lost.begin(), lost.end(), [&](const InstanceAssignment &x, const InstanceAssignment &y) {
    const Mib vx = vram_of(x), vy = vram_of(y);
    if (vx != vy) return vx > vy;
    return x.instance_id < y.instance_id;
  });

  std::map<std::string, int> unplaced;
  for (const auto &a : lost) {
    const ModelSpec *model = catalog.Find(a.model_id);
    Target *best = nullptr;
    if (model != nullptr) {
      for (auto &t : targets) {
        if (t.free < model->vram_per_instance) continue;
        if (best == nullptr || t.free > best->free ||
            (t.free == best->free &&
             std::tie(t.agent_name, t.gpu_id) < std::tie(best->agent_name, best->gpu_id))) {
          best = &t;
        }
      }
    }
    if (best == nullptr) {
      ++unplaced[a.model_id];
      continue;
    }
    best->free -= model->vram_per_instance;
    InstanceAssignment moved;
    moved.model_id = a.model_id;
    moved.agent_name = best->agent_name;
    moved.gpu_id = best->gpu_id;
    // Sorts after every surviving replica of the group; renumbered below.
    moved.replica_index = std::numeric_limits<int>::max() / 2 +
                          static_cast<int>(result.plan.assignments.size());
    result.plan.assignments.push_back(std::move(moved));
  }
  NormalizeReplicas(result.plan);

  for (const auto &[model_id, count] : unplaced) result.unplaced.push_back({model_id, count});
  return result;
}

DistributionSummary BuildDistributionSummary(const PlacementPlan &plan,
                                             const FleetManifest &manifest,
                                             const ModelCatalog &catalog) {
  RequireValidPlan(plan, manifest, catalog);
  DistributionSummary s;
  const auto used = UsedByGpu(plan, catalog);
  for (const auto &a : plan.assignments) {
    ++s.per_model[a.model_id];
    ++s.per_agent[a.agent_name].instances;
  }
  for (auto &[name, dist] : s.per_agent) {
    const AgentEntry *agent = manifest.Find(name);
    for (const auto &gpu : agent->gpus) {
      if (!gpu.enabled) continue;
      ++dist.gpus;
      auto it = used.find({name, gpu.gpu_id});
      dist.free_vram += EffectiveVram(gpu) - (it == used.end() ? 0 : it->second);
    }
  }
  s.total_instances = static_cast<int>(plan.assignments.size());
  s.total_agents = static_cast<int>(s.per_agent.size());
  s.distinct_models = static_cast<int>(s.per_model.size());
  return s;
}

}  // namespace sdai
