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

// Independent reference computations used by the tests. Nothing here calls
// into the placement or confgen implementations.

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "sdai/domain/domain.hpp"

namespace sdai::oracle {

/// Largest k with k*v + used <= total - reserved, found by linear scan.
inline std::int64_t LargestKByScan(std::int64_t total, std::int64_t reserved, std::int64_t v,
                                   std::int64_t used) {
  std::int64_t k = 0;
  while ((k + 1) * v + used <= total - reserved) ++k;
  return k;
}

/// Σ v_m per (agent, gpu), looking models up by linear search.
inline std::map<std::pair<std::string, std::string>, std::int64_t> SumVram(
    const PlacementPlan &plan, const std::vector<ModelSpec> &models) {
  std::map<std::pair<std::string, std::string>, std::int64_t> sums;
  for (const auto &a : plan.assignments) {
    for (const auto &m : models) {
      if (m.model_id == a.model_id) sums[{a.agent_name, a.gpu_id}] += m.vram_per_instance;
    }
  }
  return sums;
}

/// True iff every GPU's summed VRAM fits its total minus reserve.
inline bool FitsEverywhere(const PlacementPlan &plan, const FleetManifest &manifest,
                           const std::vector<ModelSpec> &models) {
  for (const auto &[key, sum] : SumVram(plan, models)) {
    bool found = false;
    for (const auto &agent : manifest.agents) {
      if (agent.agent_name != key.first) continue;
      for (const auto &gpu : agent.gpus) {
        if (gpu.gpu_id != key.second) continue;
        found = true;
        if (sum > gpu.vram_total - gpu.vram_reserved) return false;
      }
    }
    if (!found) return false;
  }
  return true;
}

struct Recount {
  int agents = 0;
  int instances = 0;
  int models = 0;
  std::map<std::string, int> per_model;
  std::map<std::string, int> per_agent;
};

inline Recount RecountPlan(const PlacementPlan &plan) {
  Recount r;
  std::set<std::string> agents, models;
  for (const auto &a : plan.assignments) {
    agents.insert(a.agent_name);
    models.insert(a.model_id);
    r.per_model[a.model_id] += 1;
    r.per_agent[a.agent_name] += 1;
    r.instances += 1;
  }
  r.agents = static_cast<int>(agents.size());
  r.models = static_cast<int>(models.size());
  return r;
}

/// Multiset of instance ids per model.
inline std::map<std::string, std::multiset<std::string>> InstancesByModel(
    const PlacementPlan &plan) {
  std::map<std::string, std::multiset<std::string>> out;
  for (const auto &a : plan.assignments) out[a.model_id].insert(a.instance_id);
  return out;
}

// --- generators -----------------------------------------------------------

inline FleetManifest RandomFleet(std::mt19937_64 &rng, int max_agents = 5, int max_gpus = 3) {
  std::uniform_int_distribution<int> agents_d(1, max_agents), gpus_d(1, max_gpus);
  std::uniform_int_distribution<int> vram_d(2, 32);  // GiB
  std::uniform_int_distribution<int> reserve_d(0, 1024);
  FleetManifest fleet;
  const int n = agents_d(rng);
  for (int i = 0; i < n; ++i) {
    AgentEntry agent;
    agent.agent_name = "agent" + std::to_string(i);
    agent.address = "127.0.20." + std::to_string(i + 1) + ":7001";
    agent.is_main_agent = i == 0;
    const int g = gpus_d(rng);
    for (int j = 0; j < g; ++j) {
      GpuDevice gpu;
      gpu.gpu_id = "gpu" + std::to_string(j);
      gpu.vendor = j % 2 ? GpuVendor::kAmd : GpuVendor::kNvidia;
      gpu.model_name = "test";
      gpu.vram_total = static_cast<Mib>(vram_d(rng)) * 1024;
      gpu.vram_reserved = reserve_d(rng);
      agent.gpus.push_back(gpu);
    }
    fleet.agents.push_back(agent);
  }
  return fleet;
}

inline std::vector<ModelSpec> RandomModels(std::mt19937_64 &rng, int max_models = 6) {
  std::uniform_int_distribution<int> n_d(1, max_models), v_d(300, 9000);
  std::vector<ModelSpec> models;
  const int n = n_d(rng);
  for (int i = 0; i < n; ++i) {
    ModelSpec m;
    m.model_id = "model" + std::to_string(i) + ":" + std::to_string(i + 1) + "b";
    m.family = "model" + std::to_string(i);
    m.parameter_scale = std::to_string(i + 1) + "b";
    m.vram_per_instance = v_d(rng);
    models.push_back(m);
  }
  return models;
}

/// Feasible random plan: fills GPUs with random models while they fit.
inline PlacementPlan RandomFeasiblePlan(std::mt19937_64 &rng, const FleetManifest &fleet,
                                        const std::vector<ModelSpec> &models,
                                        double fill = 0.7) {
  PlacementPlan plan;
  plan.catalog_version = "test";
  std::uniform_int_distribution<std::size_t> pick(0, models.size() - 1);
  std::bernoulli_distribution keep_going(fill);
  for (const auto &agent : fleet.agents) {
    for (const auto &gpu : agent.gpus) {
      std::int64_t free = gpu.vram_total - gpu.vram_reserved;
      std::map<std::string, int> replicas;
      for (int attempt = 0; attempt < 12 && keep_going(rng); ++attempt) {
        const ModelSpec &m = models[pick(rng)];
        if (m.vram_per_instance > free) continue;
        free -= m.vram_per_instance;
        InstanceAssignment a;
        a.model_id = m.model_id;
        a.agent_name = agent.agent_name;
        a.gpu_id = gpu.gpu_id;
        a.replica_index = replicas[m.model_id]++;
        a.instance_id = MakeInstanceId(a.agent_name, a.gpu_id, a.model_id, a.replica_index);
        plan.assignments.push_back(a);
      }
    }
  }
  return plan;
}

}  // namespace sdai::oracle
