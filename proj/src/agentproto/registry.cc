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

#include <algorithm>

#include "sdai/agentproto/agentproto.hpp"

namespace sdai {

std::string_view ToString(Liveness liveness) {
  switch (liveness) {
    case Liveness::kConnected: return "CONNECTED";
    case Liveness::kDegraded: return "DEGRADED";
    case Liveness::kUnavailable: return "UNAVAILABLE";
  }
  return "UNAVAILABLE";
}

namespace {

int Rank(Liveness l) { return static_cast<int>(l); }

// Walks the chain one step at a time so every emitted transition is an edge.
void StepTo(AgentRecord &record, Liveness target, std::vector<LivenessTransition> *out) {
  while (record.liveness != target) {
    const int step = Rank(target) > Rank(record.liveness) ? 1 : -1;
    auto next = static_cast<Liveness>(Rank(record.liveness) + step);
    if (out != nullptr) out->push_back({record.agent_name, record.liveness, next});
    record.liveness = next;
  }
}

}  // namespace

AgentRecord AgentRegistry::Register(const RegistrationRequest &request, TimestampMs now) {
  if (!IsValidName(request.agent_name)) {
    throw Error(ErrorCode::kValidation, "invalid agent name '" + request.agent_name + "'");
  }
  ParseHostPort(request.address);
  FleetManifest single;
  single.agents.push_back({request.agent_name, request.address, request.gpus, true});
  ValidateFleetManifest(single);

  std::lock_guard<std::mutex> lock(mu_);
  if (request.is_main_agent) {
    for (const auto &[name, rec] : agents_) {
      if (name != request.agent_name && rec.is_main_agent &&
          rec.liveness == Liveness::kConnected) {
        throw Error(ErrorCode::kMainAgentConflict,
                    "agent '" + name + "' is already the connected main agent");
      }
    }
  }
  AgentRecord record;
  record.agent_name = request.agent_name;
  record.address = request.address;
  record.gpus = request.gpus;
  record.is_main_agent = request.is_main_agent;
  record.liveness = Liveness::kConnected;
  record.registered_at = now;
  record.last_heartbeat = now;
  record.running_instances = request.instances;
  if (auto it = agents_.find(request.agent_name); it != agents_.end()) {
    record.last_heartbeat = std::max(now, it->second.last_heartbeat);
  }
  agents_[request.agent_name] = record;
  return record;
}

AgentRecord AgentRegistry::RecordHeartbeat(const HeartbeatPayload &payload, TimestampMs now,
                                           std::vector<LivenessTransition> *transitions) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = agents_.find(payload.agent_name);
  if (it == agents_.end()) {
    throw Error(ErrorCode::kUnknownAgent, "unknown agent '" + payload.agent_name + "'");
  }
  AgentRecord &record = it->second;
  for (const auto &[gpu_id, free] : payload.gpu_free_vram) {
    auto gpu = std::find_if(record.gpus.begin(), record.gpus.end(),
                            [&](const GpuDevice &g) { return g.gpu_id == gpu_id; });
    if (gpu == record.gpus.end() || free < 0 || free > gpu->vram_total) {
      throw Error(ErrorCode::kValidation,
                  "heartbeat reports invalid free VRAM for gpu '" + gpu_id + "'");
    }
  }
  record.last_heartbeat = std::max(record.last_heartbeat, now);
  StepTo(record, Liveness::kConnected, transitions);
  for (auto &inst : record.running_instances) {
    auto status = payload.instance_statuses.find(inst.instance_id);
    if (status == payload.instance_statuses.end()) continue;
    inst.healthy = status->second;
    inst.confirmed = true;
  }
  for (const auto &[gpu_id, free] : payload.gpu_free_vram) record.gpu_free_vram[gpu_id] = free;
  return record;
}

std::vector<LivenessTransition> AgentRegistry::Sweep(TimestampMs now,
                                                     const LivenessThresholds &thresholds) {
  if (thresholds.degraded_after_ms >= thresholds.unavailable_after_ms) {
    throw Error(ErrorCode::kValidation, "degraded_after must be below unavailable_after");
  }
  std::vector<LivenessTransition> out;
  std::lock_guard<std::mutex> lock(mu_);
  for (auto &[name, record] : agents_) {
    const std::int64_t age = now - record.last_heartbeat;
    Liveness target = Liveness::kConnected;
    if (age > thresholds.unavailable_after_ms) {
      target = Liveness::kUnavailable;
    } else if (age > thresholds.degraded_after_ms) {
      target = Liveness::kDegraded;
    }
    // The sweep only demotes; recovery happens through heartbeats.
    if (Rank(target) > Rank(record.liveness)) StepTo(record, target, &out);
  }
  return out;
}

ClusterSnapshot AgentRegistry::Snapshot(TimestampMs now) const {
  std::lock_guard<std::mutex> lock(mu_);
  ClusterSnapshot snap;
  snap.last_update = now;
  snap.deployed_plan_version = deployed_plan_version_;
  snap.agents.reserve(agents_.size());
  for (const auto &[name, record] : agents_) {
    snap.agents.push_back(record);
    if (record.liveness == Liveness::kConnected) ++snap.connected_count;
    if (record.liveness != Liveness::kUnavailable) ++snap.available_count;
  }
  return snap;
}

std::optional<AgentRecord> AgentRegistry::Find(const std::string &agent_name) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = agents_.find(agent_name);
  if (it == agents_.end()) return std::nullopt;
  return it->second;
}

std::optional<Liveness> AgentRegistry::LivenessOf(const std::string &agent_name) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = agents_.find(agent_name);
  if (it == agents_.end()) return std::nullopt;
  return it->second.liveness;
}

bool AgentRegistry::Deregister(const std::string &agent_name) {
  std::lock_guard<std::mutex> lock(mu_);
  return agents_.erase(agent_name) > 0;
}

void AgentRegistry::SetRunningInstances(const std::string &agent_name,
                                        std::vector<RunningInstance> instances) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = agents_.find(agent_name);
  if (it != agents_.end()) it->second.running_instances = std::move(instances);
}

bool AgentRegistry::AddPlaceholder(AgentRecord record) {
  std::lock_guard<std::mutex> lock(mu_);
  record.liveness = Liveness::kUnavailable;
  return agents_.emplace(record.agent_name, std::move(record)).second;
}

void AgentRegistry::SetDeployedPlanVersion(std::optional<std::string> version) {
  std::lock_guard<std::mutex> lock(mu_);
  deployed_plan_version_ = std::move(version);
}

FleetManifest AgentRegistry::FleetView() const {
  std::lock_guard<std::mutex> lock(mu_);
  FleetManifest view;
  for (const auto &[name, record] : agents_) {
    view.agents.push_back({name, record.address, record.gpus, record.is_main_agent});
  }
  return view;
}

}  // namespace sdai
