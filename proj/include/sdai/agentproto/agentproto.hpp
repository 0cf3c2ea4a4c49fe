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

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdai/domain/domain.hpp"

namespace sdai {

enum class Liveness { kConnected, kDegraded, kUnavailable };
std::string_view ToString(Liveness liveness);

struct RunningInstance {
  std::string instance_id;
  std::string model_id;
  int port = 0;
  bool healthy = true;
  // False after a controller restore until a heartbeat reports the instance.
  bool confirmed = true;

  bool operator==(const RunningInstance &) const = default;
};

struct AgentRecord {
  std::string agent_name;
  std::string address;
  std::vector<GpuDevice> gpus;
  Liveness liveness = Liveness::kConnected;
  TimestampMs last_heartbeat = 0;
  TimestampMs registered_at = 0;
  bool is_main_agent = false;
  std::vector<RunningInstance> running_instances;
  std::map<std::string, Mib> gpu_free_vram;

  bool operator==(const AgentRecord &) const = default;
};

struct RegistrationRequest {
  std::string agent_name;
  std::string address;
  std::vector<GpuDevice> gpus;
  bool is_main_agent = false;
  std::vector<RunningInstance> instances;  // preloaded instances, if any
};

struct HeartbeatPayload {
  std::string agent_name;
  std::map<std::string, bool> instance_statuses;  // instance_id -> healthy
  std::map<std::string, Mib> gpu_free_vram;
  TimestampMs sent_at = 0;
};

struct LivenessTransition {
  std::string agent_name;
  Liveness from;
  Liveness to;
  bool operator==(const LivenessTransition &) const = default;
};

struct LivenessThresholds {
  std::int64_t degraded_after_ms = 10'000;
  std::int64_t unavailable_after_ms = 15'000;
};

struct ClusterSnapshot {
  std::vector<AgentRecord> agents;  // sorted by agent_name
  int connected_count = 0;
  int available_count = 0;
  TimestampMs last_update = 0;
  std::optional<std::string> deployed_plan_version;
};

/// Shared store of agent records. Every public method takes the registry
/// lock, so per-agent updates are atomic and totally ordered, and snapshots
/// never observe a half-applied heartbeat.
class AgentRegistry {
 public:
  /// Creates or replaces the record (GPUs replaced, running instances reset
  /// to the request's list), liveness CONNECTED. Throws
  /// Error(kMainAgentConflict) when another CONNECTED agent is already main.
  AgentRecord Register(const RegistrationRequest &request, TimestampMs now);

  /// Throws Error(kUnknownAgent). Appends any liveness transitions (a
  /// recovery from UNAVAILABLE is reported as two steps).
  AgentRecord RecordHeartbeat(const HeartbeatPayload &payload, TimestampMs now,
                              std::vector<LivenessTransition> *transitions = nullptr);

  /// Demotes stale agents; CONNECTED -> UNAVAILABLE in one sweep yields two
  /// transition records. Requires degraded_after < unavailable_after.
  std::vector<LivenessTransition> Sweep(TimestampMs now, const LivenessThresholds &thresholds);

  ClusterSnapshot Snapshot(TimestampMs now) const;

  std::optional<AgentRecord> Find(const std::string &agent_name) const;
  std::optional<Liveness> LivenessOf(const std::string &agent_name) const;
  bool Deregister(const std::string &agent_name);

  /// Replaces the running instance list (from a deploy ack or a restore).
  void SetRunningInstances(const std::string &agent_name, std::vector<RunningInstance> instances);

  /// Inserts an UNAVAILABLE record if the agent is not registered.
  bool AddPlaceholder(AgentRecord record);

  void SetDeployedPlanVersion(std::optional<std::string> version);

  /// Registered fleet as a manifest view (no main-agent validation).
  FleetManifest FleetView() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, AgentRecord> agents_;
  std::optional<std::string> deployed_plan_version_;
};

// --- wire payloads ---------------------------------------------------------

struct DeployRequest {
  std::int64_t plan_version = 0;
  std::string proxy_config;
  std::string startup_script;
  std::optional<std::string> front_proxy_config;  // main agent only
};

struct InstanceStartResult {
  std::string instance_id;
  std::string model_id;
  int port = 0;
  bool started = false;
  std::string message;
  bool operator==(const InstanceStartResult &) const = default;
};

struct DeployAck {
  std::int64_t plan_version = 0;
  std::vector<InstanceStartResult> results;
};

struct StopRequest {
  std::vector<std::string> instance_ids;
};

void to_json(nlohmann::json &j, const RunningInstance &r);
void from_json(const nlohmann::json &j, RunningInstance &r);
void to_json(nlohmann::json &j, const AgentRecord &r);
void to_json(nlohmann::json &j, const RegistrationRequest &r);
void from_json(const nlohmann::json &j, RegistrationRequest &r);
void to_json(nlohmann::json &j, const HeartbeatPayload &p);
/// The agent name travels in the URL path, not the body.
void from_json(const nlohmann::json &j, HeartbeatPayload &p);
void to_json(nlohmann::json &j, const DeployRequest &r);
void from_json(const nlohmann::json &j, DeployRequest &r);
void to_json(nlohmann::json &j, const InstanceStartResult &r);
void from_json(const nlohmann::json &j, InstanceStartResult &r);
void to_json(nlohmann::json &j, const DeployAck &a);
void from_json(const nlohmann::json &j, DeployAck &a);
void to_json(nlohmann::json &j, const StopRequest &r);
void from_json(const nlohmann::json &j, StopRequest &r);
void to_json(nlohmann::json &j, const ClusterSnapshot &s);

/// Error body shared by every HTTP endpoint: {"error": code, "message": ...}.
nlohmann::json ErrorBody(const Error &error);
/// Maps an error body back to an Error (unknown codes become kTransport).
Error ErrorFromBody(const nlohmann::json &body, int http_status);

// --- controller -> agent channel ------------------------------------------

class AgentChannel {
 public:
  virtual ~AgentChannel() = default;
  /// Throws Error(kDeployRejected) carrying the agent's message, or
  /// Error(kAgentUnavailable) when the agent cannot be reached.
  virtual DeployAck Deploy(const std::string &address, const DeployRequest &request) = 0;
  virtual void Stop(const std::string &address, const StopRequest &request) = 0;
};

class HttpAgentChannel : public AgentChannel {
 public:
  explicit HttpAgentChannel(std::chrono::milliseconds timeout = std::chrono::seconds(5))
      : timeout_(timeout) {}
  DeployAck Deploy(const std::string &address, const DeployRequest &request) override;
  void Stop(const std::string &address, const StopRequest &request) override;

 private:
  std::chrono::milliseconds timeout_;
};

/// Delivers a bundle slice to one agent and records the started instances on
/// the agent's record. Throws Error(kUnknownAgent) or, for an UNAVAILABLE
/// agent, Error(kAgentUnavailable) without touching any state.
DeployAck DispatchDeploy(AgentRegistry &registry, AgentChannel &channel,
                         const std::string &agent_name, const DeployRequest &request);

}  // namespace sdai
