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
#include <string>
#include <vector>

#include "sdai/agentproto/agentproto.hpp"
#include "sdai/confgen/confgen.hpp"

namespace sdai {

enum class FailureMode { kNone, kCrashAt, kRejectDeploy, kDropHeartbeatsAt, kUnhealthyInstance };
std::string_view ToString(FailureMode mode);
FailureMode ParseFailureMode(std::string_view text);

struct SimAgentConfig {
  std::string agent_name;
  std::string address;  // host:port of the agent's control listener
  std::vector<GpuDevice> gpus;
  bool is_main_agent = false;
  std::chrono::milliseconds heartbeat_interval{1000};
  FailureMode failure_mode = FailureMode::kNone;
  // Delay in ms for CRASH_AT / DROP_HEARTBEATS_AT, instance id for
  // UNHEALTHY_INSTANCE.
  std::string failure_param;
  std::chrono::milliseconds response_delay{0};
};

/// Throws Error(kValidation) when a parameterized mode lacks its parameter.
void ValidateSimAgentConfig(const SimAgentConfig &config);

struct SimRoute {
  std::string model_id;
  int port = 0;
  std::vector<ProxyServer> servers;  // hosts already mapped to this agent
};

/// One simulated node: control listener (deploy/stop), registration and
/// heartbeats, stub inference endpoints per instance and a round-robin
/// listener per model port emulating the generated proxy configuration.
class SimAgent {
 public:
  SimAgent(SimAgentConfig config, std::string controller_address);
  ~SimAgent();
  SimAgent(const SimAgent &) = delete;
  SimAgent &operator=(const SimAgent &) = delete;

  /// Binds the control listener, registers and starts heartbeating. Throws
  /// Error(kPortBindFailure) or Error(kRegistrationFailed).
  void Start();
  void Stop();

  /// Immediate for NONE / REJECT_DEPLOY / UNHEALTHY_INSTANCE, delayed by
  /// `param` ms for CRASH_AT and DROP_HEARTBEATS_AT.
  void InjectFailure(FailureMode mode, const std::string &param);

  /// Reconciles stub endpoints and proxy listeners with the bundle slice.
  /// Throws Error(kDeployRejected) in REJECT_DEPLOY mode or for unparseable
  /// texts.
  DeployAck ApplyDeploy(const DeployRequest &request);
  void StopInstances(const std::vector<std::string> &instance_ids);

  const std::string &name() const;
  const std::string &host() const;
  bool crashed() const;
  bool heartbeats_dropped() const;
  std::int64_t plan_version() const;
  std::vector<std::string> running_instance_ids() const;
  std::vector<SimRoute> routes() const;
  std::optional<std::string> front_proxy_config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class SimFleet {
 public:
  /// Starts one SimAgent per manifest entry. `overrides` supplies failure
  /// modes, intervals and delays per agent (identity fields come from the
  /// manifest). Throws Error(kRegistrationFailed) listing every agent that
  /// failed, after stopping the ones that started.
  static std::unique_ptr<SimFleet> Spawn(const FleetManifest &manifest,
                                         const std::map<std::string, SimAgentConfig> &overrides,
                                         const std::string &controller_address,
                                         std::chrono::milliseconds heartbeat_interval =
                                             std::chrono::milliseconds(1000));
  ~SimFleet();

  std::size_t size() const { return agents_.size(); }
  bool empty() const { return agents_.empty(); }
  SimAgent *Find(const std::string &agent_name);
  /// Throws Error(kUnknownAgent).
  void InjectFailure(const std::string &agent_name, FailureMode mode, const std::string &param);
  void Shutdown();

 private:
  std::map<std::string, std::unique_ptr<SimAgent>> agents_;
};

struct FairnessReport {
  std::string model_id;
  int total_requests = 0;
  std::map<std::string, int> per_instance_counts;
  int max_spread = 0;
};

/// Sends `n` POST /api/generate requests to `target` (host:port of a model
/// listener) and tallies the responding instances. With concurrency > 1 the
/// requests are split across that many workers. Throws
/// Error(kNoHealthyReplica) when the listener has no live server.
FairnessReport DriveRequests(const std::string &target, const std::string &model_id, int n,
                             int concurrency = 1);

}  // namespace sdai
