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

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "sdai/agentproto/agentproto.hpp"
#include "sdai/confgen/confgen.hpp"
#include "sdai/controlapi/state_store.hpp"
#include "sdai/placement/placement.hpp"

namespace sdai {

enum class WizardStage { kSelectAgents, kConfigure, kGenerate };
std::string_view ToString(WizardStage stage);
WizardStage ParseWizardStage(std::string_view text);

using GpuKey = std::pair<std::string, std::string>;                       // (agent, gpu)
using ChoiceKey = std::tuple<std::string, std::string, std::string>;      // (agent, gpu, model)

struct WizardSession {
  std::string session_id;
  WizardStage stage = WizardStage::kSelectAgents;
  std::set<std::string> selected_agents;
  std::set<GpuKey> enabled_gpus;
  std::map<ChoiceKey, int> chosen_instances;
  PortPolicy port_policy;
  std::optional<PlacementPlan> draft_plan;
  // plan_version current when the session was created or last deployed.
  std::int64_t base_version = 0;
};

class ExceedsCapacityError : public Error {
 public:
  ExceedsCapacityError(std::int64_t max, const std::string &message)
      : Error(ErrorCode::kExceedsCapacity, message), max_(max) {}
  std::int64_t max() const { return max_; }

 private:
  std::int64_t max_;
};

struct AgentDeployResult {
  std::string agent_name;
  std::string status;  // "ok", "rejected", "unavailable", "not_attempted", "rolled_back"
  std::string message;
  bool operator==(const AgentDeployResult &) const = default;
};

class DeployRejectedError : public Error {
 public:
  explicit DeployRejectedError(std::vector<AgentDeployResult> results);
  const std::vector<AgentDeployResult> &results() const { return results_; }

 private:
  std::vector<AgentDeployResult> results_;
};

struct Overview {
  PlacementPlan plan;
  FleetManifest scope;  // agents that receive a bundle slice
  DistributionSummary summary;
  PortAssignment ports;
  ConfigBundle bundle;
};

struct FailoverResult {
  std::string failed_agent;
  DeployedState state;
  std::vector<ModelCount> unplaced;  // empty when every lost replica was re-placed
};

struct ControllerOptions {
  LivenessThresholds thresholds;
  bool auto_failover = true;
  std::string store_path;  // empty: no persistence
  bool reset_store = false;
};

using Clock = std::function<TimestampMs()>;
TimestampMs SystemClockMs();

class Controller {
 public:
  /// Restores persisted state when `options.store_path` exists. Throws
  /// Error(kCorruptStore) unless `options.reset_store` is set.
  Controller(ModelCatalog catalog, ControllerOptions options,
             std::shared_ptr<AgentChannel> channel, Clock clock = SystemClockMs);

  const ModelCatalog &catalog() const { return catalog_; }
  const ControllerOptions &options() const { return options_; }
  AgentRegistry &registry() { return registry_; }
  /// nullptr when persistence is off.
  StateStore *store() { return store_ ? &*store_ : nullptr; }

  // --- agent-facing -------------------------------------------------------
  AgentRecord RegisterAgent(const RegistrationRequest &request);
  AgentRecord Heartbeat(const HeartbeatPayload &payload);
  /// Demotes stale agents and, with auto-failover on, runs HandleAgentFailure
  /// for every agent of the deployed fleet that became UNAVAILABLE.
  std::vector<LivenessTransition> RunLivenessSweep();

  // --- wizard -------------------------------------------------------------
  WizardSession CreateSession();
  WizardSession GetSession(const std::string &session_id) const;
  WizardSession SelectAgents(const std::string &session_id, const std::set<std::string> &names,
                             bool select_all_standard);
  WizardSession ToggleGpu(const std::string &session_id, const std::string &agent_name,
                          const std::string &gpu_id, bool enabled);
  WizardSession SetModelInstances(const std::string &session_id, const std::string &agent_name,
                                  const std::string &gpu_id, const std::string &model_id,
                                  int count);
  /// A port <= 0 clears the override.
  WizardSession SetPort(const std::string &session_id, const std::string &model_id, int port);
  WizardSession SetStatsPort(const std::string &session_id, int port);
  WizardSession SetStage(const std::string &session_id, WizardStage stage);

  /// Side-effect free preview of what Deploy would commit.
  Overview GenerateOverview(const std::string &session_id) const;
  DeployedState Deploy(const std::string &session_id);

  // --- failover -----------------------------------------------------------
  FailoverResult HandleAgentFailure(const std::string &agent_name);
  std::optional<FailoverResult> last_failover() const;

  std::optional<DeployedState> deployed() const;
  nlohmann::json Dashboard() const;
  /// Per enabled GPU: effective/used/free VRAM and, per catalog model, the
  /// largest count the session may set for that (agent, gpu, model).
  nlohmann::json SessionCapacity(const WizardSession &session) const;
  /// Session document plus capacity rows and the port preview (null while
  /// the current choices collide).
  nlohmann::json SessionView(const WizardSession &session) const;

 private:
  WizardSession &SessionLocked(const std::string &session_id);
  const WizardSession &SessionLocked(const std::string &session_id) const;
  AgentRecord RequireRegistered(const std::string &agent_name) const;
  PlacementPlan BuildDraftPlan(const WizardSession &session) const;
  FleetManifest BuildScope(const WizardSession &session, const PlacementPlan &plan) const;
  Overview BuildOverviewLocked(const WizardSession &session) const;
  DeployedState CommitLocked(PlacementPlan plan, PortAssignment ports, PortPolicy policy,
                             FleetManifest fleet, ConfigBundle bundle, bool require_connected);
  void RollbackLocked(const std::vector<std::string> &acked, const FleetManifest &fleet);
  void RestoreLocked(const DeployedState &state);

  ModelCatalog catalog_;
  ControllerOptions options_;
  std::shared_ptr<AgentChannel> channel_;
  Clock clock_;
  AgentRegistry registry_;
  std::optional<StateStore> store_;

  mutable std::mutex mu_;
  std::map<std::string, WizardSession> sessions_;
  std::optional<DeployedState> deployed_;
  std::optional<FailoverResult> last_failover_;
  std::mt19937_64 session_rng_;
};

// JSON views used by the HTTP layer.
nlohmann::json SessionToJson(const WizardSession &session);
nlohmann::json SummaryToJson(const DistributionSummary &summary);
nlohmann::json OverviewToJson(const Overview &overview);
nlohmann::json FailoverToJson(const FailoverResult &result);

}  // namespace sdai
