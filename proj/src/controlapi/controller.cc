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

#include "sdai/controlapi/controller.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "sdai/domain/json_codec.hpp"

namespace sdai {

using nlohmann::json;

std::string_view ToString(WizardStage stage) {
  switch (stage) {
    case WizardStage::kSelectAgents: return "SELECT_AGENTS";
    case WizardStage::kConfigure: return "CONFIGURE";
    case WizardStage::kGenerate: return "GENERATE";
  }
  return "SELECT_AGENTS";
}

WizardStage ParseWizardStage(std::string_view text) {
  for (auto s : {WizardStage::kSelectAgents, WizardStage::kConfigure, WizardStage::kGenerate}) {
    if (ToString(s) == text) return s;
  }
  throw Error(ErrorCode::kParse, "unknown wizard stage '" + std::string(text) + "'");
}

TimestampMs SystemClockMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

namespace {

std::string JoinResults(const std::vector<AgentDeployResult> &results) {
  std::string out;
  for (const auto &r : results) {
    if (r.status == "ok" || r.status == "not_attempted" || r.status == "rolled_back") continue;
    if (!out.empty()) out += "; ";
    out += r.agent_name + ": " + r.status + (r.message.empty() ? "" : " (" + r.message + ")");
  }
  return "deploy rejected: " + (out.empty() ? std::string("no agent accepted") : out);
}

Mib ChoiceVram(const ModelCatalog &catalog, const std::string &model_id, int count) {
  return catalog.Get(model_id).vram_per_instance * count;
}

}  // namespace

DeployRejectedError::DeployRejectedError(std::vector<AgentDeployResult> results)
    : Error(ErrorCode::kDeployRejected, JoinResults(results)), results_(std::move(results)) {}

Controller::Controller(ModelCatalog catalog, ControllerOptions options,
                       std::shared_ptr<AgentChannel> channel, Clock clock)
    : catalog_(std::move(catalog)),
      options_(std::move(options)),
      channel_(std::move(channel)),
      clock_(std::move(clock)),
      session_rng_(std::random_device{}()) {
  if (options_.thresholds.degraded_after_ms >= options_.thresholds.unavailable_after_ms) {
    throw Error(ErrorCode::kValidation, "heartbeat-degraded must be below heartbeat-unavailable");
  }
  if (options_.store_path.empty()) return;
  store_.emplace(options_.store_path);
  if (options_.reset_store) store_->Remove();
  if (auto state = store_->Load()) {
    std::lock_guard<std::mutex> lock(mu_);
    RestoreLocked(*state);
  }
}

void Controller::RestoreLocked(const DeployedState &state) {
  deployed_ = state;
  registry_.SetDeployedPlanVersion(std::to_string(state.plan_version));
  std::map<std::string, std::vector<RunningInstance>> running;
  for (const auto &a : state.plan.assignments) {
    auto port = state.ports.instance_ports.find(a.instance_id);
    running[a.agent_name].push_back({a.instance_id, a.model_id,
                                     port == state.ports.instance_ports.end() ? 0 : port->second.port,
                                     true, false});
  }
  for (const auto &agent : state.fleet.agents) {
    AgentRecord record;
    record.agent_name = agent.agent_name;
    record.address = agent.address;
    record.gpus = agent.gpus;
    record.is_main_agent = agent.is_main_agent;
    record.running_instances = running[agent.agent_name];
    registry_.AddPlaceholder(std::move(record));
  }
}

// --- agent-facing ------------------------------------------------------------

AgentRecord Controller::RegisterAgent(const RegistrationRequest &request) {
  return registry_.Register(request, clock_());
}

AgentRecord Controller::Heartbeat(const HeartbeatPayload &payload) {
  return registry_.RecordHeartbeat(payload, clock_());
}

std::vector<LivenessTransition> Controller::RunLivenessSweep() {
  auto transitions = registry_.Sweep(clock_(), options_.thresholds);
  if (!options_.auto_failover) return transitions;
  for (const auto &t : transitions) {
    if (t.to != Liveness::kUnavailable) continue;
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (!deployed_ || deployed_->fleet.Find(t.agent_name) == nullptr) continue;
    }
    try {
      HandleAgentFailure(t.agent_name);
    } catch (const Error &e) {
      std::fprintf(stderr, "failover for %s failed: %s\n", t.agent_name.c_str(), e.what());
    }
  }
  return transitions;
}

// --- wizard --------------------------------------------------------------------

WizardSession &Controller::SessionLocked(const std::string &session_id) {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::kUnknownSession, "unknown session '" + session_id + "'");
  }
  return it->second;
}

const WizardSession &Controller::SessionLocked(const std::string &session_id) const {
  return const_cast<Controller *>(this)->SessionLocked(session_id);
}

AgentRecord Controller::RequireRegistered(const std::string &agent_name) const {
  auto record = registry_.Find(agent_name);
  if (!record) throw Error(ErrorCode::kUnknownAgent, "unknown agent '" + agent_name + "'");
  return *record;
}

static void RequireStage(const WizardSession &s, WizardStage stage, std::string_view op) {
  if (s.stage != stage) {
    throw Error(ErrorCode::kWrongStage, std::string(op) + " requires stage " +
                                            std::string(ToString(stage)) + ", session is in " +
                                            std::string(ToString(s.stage)));
  }
}

WizardSession Controller::CreateSession() {
  std::lock_guard<std::mutex> lock(mu_);
  WizardSession session;
  do {
    char buf[24];
    std::snprintf(buf, sizeof buf, "s-%016llx",
                  static_cast<unsigned long long>(session_rng_()));
    session.session_id = buf;
  } while (sessions_.count(session.session_id) != 0);
  session.base_version = deployed_ ? deployed_->plan_version : 0;
  sessions_[session.session_id] = session;
  return session;
}

WizardSession Controller::GetSession(const std::string &session_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return SessionLocked(session_id);
}

WizardSession Controller::SelectAgents(const std::string &session_id,
                                       const std::set<std::string> &names,
                                       bool select_all_standard) {
  std::lock_guard<std::mutex> lock(mu_);
  WizardSession &s = SessionLocked(session_id);
  RequireStage(s, WizardStage::kSelectAgents, "select_agents");
  std::set<std::string> selected;
  for (const auto &name : names) selected.insert(RequireRegistered(name).agent_name);
  if (select_all_standard) {
    for (const auto &agent : registry_.FleetView().agents) {
      if (!agent.is_main_agent) selected.insert(agent.agent_name);
    }
  }
  std::erase_if(s.enabled_gpus, [&](const GpuKey &k) { return !selected.count(k.first); });
  std::erase_if(s.chosen_instances,
                [&](const auto &kv) { return !selected.count(std::get<0>(kv.first)); });
  s.selected_agents = std::move(selected);
  s.draft_plan.reset();
  return s;
}

WizardSession Controller::ToggleGpu(const std::string &session_id, const std::string &agent_name,
                                    const std::string &gpu_id, bool enabled) {
  std::lock_guard<std::mutex> lock(mu_);
  WizardSession &s = SessionLocked(session_id);
  RequireStage(s, WizardStage::kSelectAgents, "toggle_gpu");
  AgentRecord record = RequireRegistered(agent_name);
  if (!s.selected_agents.count(agent_name)) {
    throw Error(ErrorCode::kAgentNotSelected, "agent '" + agent_name + "' is not selected");
  }
  auto gpu = std::find_if(record.gpus.begin(), record.gpus.end(),
                          [&](const GpuDevice &g) { return g.gpu_id == gpu_id; });
  if (gpu == record.gpus.end()) {
    throw Error(ErrorCode::kUnknownGpu, "agent '" + agent_name + "' has no gpu '" + gpu_id + "'");
  }
  if (enabled) {
    if (!gpu->enabled) {
      throw Error(ErrorCode::kGpuDisabled,
                  "gpu '" + agent_name + "/" + gpu_id + "' is disabled by its agent");
    }
    s.enabled_gpus.insert({agent_name, gpu_id});
  } else {
    s.enabled_gpus.erase({agent_name, gpu_id});
    std::erase_if(s.chosen_instances, [&](const auto &kv) {
      return std::get<0>(kv.first) == agent_name && std::get<1>(kv.first) == gpu_id;
    });
  }
  s.draft_plan.reset();
  return s;
}

WizardSession Controller::SetModelInstances(const std::string &session_id,
                                            const std::string &agent_name,
                                            const std::string &gpu_id,
                                            const std::string &model_id, int count) {
  std::lock_guard<std::mutex> lock(mu_);
  WizardSession &s = SessionLocked(session_id);
  RequireStage(s, WizardStage::kSelectAgents, "set_model_instances");
  if (count < 0) throw Error(ErrorCode::kValidation, "instance count must be >= 0");
  AgentRecord record = RequireRegistered(agent_name);
  if (!s.selected_agents.count(agent_name)) {
    throw Error(ErrorCode::kAgentNotSelected, "agent '" + agent_name + "' is not selected");
  }
  auto gpu = std::find_if(record.gpus.begin(), record.gpus.end(),
                          [&](const GpuDevice &g) { return g.gpu_id == gpu_id; });
  if (gpu == record.gpus.end()) {
    throw Error(ErrorCode::kUnknownGpu, "agent '" + agent_name + "' has no gpu '" + gpu_id + "'");
  }
  if (!s.enabled_gpus.count({agent_name, gpu_id})) {
    throw Error(ErrorCode::kGpuNotEnabled, "gpu '" + agent_name + "/" + gpu_id + "' is not enabled");
  }
  const ModelSpec &model = catalog_.Get(model_id);
  const ChoiceKey key{agent_name, gpu_id, model_id};
  if (count == 0) {
    s.chosen_instances.erase(key);
    s.draft_plan.reset();
    return s;
  }
  Mib used = 0;
  for (const auto &[k, n] : s.chosen_instances) {
    if (std::get<0>(k) == agent_name && std::get<1>(k) == gpu_id && k != key) {
      used += ChoiceVram(catalog_, std::get<2>(k), n);
    }
  }
  const std::int64_t max = MaxInstancesWithUsed(*gpu, model, used);
  if (count > max) {
    throw ExceedsCapacityError(max, "requested " + std::to_string(count) + " instances of " +
                                        model_id + " on " + agent_name + "/" + gpu_id +
                                        ", max " + std::to_string(max));
  }
  s.chosen_instances[key] = count;
  s.draft_plan.reset();
  return s;
}

WizardSession Controller::SetPort(const std::string &session_id, const std::string &model_id,
                                  int port) {
  std::lock_guard<std::mutex> lock(mu_);
  WizardSession &s = SessionLocked(session_id);
  RequireStage(s, WizardStage::kConfigure, "set_port");
  const bool in_plan = std::any_of(s.chosen_instances.begin(), s.chosen_instances.end(),
                                   [&](const auto &kv) { return std::get<2>(kv.first) == model_id; });
  if (!in_plan) {
    throw Error(ErrorCode::kUnknownModelInPlan, "model '" + model_id + "' has no chosen instances");
  }
  PortPolicy policy = s.port_policy;
  if (port <= 0) {
    policy.overrides.erase(model_id);
  } else {
    policy.overrides[model_id] = port;
  }
  AssignPorts(BuildDraftPlan(s), policy);
  s.port_policy = std::move(policy);
  return s;
}

WizardSession Controller::SetStatsPort(const std::string &session_id, int port) {
  std::lock_guard<std::mutex> lock(mu_);
  WizardSession &s = SessionLocked(session_id);
  RequireStage(s, WizardStage::kConfigure, "set_stats_port");
  PortPolicy policy = s.port_policy;
  policy.stats_port = port;
  AssignPorts(BuildDraftPlan(s), policy);
  s.port_policy = std::move(policy);
  return s;
}

WizardSession Controller::SetStage(const std::string &session_id, WizardStage stage) {
  std::lock_guard<std::mutex> lock(mu_);
  WizardSession &s = SessionLocked(session_id);
  const int from = static_cast<int>(s.stage), to = static_cast<int>(stage);
  if (to == from) return s;
  if (to < from) {
    s.stage = stage;
    s.draft_plan.reset();
    return s;
  }
  if (to != from + 1) {
    throw Error(ErrorCode::kWrongStage, "cannot move from " + std::string(ToString(s.stage)) +
                                            " to " + std::string(ToString(stage)));
  }
  if (stage == WizardStage::kGenerate) s.draft_plan = BuildOverviewLocked(s).plan;
  s.stage = stage;
  return s;
}

PlacementPlan Controller::BuildDraftPlan(const WizardSession &session) const {
  PlacementPlan plan;
  plan.catalog_version = catalog_.version();
  plan.created_at = clock_();
  for (const auto &[key, count] : session.chosen_instances) {
    const auto &[agent, gpu, model] = key;
    for (int r = 0; r < count; ++r) {
      plan.assignments.push_back({MakeInstanceId(agent, gpu, model, r), model, agent, gpu, r});
    }
  }
  std::sort(plan.assignments.begin(), plan.assignments.end(),
            [](const InstanceAssignment &a, const InstanceAssignment &b) {
              return a.instance_id < b.instance_id;
            });
  return plan;
}

FleetManifest Controller::BuildScope(const WizardSession &session, const PlacementPlan &plan) const {
  const ClusterSnapshot snap = registry_.Snapshot(clock_());
  std::set<std::string> names = session.selected_agents;
  for (const auto &a : plan.assignments) names.insert(a.agent_name);

  // One main agent: the connected one if any, else the first registered.
  const AgentRecord *main = nullptr;
  for (const auto &r : snap.agents) {
    if (!r.is_main_agent) continue;
    if (main == nullptr || (r.liveness == Liveness::kConnected &&
                            main->liveness != Liveness::kConnected)) {
      main = &r;
    }
  }
  if (main != nullptr) names.insert(main->agent_name);
  if (deployed_) {
    for (const auto &a : deployed_->fleet.agents) {
      auto live = registry_.LivenessOf(a.agent_name);
      if (live && *live != Liveness::kUnavailable) names.insert(a.agent_name);
    }
  }

  FleetManifest scope;
  for (const auto &r : snap.agents) {
    if (!names.count(r.agent_name)) continue;
    AgentEntry entry{r.agent_name, r.address, r.gpus, &r == main};
    for (auto &g : entry.gpus) {
      g.enabled = g.enabled && session.enabled_gpus.count({r.agent_name, g.gpu_id}) > 0;
    }
    scope.agents.push_back(std::move(entry));
  }
  return scope;
}

Overview Controller::BuildOverviewLocked(const WizardSession &session) const {
  Overview o;
  o.plan = BuildDraftPlan(session);
  if (o.plan.assignments.empty()) throw Error(ErrorCode::kEmptyPlan, "no instances chosen");
  o.scope = BuildScope(session, o.plan);
  std::set<std::string> unavailable;
  for (const auto &a : o.scope.agents) {
    if (registry_.LivenessOf(a.agent_name) == Liveness::kUnavailable) unavailable.insert(a.agent_name);
  }
  auto violations = ValidatePlan(o.plan, o.scope, catalog_, unavailable);
  if (!violations.empty()) throw InfeasiblePlanError(std::move(violations));
  o.ports = AssignPorts(o.plan, session.port_policy);
  o.bundle = RenderBundle(o.plan, o.ports, o.scope, catalog_);
  o.summary = BuildDistributionSummary(o.plan, o.scope, catalog_);
  return o;
}

Overview Controller::GenerateOverview(const std::string &session_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return BuildOverviewLocked(SessionLocked(session_id));
}

DeployedState Controller::Deploy(const std::string &session_id) {
  std::lock_guard<std::mutex> lock(mu_);
  WizardSession &s = SessionLocked(session_id);
  RequireStage(s, WizardStage::kGenerate, "deploy");
  const std::int64_t current = deployed_ ? deployed_->plan_version : 0;
  if (s.base_version != current) {
    throw Error(ErrorCode::kVersionConflict,
                "session is based on plan version " + std::to_string(s.base_version) +
                    ", deployed version is " + std::to_string(current));
  }
  Overview o = BuildOverviewLocked(s);
  PortPolicy frozen = s.port_policy;
  frozen.overrides = o.ports.model_ports;
  DeployedState state = CommitLocked(o.plan, o.ports, frozen, o.scope, o.bundle, true);
  s.base_version = state.plan_version;
  s.draft_plan = state.plan;
  return state;
}

void Controller::RollbackLocked(const std::vector<std::string> &acked, const FleetManifest &fleet) {
  const std::int64_t version = deployed_ ? deployed_->plan_version : 0;
  for (const auto &agent : acked) {
    DeployRequest req;
    req.plan_version = version;
    const AgentBundle *prev = nullptr;
    if (deployed_) {
      auto it = deployed_->bundle.agents.find(agent);
      if (it != deployed_->bundle.agents.end()) prev = &it->second;
    }
    if (prev != nullptr) {
      req.proxy_config = prev->proxy_config;
      req.startup_script = prev->startup_script;
      const AgentEntry *entry = deployed_->fleet.Find(agent);
      if (entry != nullptr && entry->is_main_agent) {
        req.front_proxy_config = deployed_->bundle.front_proxy_config;
      }
    } else {
      const PortAssignment none = AssignPorts({}, PortPolicy{});
      req.proxy_config = GenerateAgentProxyConfig(agent, {}, none, fleet);
      req.startup_script = GenerateStartupScript(agent, {}, none, catalog_);
    }
    try {
      DispatchDeploy(registry_, *channel_, agent, req);
    } catch (const Error &e) {
      std::fprintf(stderr, "rollback of %s failed: %s\n", agent.c_str(), e.what());
    }
  }
}

DeployedState Controller::CommitLocked(PlacementPlan plan, PortAssignment ports, PortPolicy policy,
                                       FleetManifest fleet, ConfigBundle bundle,
                                       bool require_connected) {
  std::vector<std::string> targets;
  for (const auto &agent : fleet.agents) {
    auto live = registry_.LivenessOf(agent.agent_name);
    if (require_connected) {
      if (live != Liveness::kConnected) {
        throw Error(ErrorCode::kAgentUnavailable,
                    "agent '" + agent.agent_name + "' is " +
                        std::string(live ? ToString(*live) : "not registered"));
      }
    } else if (!live || *live == Liveness::kUnavailable) {
      continue;
    }
    targets.push_back(agent.agent_name);
  }

  const std::int64_t version = (deployed_ ? deployed_->plan_version : 0) + 1;
  std::vector<AgentDeployResult> results;
  std::vector<std::string> acked;
  bool failed = false;
  for (const auto &agent : targets) {
    if (failed) {
      results.push_back({agent, "not_attempted", ""});
      continue;
    }
    const AgentBundle &slice = bundle.agents.at(agent);
    DeployRequest req{version, slice.proxy_config, slice.startup_script, std::nullopt};
    if (fleet.Find(agent)->is_main_agent) req.front_proxy_config = bundle.front_proxy_config;
    try {
      DispatchDeploy(registry_, *channel_, agent, req);
      acked.push_back(agent);
      results.push_back({agent, "ok", ""});
    } catch (const Error &e) {
      failed = true;
      results.push_back({agent,
                         e.code() == ErrorCode::kAgentUnavailable ? "unavailable" : "rejected",
                         e.what()});
    }
  }
  auto roll_back = [&](const FleetManifest &scope) {
    RollbackLocked(acked, scope);
    for (auto &r : results) {
      if (r.status == "ok") r.status = "rolled_back";
    }
  };
  if (failed) {
    roll_back(fleet);
    throw DeployRejectedError(std::move(results));
  }

  DeployedState state;
  state.plan = std::move(plan);
  state.ports = std::move(ports);
  state.port_policy = std::move(policy);
  state.fleet = std::move(fleet);
  state.bundle_checksum = bundle.checksum;
  state.bundle = std::move(bundle);
  state.deployed_at = clock_();
  state.plan_version = version;
  if (store_) {
    try {
      store_->Save(state, catalog_.version());
    } catch (...) {
      roll_back(state.fleet);
      throw;
    }
  }
  deployed_ = state;
  registry_.SetDeployedPlanVersion(std::to_string(version));
  return state;
}

// --- failover ------------------------------------------------------------------

FailoverResult Controller::HandleAgentFailure(const std::string &agent_name) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!deployed_) throw Error(ErrorCode::kValidation, "no deployed state to fail over");
  const DeployedState prev = *deployed_;
  FailoverResult result;
  result.failed_agent = agent_name;
  PlacementPlan plan = prev.plan;
  FleetManifest fleet = prev.fleet;
  if (prev.fleet.Find(agent_name) != nullptr) {
    ReallocationResult r = ReallocateOnFailure(prev.plan, prev.fleet, catalog_, agent_name);
    plan = std::move(r.plan);
    result.unplaced = std::move(r.unplaced);
    std::erase_if(fleet.agents, [&](const AgentEntry &a) { return a.agent_name == agent_name; });
  }
  plan.created_at = clock_();
  PortAssignment ports = AssignPorts(plan, prev.port_policy);
  ConfigBundle bundle = RenderBundle(plan, ports, fleet, catalog_);
  PortPolicy policy = prev.port_policy;
  for (const auto &[model, port] : ports.model_ports) policy.overrides[model] = port;
  result.state = CommitLocked(std::move(plan), std::move(ports), std::move(policy),
                              std::move(fleet), std::move(bundle), false);
  last_failover_ = result;
  return result;
}

std::optional<FailoverResult> Controller::last_failover() const {
  std::lock_guard<std::mutex> lock(mu_);
  return last_failover_;
}

std::optional<DeployedState> Controller::deployed() const {
  std::lock_guard<std::mutex> lock(mu_);
  return deployed_;
}

// --- views -----------------------------------------------------------------------

json Controller::Dashboard() const {
  const ClusterSnapshot snap = registry_.Snapshot(clock_());
  json j;
  j["controller"] = {{"status", "online"},
                     {"connected", snap.connected_count},
                     {"available", snap.available_count},
                     {"total_agents", snap.agents.size()},
                     {"last_update", snap.last_update},
                     {"auto_failover", options_.auto_failover},
                     {"heartbeat_degraded_ms", options_.thresholds.degraded_after_ms},
                     {"heartbeat_unavailable_ms", options_.thresholds.unavailable_after_ms}};
  json cards = json::array();
  for (const auto &record : snap.agents) {
    json card = record;
    json gpus = json::array();
    for (const auto &g : record.gpus) {
      json gj = g;
      gj["effective_mib"] = EffectiveVram(g);
      gpus.push_back(gj);
    }
    card["gpus"] = gpus;
    cards.push_back(card);
  }
  j["agents"] = cards;

  std::lock_guard<std::mutex> lock(mu_);
  if (deployed_) {
    json d{{"plan_version", deployed_->plan_version},
           {"deployed_at", deployed_->deployed_at},
           {"bundle_checksum", deployed_->bundle_checksum},
           {"model_ports", deployed_->ports.model_ports},
           {"stats_port", deployed_->ports.stats_port},
           {"instances", deployed_->plan.assignments.size()}};
    try {
      d["summary"] = SummaryToJson(BuildDistributionSummary(deployed_->plan, deployed_->fleet, catalog_));
    } catch (const Error &) {
      d["summary"] = nullptr;
    }
    j["deployed"] = d;
  } else {
    j["deployed"] = nullptr;
  }
  j["last_failover"] = last_failover_ ? FailoverToJson(*last_failover_) : json(nullptr);
  return j;
}

json Controller::SessionCapacity(const WizardSession &session) const {
  json rows = json::array();
  for (const auto &[agent, gpu_id] : session.enabled_gpus) {
    auto record = registry_.Find(agent);
    if (!record) continue;
    const GpuDevice *gpu = nullptr;
    for (const auto &g : record->gpus) {
      if (g.gpu_id == gpu_id) gpu = &g;
    }
    if (gpu == nullptr) continue;
    std::map<std::string, int> chosen;
    Mib used = 0;
    for (const auto &[k, n] : session.chosen_instances) {
      if (std::get<0>(k) != agent || std::get<1>(k) != gpu_id) continue;
      chosen[std::get<2>(k)] = n;
      used += ChoiceVram(catalog_, std::get<2>(k), n);
    }
    json models = json::array();
    for (const auto &m : catalog_.models()) {
      const int mine = chosen.count(m.model_id) ? chosen[m.model_id] : 0;
      models.push_back({{"model", m.model_id},
                        {"vram_mib", m.vram_per_instance},
                        {"chosen", mine},
                        {"max", MaxInstancesWithUsed(*gpu, m, used - m.vram_per_instance * mine)}});
    }
    rows.push_back({{"agent", agent},
                    {"gpu", gpu_id},
                    {"vendor", ToString(gpu->vendor)},
                    {"model_name", gpu->model_name},
                    {"vram_mib", gpu->vram_total},
                    {"reserved_mib", gpu->vram_reserved},
                    {"effective_mib", EffectiveVram(*gpu)},
                    {"used_mib", used},
                    {"free_mib", EffectiveVram(*gpu) - used},
                    {"models", models}});
  }
  return rows;
}

json Controller::SessionView(const WizardSession &session) const {
  json j = SessionToJson(session);
  j["capacity"] = SessionCapacity(session);
  try {
    j["ports"] = PortsToJson(AssignPorts(BuildDraftPlan(session), session.port_policy));
  } catch (const Error &) {
    j["ports"] = nullptr;
  }
  return j;
}

json SessionToJson(const WizardSession &s) {
  json gpus = json::array();
  for (const auto &[agent, gpu] : s.enabled_gpus) gpus.push_back({{"agent", agent}, {"gpu", gpu}});
  json instances = json::array();
  for (const auto &[k, n] : s.chosen_instances) {
    instances.push_back(
        {{"agent", std::get<0>(k)}, {"gpu", std::get<1>(k)}, {"model", std::get<2>(k)}, {"count", n}});
  }
  return json{{"session_id", s.session_id},
              {"stage", ToString(s.stage)},
              {"base_version", s.base_version},
              {"selected_agents", s.selected_agents},
              {"enabled_gpus", gpus},
              {"instances", instances},
              {"port_policy", PortPolicyToJson(s.port_policy)},
              {"draft_plan", s.draft_plan ? json(*s.draft_plan) : json(nullptr)}};
}

json SummaryToJson(const DistributionSummary &summary) {
  json per_agent = json::object();
  for (const auto &[name, d] : summary.per_agent) {
    per_agent[name] = {{"instances", d.instances}, {"gpus", d.gpus}, {"free_vram_mib", d.free_vram}};
  }
  return json{{"total_agents", summary.total_agents},
              {"total_instances", summary.total_instances},
              {"distinct_models", summary.distinct_models},
              {"per_model", summary.per_model},
              {"per_agent", per_agent}};
}

json OverviewToJson(const Overview &o) {
  json agents = json::object();
  for (const auto &[name, b] : o.bundle.agents) {
    agents[name] = {{"proxy_config", b.proxy_config}, {"startup_script", b.startup_script}};
  }
  json scope = json::array();
  for (const auto &a : o.scope.agents) scope.push_back(a.agent_name);
  return json{{"summary", SummaryToJson(o.summary)},
              {"ports", PortsToJson(o.ports)},
              {"stats_port", o.ports.stats_port},
              {"plan", o.plan},
              {"scope", scope},
              {"bundle",
               {{"checksum", o.bundle.checksum},
                {"front_proxy_config", o.bundle.front_proxy_config},
                {"agents", agents}}}};
}

json FailoverToJson(const FailoverResult &r) {
  json unplaced = json::array();
  for (const auto &u : r.unplaced) unplaced.push_back({{"model", u.model_id}, {"count", u.count}});
  return json{{"failed_agent", r.failed_agent},
              {"plan_version", r.state.plan_version},
              {"instances", r.state.plan.assignments.size()},
              {"unplaced", unplaced}};
}

}  // namespace sdai
