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

#include <string>

#include "sdai/simfleet/simfleet.hpp"

namespace sdai {

std::unique_ptr<SimFleet> SimFleet::Spawn(const FleetManifest &manifest,
                                          const std::map<std::string, SimAgentConfig> &overrides,
                                          const std::string &controller_address,
                                          std::chrono::milliseconds heartbeat_interval) {
  for (const auto &[name, cfg] : overrides) {
    if (!manifest.Find(name)) throw Error(ErrorCode::kUnknownAgent, "no agent '" + name + "' in manifest");
  }
  auto fleet = std::unique_ptr<SimFleet>(new SimFleet());
  std::string failures;
  for (const auto &entry : manifest.agents) {
    SimAgentConfig cfg;
    cfg.heartbeat_interval = heartbeat_interval;
    if (auto it = overrides.find(entry.agent_name); it != overrides.end()) {
      cfg = it->second;
      if (cfg.heartbeat_interval.count() <= 0) cfg.heartbeat_interval = heartbeat_interval;
    }
    cfg.agent_name = entry.agent_name;
    cfg.address = entry.address;
    cfg.gpus = entry.gpus;
    cfg.is_main_agent = entry.is_main_agent;
    try {
      auto agent = std::make_unique<SimAgent>(cfg, controller_address);
      agent->Start();
      fleet->agents_[entry.agent_name] = std::move(agent);
    } catch (const Error &e) {
      if (!failures.empty()) failures += "; ";
      failures += entry.agent_name + ": " + e.what();
    }
  }
  if (!failures.empty()) {
    fleet->Shutdown();
    throw Error(ErrorCode::kRegistrationFailed, failures);
  }
  return fleet;
}

SimFleet::~SimFleet() { Shutdown(); }

SimAgent *SimFleet::Find(const std::string &agent_name) {
  auto it = agents_.find(agent_name);
  return it == agents_.end() ? nullptr : it->second.get();
}

void SimFleet::InjectFailure(const std::string &agent_name, FailureMode mode, const std::string &param) {
  SimAgent *agent = Find(agent_name);
  if (!agent) throw Error(ErrorCode::kUnknownAgent, "no simulated agent '" + agent_name + "'");
  agent->InjectFailure(mode, param);
}

void SimFleet::Shutdown() {
  for (auto &[name, agent] : agents_) agent->Stop();
  agents_.clear();
}

}  // namespace sdai
