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

// A real controller behind its HTTP server plus a simulated fleet, all on
// loopback aliases.

#include <chrono>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "sdai/controlapi/control_server.hpp"
#include "sdai/simfleet/simfleet.hpp"

namespace sdai::testing {

using LiveChoice = std::tuple<std::string, std::string, std::string, int>;

class LiveCluster {
 public:
  LiveCluster(ModelCatalog catalog, ControllerOptions options, const std::string &host,
              std::chrono::milliseconds sweep_interval = std::chrono::milliseconds(0)) {
    controller_ = std::make_unique<Controller>(std::move(catalog), std::move(options),
                                               std::make_shared<HttpAgentChannel>(std::chrono::seconds(3)));
    ControlServerOptions server_options;
    server_options.sweep_interval = sweep_interval;
    server_ = std::make_unique<ControlServer>(*controller_, server_options);
    address_ = host + ":" + std::to_string(server_->Start(host, 0));
  }
  ~LiveCluster() {
    fleet_.reset();
    server_->Stop();
  }

  void Spawn(const FleetManifest &manifest, const std::map<std::string, SimAgentConfig> &overrides = {},
             std::chrono::milliseconds heartbeat = std::chrono::milliseconds(100)) {
    fleet_ = SimFleet::Spawn(manifest, overrides, address_, heartbeat);
  }

  Controller &controller() { return *controller_; }
  SimFleet &fleet() { return *fleet_; }
  const std::string &address() const { return address_; }

  /// Runs the wizard for `choices` and deploys.
  DeployedState Deploy(const std::vector<LiveChoice> &choices) {
    Controller &c = *controller_;
    auto sid = c.CreateSession().session_id;
    std::set<std::string> agents;
    for (const auto &ch : choices) agents.insert(std::get<0>(ch));
    c.SelectAgents(sid, agents, false);
    for (const auto &[agent, gpu, model, count] : choices) {
      c.ToggleGpu(sid, agent, gpu, true);
      c.SetModelInstances(sid, agent, gpu, model, count);
    }
    c.SetStage(sid, WizardStage::kConfigure);
    c.SetStage(sid, WizardStage::kGenerate);
    return c.Deploy(sid);
  }

  std::optional<Liveness> LivenessOf(const std::string &agent) { return controller_->registry().LivenessOf(agent); }

 private:
  std::unique_ptr<Controller> controller_;
  std::unique_ptr<ControlServer> server_;
  std::string address_;
  std::unique_ptr<SimFleet> fleet_;
};

/// Polls `pred` until it holds or `timeout` passes.
inline bool WaitFor(const std::function<bool()> &pred, std::chrono::milliseconds timeout,
                    std::chrono::milliseconds poll = std::chrono::milliseconds(10)) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(poll);
  }
  return pred();
}

inline GpuDevice SimGpu(const std::string &id, Mib total) {
  GpuDevice g;
  g.gpu_id = id;
  g.vendor = GpuVendor::kNvidia;
  g.model_name = "sim";
  g.vram_total = total;
  g.vram_reserved = 512;
  g.accel_toolkit = AccelToolkit::kCuda;
  return g;
}

/// `count` agents n1..nN on `subnet`.1 .. `subnet`.N, n1 main, one 8 GiB GPU each.
inline FleetManifest SimManifest(const std::string &subnet, int count) {
  FleetManifest m;
  for (int i = 1; i <= count; ++i) {
    AgentEntry a;
    a.agent_name = "n" + std::to_string(i);
    a.address = subnet + "." + std::to_string(i) + ":7001";
    a.gpus = {SimGpu("gpu0", 8192)};
    a.is_main_agent = i == 1;
    m.agents.push_back(a);
  }
  return m;
}

}  // namespace sdai::testing
