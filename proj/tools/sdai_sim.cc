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

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>

#include "sdai/simfleet/simfleet.hpp"

namespace {

// agent=mode[:param]
std::pair<std::string, sdai::SimAgentConfig> ParseFailSpec(const std::string &spec) {
  auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw sdai::Error(sdai::ErrorCode::kParse, "expected agent=mode[:param], got '" + spec + "'");
  }
  std::string rest = spec.substr(eq + 1);
  sdai::SimAgentConfig cfg;
  auto colon = rest.find(':');
  cfg.failure_mode = sdai::ParseFailureMode(rest.substr(0, colon));
  if (colon != std::string::npos) cfg.failure_param = rest.substr(colon + 1);
  return {spec.substr(0, eq), cfg};
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Simulated SDAI agent fleet"};
  std::string manifest_path;
  std::string controller = "127.0.0.1:8080";
  std::vector<std::string> fails;
  int heartbeat_ms = 1000;
  int response_delay_ms = 0;
  app.add_option("--manifest", manifest_path, "fleet manifest JSON")->required();
  app.add_option("--controller", controller, "host:port of the controller");
  app.add_option("--fail", fails, "agent=mode[:param], repeatable");
  app.add_option("--heartbeat-interval", heartbeat_ms, "heartbeat period in ms")->check(CLI::PositiveNumber);
  app.add_option("--response-delay", response_delay_ms, "stub response delay in ms")->check(CLI::NonNegativeNumber);
  CLI11_PARSE(app, argc, argv);

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  try {
    sdai::FleetManifest manifest = sdai::LoadFleetManifest(sdai::ReadTextFile(manifest_path));
    std::map<std::string, sdai::SimAgentConfig> overrides;
    for (const auto &entry : manifest.agents) {
      overrides[entry.agent_name].response_delay = std::chrono::milliseconds(response_delay_ms);
    }
    for (const auto &spec : fails) {
      auto [agent, cfg] = ParseFailSpec(spec);
      if (!manifest.Find(agent)) throw sdai::Error(sdai::ErrorCode::kUnknownAgent, "no agent '" + agent + "'");
      cfg.response_delay = std::chrono::milliseconds(response_delay_ms);
      overrides[agent] = cfg;
    }
    auto fleet = sdai::SimFleet::Spawn(manifest, overrides, controller, std::chrono::milliseconds(heartbeat_ms));
    std::fprintf(stderr, "sdai-sim: %zu agents registered with %s\n", fleet->size(), controller.c_str());
    int sig = 0;
    sigwait(&set, &sig);
    fleet->Shutdown();
  } catch (const sdai::Error &e) {
    std::fprintf(stderr, "sdai-sim: %s\n", e.what());
    return 1;
  }
  return 0;
}
