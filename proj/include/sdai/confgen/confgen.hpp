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

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sdai/domain/domain.hpp"
#include "sdai/placement/placement.hpp"

namespace sdai {

inline constexpr int kDefaultModelPortBase = 20000;
inline constexpr int kDefaultInstancePortBase = 11500;
inline constexpr int kDefaultStatsPort = 8404;

struct PortPolicy {
  int model_port_base = kDefaultModelPortBase;
  int instance_port_base = kDefaultInstancePortBase;
  int stats_port = kDefaultStatsPort;
  std::map<std::string, int> overrides;  // model_id -> port

  bool operator==(const PortPolicy &) const = default;
};

struct InstancePort {
  std::string agent_name;
  int port = 0;
  bool operator==(const InstancePort &) const = default;
};

struct PortAssignment {
  std::map<std::string, int> model_ports;
  std::map<std::string, InstancePort> instance_ports;  // keyed by instance_id
  int stats_port = kDefaultStatsPort;

  bool operator==(const PortAssignment &) const = default;
};

/// Model ports: override if present, else model_port_base + rank of model_id
/// among the plan's models. Instance ports: per agent, instance_port_base +
/// rank in (model_id, gpu_id, replica_index) order. Throws
/// Error(kPortCollision) naming the colliding models, and Error(kValidation)
/// for ports outside [1024, 65535].
PortAssignment AssignPorts(const PlacementPlan &plan, const PortPolicy &policy);

/// Per-agent proxy configuration (HAProxy 2.x subset). Every model in the
/// plan gets a frontend on its model port and a round-robin backend that
/// lists every instance cluster-wide: local ones on loopback, remote ones on
/// the hosting agent's address.
std::string GenerateAgentProxyConfig(const std::string &agent_name, const PlacementPlan &plan,
                                     const PortAssignment &ports,
                                     const FleetManifest &manifest);

/// Front proxy: one frontend per model, servers are the agents hosting it.
std::string GenerateFrontProxyConfig(const PlacementPlan &plan, const PortAssignment &ports,
                                     const FleetManifest &manifest);

/// POSIX shell script with one guarded `launch` line per local instance,
/// sorted by instance port.
std::string GenerateStartupScript(const std::string &agent_name, const PlacementPlan &plan,
                                  const PortAssignment &ports, const ModelCatalog &catalog);

struct AgentBundle {
  std::string proxy_config;
  std::string startup_script;
  bool operator==(const AgentBundle &) const = default;
};

struct ConfigBundle {
  std::map<std::string, AgentBundle> agents;
  std::string front_proxy_config;
  std::string checksum;  // SHA-256 hex over the canonical concatenation
  bool operator==(const ConfigBundle &) const = default;
};

/// Renders every agent of `manifest` plus the front config.
ConfigBundle RenderBundle(const PlacementPlan &plan, const PortAssignment &ports,
                          const FleetManifest &manifest, const ModelCatalog &catalog);

// ---------------------------------------------------------------------------
// Grammar subset used by the generated configs, and its reader.
//
//   file     := (comment | blank | section)*
//   section  := keyword [name] LF (indent directive LF)*
//   keyword  := global | defaults | frontend | backend | listen
//   indent   := two spaces
// ---------------------------------------------------------------------------

struct ProxySection {
  std::string keyword;
  std::string name;
  std::vector<std::vector<std::string>> directives;  // tokenized lines
};

struct ProxyConfigText {
  std::vector<ProxySection> sections;
};

/// Throws Error(kParse) with the offending line number.
ProxyConfigText ParseProxyConfig(std::string_view text);

struct ProxyServer {
  std::string name;
  std::string host;
  int port = 0;
  bool check = false;
  bool operator==(const ProxyServer &) const = default;
};

struct ProxyRoute {
  std::string model_id;
  int bind_port = 0;
  std::string balance;
  std::vector<ProxyServer> servers;
  bool operator==(const ProxyRoute &) const = default;
};

struct ProxyTopology {
  int stats_port = 0;
  std::vector<ProxyRoute> routes;  // sorted by model_id
};

/// Resolves frontends to their default backends. Throws Error(kParse) on
/// dangling references or missing binds.
ProxyTopology InterpretProxyConfig(std::string_view text);

struct LaunchCommand {
  std::string instance_id;
  std::string model_id;
  std::string gpu_id;
  std::string bind_host;
  int port = 0;
  Mib vram_mib = 0;
  bool operator==(const LaunchCommand &) const = default;
};

/// Extracts the launch lines (with the `# instance` annotations preceding
/// them). Throws Error(kParse).
std::vector<LaunchCommand> ParseStartupScript(std::string_view text);

}  // namespace sdai
