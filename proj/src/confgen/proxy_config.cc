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
#include <set>
#include <sstream>
#include <tuple>

#include "sdai/confgen/confgen.hpp"

namespace sdai {

namespace {

constexpr std::string_view kFrontendPrefix = "fe_";
constexpr std::string_view kBackendPrefix = "be_";

// Shared prologue of every generated proxy file.
void WriteCommonSections(std::ostringstream &out, int stats_port) {
  out << "global\n"
      << "  maxconn 4096\n"
      << "\n"
      << "defaults\n"
      << "  mode http\n"
      << "  timeout connect 5s\n"
      << "  timeout client 300s\n"
      << "  timeout server 300s\n"
      << "\n"
      << "listen stats\n"
      << "  bind *:" << stats_port << "\n"
      << "  stats enable\n"
      << "  stats uri /stats\n";
}

void WriteFrontend(std::ostringstream &out, const std::string &model_id, int port) {
  out << "\n"
      << "frontend " << kFrontendPrefix << model_id << "\n"
      << "  bind *:" << port << "\n"
      << "  default_backend " << kBackendPrefix << model_id << "\n";
}

[[noreturn]] void ThrowInfeasible(const std::string &subject, const std::string &detail) {
  throw InfeasiblePlanError({PlanViolation{ViolationKind::kUnknownGpu, subject, detail}});
}

const AgentEntry &RequireAgent(const FleetManifest &manifest, const std::string &agent_name) {
  const AgentEntry *agent = manifest.Find(agent_name);
  if (agent == nullptr) {
    throw Error(ErrorCode::kUnknownAgent, "unknown agent '" + agent_name + "'");
  }
  return *agent;
}

int ModelPort(const PortAssignment &ports, const std::string &model_id) {
  auto it = ports.model_ports.find(model_id);
  if (it == ports.model_ports.end()) {
    throw InfeasiblePlanError({PlanViolation{ViolationKind::kUnknownModel,
                                             "models/" + model_id, "model has no assigned port"}});
  }
  return it->second;
}

std::vector<std::string> Tokenize(std::string_view line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) tokens.emplace_back(line.substr(start, i - start));
  }
  return tokens;
}

[[noreturn]] void ThrowParse(std::size_t line_no, const std::string &what) {
  throw Error(ErrorCode::kParse, "proxy config line " + std::to_string(line_no) + ": " + what);
}

int ParseBindPort(const std::string &spec) {
  auto colon = spec.rfind(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kParse, "bind '" + spec + "' has no port");
  }
  return ParseHostPort(std::string(colon == 0 ? "*" : "") + spec).port;
}

}  // namespace

std::string GenerateAgentProxyConfig(const std::string &agent_name, const PlacementPlan &plan,
                                     const PortAssignment &ports,
                                     const FleetManifest &manifest) {
  RequireAgent(manifest, agent_name);

  // model_id -> servers sorted by (agent_name, instance_id)
  std::map<std::string, std::vector<std::tuple<std::string, std::string, std::string>>> pools;
  for (const auto &a : plan.assignments) {
    const AgentEntry *host_agent = manifest.Find(a.agent_name);
    if (host_agent == nullptr) {
      ThrowInfeasible("assignments/" + a.instance_id, "agent '" + a.agent_name + "' not in fleet");
    }
    auto ip = ports.instance_ports.find(a.instance_id);
    if (ip == ports.instance_ports.end()) {
      ThrowInfeasible("assignments/" + a.instance_id, "instance has no assigned port");
    }
    const std::string host =
        a.agent_name == agent_name ? "127.0.0.1" : ParseHostPort(host_agent->address).host;
    pools[a.model_id].emplace_back(a.agent_name, a.instance_id,
                                   host + ":" + std::to_string(ip->second.port));
  }

  std::ostringstream out;
  out << "# sdai proxy configuration for agent " << agent_name << "\n";
  WriteCommonSections(out, ports.stats_port);
  for (auto &[model_id, servers] : pools) {
    std::sort(servers.begin(), servers.end());
    WriteFrontend(out, model_id, ModelPort(ports, model_id));
    out << "\n"
        << "backend " << kBackendPrefix << model_id << "\n"
        << "  balance roundrobin\n";
    for (const auto &[agent, instance_id, endpoint] : servers) {
      out << "  server " << instance_id << " " << endpoint << " check\n";
    }
  }
  return out.str();
}

std::string GenerateFrontProxyConfig(const PlacementPlan &plan, const PortAssignment &ports,
                                     const FleetManifest &manifest) {
  std::map<std::string, std::set<std::string>> hosts;  // model_id -> agents
  for (const auto &a : plan.assignments) {
    if (manifest.Find(a.agent_name) == nullptr) {
      ThrowInfeasible("assignments/" + a.instance_id, "agent '" + a.agent_name + "' not in fleet");
    }
    hosts[a.model_id].insert(a.agent_name);
  }

  std::ostringstream out;
  out << "# sdai front proxy configuration\n";
  WriteCommonSections(out, ports.stats_port);
  for (const auto &[model_id, agents] : hosts) {
    const int port = ModelPort(ports, model_id);
    WriteFrontend(out, model_id, port);
    out << "\n"
        << "backend " << kBackendPrefix << model_id << "\n"
        << "  balance roundrobin\n";
    for (const auto &agent_name : agents) {
      const std::string host = ParseHostPort(manifest.Find(agent_name)->address).host;
      out << "  server " << agent_name << " " << host << ":" << port << " check\n";
    }
  }
  return out.str();
}

ProxyConfigText ParseProxyConfig(std::string_view text) {
  static const std::set<std::string> kKeywords = {"global", "defaults", "frontend", "backend",
                                                  "listen"};
  ProxyConfigText config;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    auto tokens = Tokenize(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    const bool indented = line.front() == ' ' || line.front() == '\t';
    if (!indented) {
      if (kKeywords.count(tokens[0]) == 0) ThrowParse(line_no, "unknown section '" + tokens[0] + "'");
      if (tokens.size() > 2) ThrowParse(line_no, "section header takes at most one name");
      if ((tokens[0] == "frontend" || tokens[0] == "backend" || tokens[0] == "listen") &&
          tokens.size() != 2) {
        ThrowParse(line_no, "section '" + tokens[0] + "' requires a name");
      }
      config.sections.push_back({tokens[0], tokens.size() == 2 ? tokens[1] : "", {}});
      continue;
    }
    if (config.sections.empty()) ThrowParse(line_no, "directive outside of a section");
    auto &section = config.sections.back();
    if (tokens[0] == "server") {
      if (section.keyword != "backend" && section.keyword != "listen") {
        ThrowParse(line_no, "server line outside of a backend");
      }
      if (tokens.size() < 3) ThrowParse(line_no, "server needs a name and an address");
    } else if (tokens[0] == "bind" && tokens.size() < 2) {
      ThrowParse(line_no, "bind needs an address");
    }
    section.directives.push_back(std::move(tokens));
  }
  return config;
}

ProxyTopology InterpretProxyConfig(std::string_view text) {
  ProxyConfigText config = ParseProxyConfig(text);
  ProxyTopology topo;

  std::map<std::string, const ProxySection *> backends;
  for (const auto &s : config.sections) {
    if (s.keyword == "backend") backends[s.name] = &s;
  }

  auto read_servers = [](const ProxySection &s, ProxyRoute &route) {
    for (const auto &d : s.directives) {
      if (d[0] == "balance" && d.size() >= 2) route.balance = d[1];
      if (d[0] != "server") continue;
      ProxyServer server;
      server.name = d[1];
      HostPort hp = ParseHostPort(d[2]);
      server.host = hp.host;
      server.port = hp.port;
      server.check = std::find(d.begin() + 3, d.end(), "check") != d.end();
      route.servers.push_back(std::move(server));
    }
  };

  for (const auto &s : config.sections) {
    if (s.keyword == "listen" && s.name == "stats") {
      for (const auto &d : s.directives) {
        if (d[0] == "bind") topo.stats_port = ParseBindPort(d[1]);
      }
      continue;
    }
    if (s.keyword != "frontend") continue;
    ProxyRoute route;
    route.model_id = s.name.rfind(kFrontendPrefix, 0) == 0
                         ? s.name.substr(kFrontendPrefix.size())
                         : s.name;
    std::string backend_name;
    for (const auto &d : s.directives) {
      if (d[0] == "bind") route.bind_port = ParseBindPort(d[1]);
      if (d[0] == "default_backend" && d.size() >= 2) backend_name = d[1];
    }
    if (route.bind_port == 0) {
      throw Error(ErrorCode::kParse, "frontend '" + s.name + "' has no bind");
    }
    auto it = backends.find(backend_name);
    if (it == backends.end()) {
      throw Error(ErrorCode::kParse,
                  "frontend '" + s.name + "' references missing backend '" + backend_name + "'");
    }
    read_servers(*it->second, route);
    topo.routes.push_back(std::move(route));
  }
  std::sort(topo.routes.begin(), topo.routes.end(),
            [](const ProxyRoute &a, const ProxyRoute &b) { return a.model_id < b.model_id; });
  return topo;
}

}  // namespace sdai
