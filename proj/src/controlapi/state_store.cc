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

#include "sdai/controlapi/state_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "sdai/common/checksum.hpp"
#include "sdai/domain/json_codec.hpp"

namespace sdai {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "sdai-state/1";

json BundleToJson(const ConfigBundle &bundle) {
  json agents = json::object();
  for (const auto &[name, b] : bundle.agents) {
    agents[name] = json{{"proxy_config", b.proxy_config}, {"startup_script", b.startup_script}};
  }
  return json{{"agents", agents},
              {"front_proxy_config", bundle.front_proxy_config},
              {"checksum", bundle.checksum}};
}

ConfigBundle BundleFromJson(const json &j) {
  ConfigBundle bundle;
  for (const auto &[name, b] : j.at("agents").items()) {
    bundle.agents[name] = {b.at("proxy_config").get<std::string>(),
                           b.at("startup_script").get<std::string>()};
  }
  bundle.front_proxy_config = j.at("front_proxy_config").get<std::string>();
  bundle.checksum = j.at("checksum").get<std::string>();
  return bundle;
}

}  // namespace

json PortsToJson(const PortAssignment &ports) {
  json instances = json::object();
  for (const auto &[id, ip] : ports.instance_ports) {
    instances[id] = json{{"agent", ip.agent_name}, {"port", ip.port}};
  }
  return json{{"model_ports", ports.model_ports},
              {"instance_ports", instances},
              {"stats_port", ports.stats_port}};
}

PortAssignment PortsFromJson(const json &j) {
  PortAssignment ports;
  ports.model_ports = j.at("model_ports").get<std::map<std::string, int>>();
  for (const auto &[id, ip] : j.at("instance_ports").items()) {
    ports.instance_ports[id] = {ip.at("agent").get<std::string>(), ip.at("port").get<int>()};
  }
  ports.stats_port = j.at("stats_port").get<int>();
  return ports;
}

namespace {

void WriteAll(int fd, std::string_view data, const std::string &path) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kCorruptStore, "write " + path + ": " + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

json PortPolicyToJson(const PortPolicy &policy) {
  return json{{"model_port_base", policy.model_port_base},
              {"instance_port_base", policy.instance_port_base},
              {"stats_port", policy.stats_port},
              {"overrides", policy.overrides}};
}

PortPolicy PortPolicyFromJson(const json &j) {
  PortPolicy policy;
  policy.model_port_base = j.value("model_port_base", kDefaultModelPortBase);
  policy.instance_port_base = j.value("instance_port_base", kDefaultInstancePortBase);
  policy.stats_port = j.value("stats_port", kDefaultStatsPort);
  policy.overrides = j.value("overrides", std::map<std::string, int>{});
  return policy;
}

json DeployedStateToJson(const DeployedState &state) {
  return json{{"plan_version", state.plan_version},
              {"deployed_at", state.deployed_at},
              {"bundle_checksum", state.bundle_checksum},
              {"plan", state.plan},
              {"ports", PortsToJson(state.ports)},
              {"port_policy", PortPolicyToJson(state.port_policy)},
              {"fleet", ManifestToJson(state.fleet)},
              {"bundle", BundleToJson(state.bundle)}};
}

DeployedState DeployedStateFromJson(const json &j) {
  DeployedState state;
  state.plan_version = j.at("plan_version").get<std::int64_t>();
  state.deployed_at = j.at("deployed_at").get<TimestampMs>();
  state.bundle_checksum = j.at("bundle_checksum").get<std::string>();
  state.plan = j.at("plan").get<PlacementPlan>();
  state.ports = PortsFromJson(j.at("ports"));
  state.port_policy = PortPolicyFromJson(j.at("port_policy"));
  state.fleet = ManifestFromJson(j.at("fleet"));
  state.bundle = BundleFromJson(j.at("bundle"));
  return state;
}

void StateStore::Save(const DeployedState &state, const std::string &catalog_version) const {
  const json body = DeployedStateToJson(state);
  const json envelope{{"format", kFormat},
                      {"catalog_version", catalog_version},
                      {"state", body},
                      {"checksum", Sha256Hex(body.dump())}};
  const std::string text = envelope.dump(2) + "\n";
  const std::string tmp = path_ + ".tmp";

  auto hook = [&](std::string_view step) {
    if (fault_hook_) fault_hook_(step);
  };
  hook("write");
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::kCorruptStore, "open " + tmp + ": " + std::strerror(errno));
  try {
    WriteAll(fd, text, tmp);
    hook("fsync");
    if (::fsync(fd) != 0) {
      throw Error(ErrorCode::kCorruptStore, "fsync " + tmp + ": " + std::strerror(errno));
    }
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  hook("rename");
  if (std::rename(tmp.c_str(), path_.c_str()) != 0) {
    throw Error(ErrorCode::kCorruptStore, "rename " + tmp + ": " + std::strerror(errno));
  }
}

std::optional<DeployedState> StateStore::Load(std::string *catalog_version) const {
  if (!std::filesystem::exists(path_)) return std::nullopt;
  std::ifstream in(path_, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json envelope = json::parse(text, nullptr, false);
  if (envelope.is_discarded() || !envelope.is_object()) {
    throw Error(ErrorCode::kCorruptStore, path_ + ": not a valid state document");
  }
  try {
    if (envelope.at("format").get<std::string>() != kFormat) {
      throw Error(ErrorCode::kCorruptStore, path_ + ": unsupported format");
    }
    const json &body = envelope.at("state");
    if (Sha256Hex(body.dump()) != envelope.at("checksum").get<std::string>()) {
      throw Error(ErrorCode::kCorruptStore, path_ + ": checksum mismatch");
    }
    if (catalog_version != nullptr) {
      *catalog_version = envelope.at("catalog_version").get<std::string>();
    }
    return DeployedStateFromJson(body);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kCorruptStore, path_ + ": " + e.what());
  }
}

void StateStore::Remove() const {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
  std::filesystem::remove(path_ + ".tmp", ec);
}

}  // namespace sdai
