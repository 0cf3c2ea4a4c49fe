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

#include <httplib.h>

#include "sdai/agentproto/agentproto.hpp"

namespace sdai {

using nlohmann::json;

namespace {

httplib::Result PostJson(const std::string &address, const std::string &path, const json &body,
                         std::chrono::milliseconds timeout) {
  HostPort hp = ParseHostPort(address);
  httplib::Client client(hp.host, hp.port);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  return client.Post(path, body.dump(), "application/json");
}

std::string RejectMessage(const httplib::Response &res) {
  json body = json::parse(res.body, nullptr, false);
  if (body.is_object() && body.contains("message")) return body["message"].get<std::string>();
  return res.body.empty() ? "HTTP " + std::to_string(res.status) : res.body;
}

}  // namespace

DeployAck HttpAgentChannel::Deploy(const std::string &address, const DeployRequest &request) {
  auto res = PostJson(address, "/v1/deploy", json(request), timeout_);
  if (!res) {
    throw Error(ErrorCode::kAgentUnavailable,
                "agent at " + address + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) throw Error(ErrorCode::kDeployRejected, RejectMessage(*res));
  try {
    return json::parse(res->body).get<DeployAck>();
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kDeployRejected, std::string("malformed deploy ack: ") + e.what());
  }
}

void HttpAgentChannel::Stop(const std::string &address, const StopRequest &request) {
  auto res = PostJson(address, "/v1/stop", json(request), timeout_);
  if (!res) {
    throw Error(ErrorCode::kAgentUnavailable,
                "agent at " + address + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) throw Error(ErrorCode::kDeployRejected, RejectMessage(*res));
}

DeployAck DispatchDeploy(AgentRegistry &registry, AgentChannel &channel,
                         const std::string &agent_name, const DeployRequest &request) {
  auto record = registry.Find(agent_name);
  if (!record) throw Error(ErrorCode::kUnknownAgent, "unknown agent '" + agent_name + "'");
  if (record->liveness == Liveness::kUnavailable) {
    throw Error(ErrorCode::kAgentUnavailable, "agent '" + agent_name + "' is unavailable");
  }
  DeployAck ack = channel.Deploy(record->address, request);
  if (ack.plan_version != request.plan_version) {
    throw Error(ErrorCode::kDeployRejected,
                "agent '" + agent_name + "' acked plan version " +
                    std::to_string(ack.plan_version) + ", expected " +
                    std::to_string(request.plan_version));
  }
  std::vector<RunningInstance> running;
  for (const auto &r : ack.results) {
    if (r.started) running.push_back({r.instance_id, r.model_id, r.port, true, true});
  }
  registry.SetRunningInstances(agent_name, std::move(running));
  return ack;
}

}  // namespace sdai
