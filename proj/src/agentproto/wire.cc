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

#include "sdai/agentproto/agentproto.hpp"
#include "sdai/domain/json_codec.hpp"

namespace sdai {

using nlohmann::json;

void to_json(json &j, const RunningInstance &r) {
  j = json{{"instance_id", r.instance_id}, {"model_id", r.model_id}, {"port", r.port},
           {"healthy", r.healthy},         {"confirmed", r.confirmed}};
}

void from_json(const json &j, RunningInstance &r) {
  r.instance_id = j.at("instance_id").get<std::string>();
  r.model_id = j.value("model_id", std::string());
  r.port = j.value("port", 0);
  r.healthy = j.value("healthy", true);
  r.confirmed = j.value("confirmed", true);
}

void to_json(json &j, const AgentRecord &r) {
  json free = json::object();
  for (const auto &[gpu, mib] : r.gpu_free_vram) free[gpu] = mib;
  j = json{{"name", r.agent_name},
           {"address", r.address},
           {"main", r.is_main_agent},
           {"liveness", ToString(r.liveness)},
           {"last_heartbeat", r.last_heartbeat},
           {"registered_at", r.registered_at},
           {"gpus", r.gpus},
           {"gpu_free", free},
           {"instances", r.running_instances}};
}

void to_json(json &j, const RegistrationRequest &r) {
  j = json{{"name", r.agent_name},
           {"address", r.address},
           {"main", r.is_main_agent},
           {"gpus", r.gpus},
           {"instances", r.instances}};
}

void from_json(const json &j, RegistrationRequest &r) {
  r.agent_name = j.at("name").get<std::string>();
  r.address = j.at("address").get<std::string>();
  r.is_main_agent = j.value("main", false);
  r.gpus = j.value("gpus", std::vector<GpuDevice>{});
  r.instances = j.value("instances", std::vector<RunningInstance>{});
}

void to_json(json &j, const HeartbeatPayload &p) {
  json instances = json::object();
  for (const auto &[id, healthy] : p.instance_statuses) instances[id] = healthy;
  json free = json::object();
  for (const auto &[gpu, mib] : p.gpu_free_vram) free[gpu] = mib;
  j = json{{"instances", instances}, {"gpu_free", free}, {"sent_at", p.sent_at}};
}

void from_json(const json &j, HeartbeatPayload &p) {
  p.instance_statuses = j.value("instances", std::map<std::string, bool>{});
  p.gpu_free_vram = j.value("gpu_free", std::map<std::string, Mib>{});
  p.sent_at = j.value("sent_at", TimestampMs{0});
}

void to_json(json &j, const DeployRequest &r) {
  j = json{{"plan_version", r.plan_version},
           {"proxy_config", r.proxy_config},
           {"startup_script", r.startup_script}};
  if (r.front_proxy_config) j["front_proxy_config"] = *r.front_proxy_config;
}

void from_json(const json &j, DeployRequest &r) {
  r.plan_version = j.at("plan_version").get<std::int64_t>();
  r.proxy_config = j.at("proxy_config").get<std::string>();
  r.startup_script = j.at("startup_script").get<std::string>();
  if (j.contains("front_proxy_config") && j["front_proxy_config"].is_string()) {
    r.front_proxy_config = j["front_proxy_config"].get<std::string>();
  } else {
    r.front_proxy_config.reset();
  }
}

void to_json(json &j, const InstanceStartResult &r) {
  j = json{{"instance_id", r.instance_id}, {"model_id", r.model_id}, {"port", r.port},
           {"started", r.started},         {"message", r.message}};
}

void from_json(const json &j, InstanceStartResult &r) {
  r.instance_id = j.at("instance_id").get<std::string>();
  r.model_id = j.value("model_id", std::string());
  r.port = j.value("port", 0);
  r.started = j.value("started", false);
  r.message = j.value("message", std::string());
}

void to_json(json &j, const DeployAck &a) {
  j = json{{"plan_version", a.plan_version}, {"results", a.results}};
}

void from_json(const json &j, DeployAck &a) {
  a.plan_version = j.at("plan_version").get<std::int64_t>();
  a.results = j.value("results", std::vector<InstanceStartResult>{});
}

void to_json(json &j, const StopRequest &r) { j = json{{"instance_ids", r.instance_ids}}; }

void from_json(const json &j, StopRequest &r) {
  r.instance_ids = j.at("instance_ids").get<std::vector<std::string>>();
}

void to_json(json &j, const ClusterSnapshot &s) {
  j = json{{"connected", s.connected_count},
           {"available", s.available_count},
           {"last_update", s.last_update},
           {"deployed_plan_version",
            s.deployed_plan_version ? json(*s.deployed_plan_version) : json(nullptr)},
           {"agents", s.agents}};
}

json ErrorBody(const Error &error) {
  return json{{"error", ErrorCodeName(error.code())}, {"message", error.what()}};
}

Error ErrorFromBody(const json &body, int http_status) {
  std::string name = body.is_object() ? body.value("error", std::string()) : std::string();
  std::string message = body.is_object() ? body.value("message", std::string()) : body.dump();
  for (int c = 0; c <= static_cast<int>(ErrorCode::kTransport); ++c) {
    auto code = static_cast<ErrorCode>(c);
    if (ErrorCodeName(code) == name) return Error(code, message);
  }
  return Error(ErrorCode::kTransport,
               "HTTP " + std::to_string(http_status) + (message.empty() ? "" : ": " + message));
}

}  // namespace sdai
