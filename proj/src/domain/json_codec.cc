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

#include "sdai/domain/json_codec.hpp"

namespace sdai {

using nlohmann::json;

namespace {

std::string NameFromId(const std::string &id) {
  auto colon = id.find(':');
  return colon == std::string::npos ? id : id.substr(0, colon);
}

std::string TagFromId(const std::string &id) {
  auto colon = id.find(':');
  return colon == std::string::npos ? std::string() : id.substr(colon + 1);
}

}  // namespace

void to_json(json &j, const ModelSpec &m) {
  j = json{{"id", m.model_id},
           {"family", m.family},
           {"params", m.parameter_scale},
           {"vision", m.vision_capable},
           {"embedding", m.embedding},
           {"vram_mib", m.vram_per_instance}};
}

void from_json(const json &j, ModelSpec &m) {
  m.model_id = j.at("id").get<std::string>();
  m.family = j.contains("family") ? j.at("family").get<std::string>()
                                  : NameFromId(m.model_id);
  m.parameter_scale = j.contains("params") ? j.at("params").get<std::string>()
                                           : TagFromId(m.model_id);
  m.vision_capable = j.value("vision", false);
  m.embedding = j.value("embedding", false);
  m.vram_per_instance = j.at("vram_mib").get<Mib>();
}

void to_json(json &j, const GpuDevice &g) {
  j = json{{"id", g.gpu_id},
           {"vendor", ToString(g.vendor)},
           {"model", g.model_name},
           {"vram_mib", g.vram_total},
           {"reserved_mib", g.vram_reserved},
           {"toolkit", ToString(g.accel_toolkit)},
           {"enabled", g.enabled}};
}

void from_json(const json &j, GpuDevice &g) {
  g.gpu_id = j.at("id").get<std::string>();
  g.vendor = ParseGpuVendor(j.value("vendor", std::string("OTHER")));
  g.model_name = j.value("model", std::string());
  g.vram_total = j.at("vram_mib").get<Mib>();
  g.vram_reserved = j.value("reserved_mib", kDefaultVramReservedMib);
  g.accel_toolkit = ParseAccelToolkit(j.value("toolkit", std::string("OTHER")));
  g.enabled = j.value("enabled", true);
}

void to_json(json &j, const AgentEntry &a) {
  j = json{{"name", a.agent_name},
           {"address", a.address},
           {"main", a.is_main_agent},
           {"gpus", a.gpus}};
}

void from_json(const json &j, AgentEntry &a) {
  a.agent_name = j.at("name").get<std::string>();
  a.address = j.at("address").get<std::string>();
  a.is_main_agent = j.value("main", false);
  a.gpus = j.value("gpus", std::vector<GpuDevice>{});
}

void to_json(json &j, const InstanceAssignment &a) {
  j = json{{"instance_id", a.instance_id},
           {"model_id", a.model_id},
           {"agent", a.agent_name},
           {"gpu", a.gpu_id},
           {"replica", a.replica_index}};
}

void from_json(const json &j, InstanceAssignment &a) {
  a.model_id = j.at("model_id").get<std::string>();
  a.agent_name = j.at("agent").get<std::string>();
  a.gpu_id = j.at("gpu").get<std::string>();
  a.replica_index = j.at("replica").get<int>();
  a.instance_id = j.contains("instance_id")
                      ? j.at("instance_id").get<std::string>()
                      : MakeInstanceId(a.agent_name, a.gpu_id, a.model_id,
                                       a.replica_index);
}

void to_json(json &j, const PlacementPlan &p) {
  j = json{{"assignments", p.assignments},
           {"catalog_version", p.catalog_version},
           {"created_at", p.created_at}};
}

void from_json(const json &j, PlacementPlan &p) {
  p.assignments = j.at("assignments").get<std::vector<InstanceAssignment>>();
  p.catalog_version = j.value("catalog_version", std::string());
  p.created_at = j.value("created_at", TimestampMs{0});
}

json ManifestToJson(const FleetManifest &manifest) {
  return json{{"agents", manifest.agents}};
}

FleetManifest ManifestFromJson(const json &j) {
  FleetManifest manifest;
  manifest.agents = j.at("agents").get<std::vector<AgentEntry>>();
  return manifest;
}

}  // namespace sdai
