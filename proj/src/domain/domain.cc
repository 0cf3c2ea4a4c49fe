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

#include "sdai/domain/domain.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "sdai/domain/json_codec.hpp"

namespace sdai {

using nlohmann::json;

std::string_view ToString(GpuVendor vendor) {
  switch (vendor) {
    case GpuVendor::kAmd: return "AMD";
    case GpuVendor::kNvidia: return "NVIDIA";
    case GpuVendor::kOther: return "OTHER";
  }
  return "OTHER";
}

std::string_view ToString(AccelToolkit toolkit) {
  switch (toolkit) {
    case AccelToolkit::kRocm: return "ROCM";
    case AccelToolkit::kCuda: return "CUDA";
    case AccelToolkit::kOther: return "OTHER";
  }
  return "OTHER";
}

namespace {

std::string Upper(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

bool IsNameChar(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
}

json ParseDocument(std::string_view source, std::string_view what) {
  try {
    return json::parse(source);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::kParse, std::string(what) + ": " + e.what());
  }
}

}  // namespace

GpuVendor ParseGpuVendor(std::string_view text) {
  auto up = Upper(text);
  if (up == "AMD") return GpuVendor::kAmd;
  if (up == "NVIDIA") return GpuVendor::kNvidia;
  return GpuVendor::kOther;
}

AccelToolkit ParseAccelToolkit(std::string_view text) {
  auto up = Upper(text);
  if (up == "ROCM") return AccelToolkit::kRocm;
  if (up == "CUDA") return AccelToolkit::kCuda;
  return AccelToolkit::kOther;
}

bool IsValidName(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), IsNameChar);
}

bool IsValidModelId(std::string_view model_id) {
  auto colon = model_id.find(':');
  if (colon == std::string_view::npos) return IsValidName(model_id);
  return IsValidName(model_id.substr(0, colon)) &&
         IsValidName(model_id.substr(colon + 1));
}

ModelCatalog::ModelCatalog(std::vector<ModelSpec> models, std::string version)
    : models_(std::move(models)), version_(std::move(version)) {
  std::set<std::string> seen;
  for (const auto &m : models_) {
    if (!IsValidModelId(m.model_id)) {
      throw Error(ErrorCode::kValidation,
                  "model id '" + m.model_id + "' does not match name[:tag]");
    }
    if (m.vram_per_instance <= 0) {
      throw Error(ErrorCode::kValidation,
                  "model '" + m.model_id + "' has non-positive vram_mib");
    }
    if (!seen.insert(m.model_id).second) {
      throw Error(ErrorCode::kValidation, "duplicate model id '" + m.model_id + "'");
    }
  }
  std::sort(models_.begin(), models_.end(),
            [](const ModelSpec &a, const ModelSpec &b) { return a.model_id < b.model_id; });
}

const ModelSpec *ModelCatalog::Find(std::string_view model_id) const {
  auto it = std::lower_bound(
      models_.begin(), models_.end(), model_id,
      [](const ModelSpec &m, std::string_view id) { return m.model_id < id; });
  if (it == models_.end() || it->model_id != model_id) return nullptr;
  return &*it;
}

const ModelSpec &ModelCatalog::Get(std::string_view model_id) const {
  const ModelSpec *m = Find(model_id);
  if (m == nullptr) {
    throw Error(ErrorCode::kUnknownModel, "unknown model '" + std::string(model_id) + "'");
  }
  return *m;
}

Mib EffectiveVram(const GpuDevice &gpu) { return gpu.vram_total - gpu.vram_reserved; }

const GpuDevice *AgentEntry::FindGpu(std::string_view gpu_id) const {
  for (const auto &g : gpus) {
    if (g.gpu_id == gpu_id) return &g;
  }
  return nullptr;
}

const AgentEntry *FleetManifest::Find(std::string_view agent_name) const {
  for (const auto &a : agents) {
    if (a.agent_name == agent_name) return &a;
  }
  return nullptr;
}

const AgentEntry *FleetManifest::MainAgent() const {
  for (const auto &a : agents) {
    if (a.is_main_agent) return &a;
  }
  return nullptr;
}

std::size_t FleetManifest::GpuCount() const {
  std::size_t n = 0;
  for (const auto &a : agents) n += a.gpus.size();
  return n;
}

void ValidateFleetManifest(const FleetManifest &manifest) {
  std::set<std::string> names;
  int mains = 0;
  for (const auto &agent : manifest.agents) {
    if (!IsValidName(agent.agent_name)) {
      throw Error(ErrorCode::kValidation, "invalid agent name '" + agent.agent_name + "'");
    }
    if (!names.insert(agent.agent_name).second) {
      throw Error(ErrorCode::kValidation, "duplicate agent name '" + agent.agent_name + "'");
    }
    ParseHostPort(agent.address);
    if (agent.is_main_agent) ++mains;
    std::set<std::string> gpu_ids;
    for (const auto &gpu : agent.gpus) {
      const std::string where = agent.agent_name + "/" + gpu.gpu_id;
      if (!IsValidName(gpu.gpu_id)) {
        throw Error(ErrorCode::kValidation, "invalid gpu id '" + where + "'");
      }
      if (!gpu_ids.insert(gpu.gpu_id).second) {
        throw Error(ErrorCode::kValidation, "duplicate gpu id '" + where + "'");
      }
      if (gpu.vram_total <= 0) {
        throw Error(ErrorCode::kValidation, "gpu '" + where + "' has non-positive vram_mib");
      }
      if (gpu.vram_reserved < 0 || gpu.vram_reserved >= gpu.vram_total) {
        throw Error(ErrorCode::kValidation,
                    "gpu '" + where + "' reserved_mib must be in [0, vram_mib)");
      }
    }
  }
  if (!manifest.agents.empty() && mains != 1) {
    throw Error(ErrorCode::kValidation,
                "manifest must have exactly one main agent, found " + std::to_string(mains));
  }
}

std::string MakeInstanceId(std::string_view agent_name, std::string_view gpu_id,
                           std::string_view model_id, int replica_index) {
  std::string id;
  id.reserve(agent_name.size() + gpu_id.size() + model_id.size() + 8);
  id.append(agent_name).append("-").append(gpu_id).append("-").append(model_id);
  id.append("-").append(std::to_string(replica_index));
  return id;
}

HostPort ParseHostPort(std::string_view address) {
  auto colon = address.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == address.size()) {
    throw Error(ErrorCode::kParse, "address '" + std::string(address) + "' is not host:port");
  }
  HostPort hp;
  hp.host = std::string(address.substr(0, colon));
  auto digits = address.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), hp.port);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || hp.port <= 0 ||
      hp.port > 65535) {
    throw Error(ErrorCode::kParse, "address '" + std::string(address) + "' has a bad port");
  }
  return hp;
}

ModelCatalog LoadModelCatalog(std::string_view source) {
  json doc = ParseDocument(source, "catalog");
  if (!doc.is_object() || !doc.contains("models") || !doc["models"].is_array()) {
    throw Error(ErrorCode::kParse, "catalog: expected an object with a 'models' list");
  }
  std::vector<ModelSpec> models;
  std::size_t index = 0;
  for (const auto &entry : doc["models"]) {
    try {
      models.push_back(entry.get<ModelSpec>());
    } catch (const json::exception &e) {
      std::string name = entry.is_object() && entry.contains("id") && entry["id"].is_string()
                             ? entry["id"].get<std::string>()
                             : "#" + std::to_string(index);
      throw Error(ErrorCode::kParse, "catalog entry '" + name + "': " + e.what());
    }
    ++index;
  }
  std::string version = doc.value("version", std::string());
  return ModelCatalog(std::move(models), std::move(version));
}

std::string SerializeModelCatalog(const ModelCatalog &catalog) {
  json doc{{"version", catalog.version()}, {"models", catalog.models()}};
  return doc.dump(2) + "\n";
}

FleetManifest LoadFleetManifest(std::string_view source) {
  json doc = ParseDocument(source, "manifest");
  if (!doc.is_object() || !doc.contains("agents") || !doc["agents"].is_array()) {
    throw Error(ErrorCode::kParse, "manifest: expected an object with an 'agents' list");
  }
  FleetManifest manifest;
  try {
    manifest = ManifestFromJson(doc);
  } catch (const json::exception &e) {
    throw Error(ErrorCode::kParse, std::string("manifest: ") + e.what());
  }
  ValidateFleetManifest(manifest);
  return manifest;
}

std::string SerializeFleetManifest(const FleetManifest &manifest) {
  return ManifestToJson(manifest).dump(2) + "\n";
}

std::string ReadTextFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParse, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sdai
