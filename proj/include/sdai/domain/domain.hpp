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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdai/common/error.hpp"

namespace sdai {

/// VRAM quantities are integer MiB everywhere.
using Mib = std::int64_t;
/// Milliseconds since the Unix epoch, UTC.
using TimestampMs = std::int64_t;

inline constexpr Mib kDefaultVramReservedMib = 512;

enum class GpuVendor { kAmd, kNvidia, kOther };
enum class AccelToolkit { kRocm, kCuda, kOther };

std::string_view ToString(GpuVendor vendor);
std::string_view ToString(AccelToolkit toolkit);
GpuVendor ParseGpuVendor(std::string_view text);
AccelToolkit ParseAccelToolkit(std::string_view text);

struct ModelSpec {
  std::string model_id;         // "name[:tag]", e.g. "llama3.2:3b"
  std::string family;           // "llama3.2"
  std::string parameter_scale;  // "3b"
  bool vision_capable = false;
  bool embedding = false;
  Mib vram_per_instance = 0;

  bool operator==(const ModelSpec &) const = default;
};

/// Immutable, validated model list. Iteration order is sorted by model_id.
class ModelCatalog {
 public:
  ModelCatalog() = default;
  /// Validates every entry and sorts. Throws Error(kValidation) naming the
  /// offending model on duplicate ids, bad ids or non-positive VRAM.
  ModelCatalog(std::vector<ModelSpec> models, std::string version);

  const std::vector<ModelSpec> &models() const { return models_; }
  const std::string &version() const { return version_; }
  std::size_t size() const { return models_.size(); }
  bool empty() const { return models_.empty(); }

  const ModelSpec *Find(std::string_view model_id) const;
  /// Like Find but throws Error(kUnknownModel).
  const ModelSpec &Get(std::string_view model_id) const;

  bool operator==(const ModelCatalog &) const = default;

 private:
  std::vector<ModelSpec> models_;
  std::string version_;
};

struct GpuDevice {
  std::string gpu_id;
  GpuVendor vendor = GpuVendor::kOther;
  std::string model_name;
  Mib vram_total = 0;
  Mib vram_reserved = kDefaultVramReservedMib;
  AccelToolkit accel_toolkit = AccelToolkit::kOther;
  bool enabled = true;

  bool operator==(const GpuDevice &) const = default;
};

/// Usable VRAM after the runtime reserve: vram_total - vram_reserved.
Mib EffectiveVram(const GpuDevice &gpu);

struct AgentEntry {
  std::string agent_name;
  std::string address;  // host:port of the agent's control endpoint
  std::vector<GpuDevice> gpus;
  bool is_main_agent = false;

  const GpuDevice *FindGpu(std::string_view gpu_id) const;
  bool operator==(const AgentEntry &) const = default;
};

/// Fleet description. Also used as a "view" of the registered fleet, in which
/// case the main-agent rule is not enforced (see ValidateFleetManifest).
struct FleetManifest {
  std::vector<AgentEntry> agents;

  const AgentEntry *Find(std::string_view agent_name) const;
  const AgentEntry *MainAgent() const;
  std::size_t GpuCount() const;
  bool operator==(const FleetManifest &) const = default;
};

/// Throws Error(kValidation): duplicate agent names, duplicate gpu ids within
/// an agent, bad GPU VRAM figures, or (for a non-empty fleet) anything other
/// than exactly one main agent.
void ValidateFleetManifest(const FleetManifest &manifest);

struct InstanceAssignment {
  std::string instance_id;
  std::string model_id;
  std::string agent_name;
  std::string gpu_id;
  int replica_index = 0;

  bool operator==(const InstanceAssignment &) const = default;
};

/// Canonical instance id: "<agent>-<gpu>-<model>-<replica>". All parts are
/// restricted identifiers so the result is a valid proxy server name.
std::string MakeInstanceId(std::string_view agent_name, std::string_view gpu_id,
                           std::string_view model_id, int replica_index);

struct PlacementPlan {
  std::vector<InstanceAssignment> assignments;
  std::string catalog_version;
  TimestampMs created_at = 0;

  bool operator==(const PlacementPlan &) const = default;
};

/// Identifier rules: [A-Za-z0-9._-]+ for agent and GPU names; model ids are
/// "name[:tag]" with the same character set on both sides.
bool IsValidName(std::string_view name);
bool IsValidModelId(std::string_view model_id);

struct HostPort {
  std::string host;
  int port = 0;
};
/// Splits "host:port". Throws Error(kParse).
HostPort ParseHostPort(std::string_view address);

// Text formats (JSON documents, see README).
ModelCatalog LoadModelCatalog(std::string_view source);
std::string SerializeModelCatalog(const ModelCatalog &catalog);
FleetManifest LoadFleetManifest(std::string_view source);
std::string SerializeFleetManifest(const FleetManifest &manifest);

std::string ReadTextFile(const std::string &path);

}  // namespace sdai
