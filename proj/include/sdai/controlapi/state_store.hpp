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

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sdai/confgen/confgen.hpp"

namespace sdai {

struct DeployedState {
  PlacementPlan plan;
  PortAssignment ports;
  PortPolicy port_policy;  // model ports frozen as overrides
  FleetManifest fleet;     // deploy scope, GPUs with their enabled flags
  ConfigBundle bundle;
  std::string bundle_checksum;
  TimestampMs deployed_at = 0;
  std::int64_t plan_version = 0;

  bool operator==(const DeployedState &) const = default;
};

nlohmann::json DeployedStateToJson(const DeployedState &state);
DeployedState DeployedStateFromJson(const nlohmann::json &j);
nlohmann::json PortsToJson(const PortAssignment &ports);
PortAssignment PortsFromJson(const nlohmann::json &j);
nlohmann::json PortPolicyToJson(const PortPolicy &policy);
PortPolicy PortPolicyFromJson(const nlohmann::json &j);

/// Single-file store: {"format", "catalog_version", "state", "checksum"},
/// where checksum is the SHA-256 of the state's compact dump. Writes go to a
/// temp file that is fsynced and renamed over the target.
class StateStore {
 public:
  /// Called with "write", "fsync" and "rename" before each step; a throwing
  /// hook simulates a crash at that point.
  using FaultHook = std::function<void(std::string_view step)>;

  explicit StateStore(std::string path) : path_(std::move(path)) {}

  const std::string &path() const { return path_; }
  void set_fault_hook(FaultHook hook) { fault_hook_ = std::move(hook); }

  void Save(const DeployedState &state, const std::string &catalog_version) const;
  /// std::nullopt when no file exists. Throws Error(kCorruptStore).
  std::optional<DeployedState> Load(std::string *catalog_version = nullptr) const;
  void Remove() const;

 private:
  std::string path_;
  FaultHook fault_hook_;
};

}  // namespace sdai
