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

#include <json.hpp>

#include "sdai/domain/domain.hpp"

// nlohmann/json adapters for the domain types. Field names follow the
// catalog/manifest file formats so wire payloads and files read the same.
namespace sdai {

void to_json(nlohmann::json &j, const ModelSpec &m);
void from_json(const nlohmann::json &j, ModelSpec &m);

void to_json(nlohmann::json &j, const GpuDevice &g);
void from_json(const nlohmann::json &j, GpuDevice &g);

void to_json(nlohmann::json &j, const AgentEntry &a);
void from_json(const nlohmann::json &j, AgentEntry &a);

void to_json(nlohmann::json &j, const InstanceAssignment &a);
void from_json(const nlohmann::json &j, InstanceAssignment &a);

void to_json(nlohmann::json &j, const PlacementPlan &p);
void from_json(const nlohmann::json &j, PlacementPlan &p);

nlohmann::json ManifestToJson(const FleetManifest &manifest);
/// Parses without the main-agent rule; LoadFleetManifest adds validation.
FleetManifest ManifestFromJson(const nlohmann::json &j);

}  // namespace sdai
