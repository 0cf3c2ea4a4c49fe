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
#include <tuple>

#include "sdai/confgen/confgen.hpp"

namespace sdai {

namespace {

constexpr int kMinPort = 1024;
constexpr int kMaxPort = 65535;

void CheckPortRange(int port, const std::string &what) {
  if (port < kMinPort || port > kMaxPort) {
    throw Error(ErrorCode::kValidation,
                what + " port " + std::to_string(port) + " outside [1024, 65535]");
  }
}

}  // namespace

PortAssignment AssignPorts(const PlacementPlan &plan, const PortPolicy &policy) {
  CheckPortRange(policy.model_port_base, "model base");
  CheckPortRange(policy.instance_port_base, "instance base");
  CheckPortRange(policy.stats_port, "stats");

  PortAssignment out;
  out.stats_port = policy.stats_port;

  std::set<std::string> models;
  for (const auto &a : plan.assignments) models.insert(a.model_id);

  std::map<int, std::string> owner;  // port -> model_id
  int rank = 0;
  for (const auto &model_id : models) {
    auto ov = policy.overrides.find(model_id);
    const int port = ov != policy.overrides.end() ? ov->second : policy.model_port_base + rank;
    ++rank;
    CheckPortRange(port, "model '" + model_id + "'");
    if (port == policy.stats_port) {
      throw Error(ErrorCode::kPortCollision, "port " + std::to_string(port) + " of model '" +
                                                 model_id + "' collides with the stats port");
    }
    auto [it, inserted] = owner.emplace(port, model_id);
    if (!inserted) {
      throw Error(ErrorCode::kPortCollision, "port " + std::to_string(port) +
                                                 " assigned to both '" + it->second +
                                                 "' and '" + model_id + "'");
    }
    out.model_ports[model_id] = port;
  }

  std::map<std::string, std::vector<const InstanceAssignment *>> by_agent;
  for (const auto &a : plan.assignments) by_agent[a.agent_name].push_back(&a);
  for (auto &[agent, list] : by_agent) {
    std::sort(list.begin(), list.end(), [](const InstanceAssignment *x, const InstanceAssignment *y) {
      return std::tie(x->model_id, x->gpu_id, x->replica_index) <
             std::tie(y->model_id, y->gpu_id, y->replica_index);
    });
    for (std::size_t i = 0; i < list.size(); ++i) {
      const int port = policy.instance_port_base + static_cast<int>(i);
      CheckPortRange(port, "instance '" + list[i]->instance_id + "'");
      if (auto it = owner.find(port); it != owner.end()) {
        throw Error(ErrorCode::kPortCollision,
                    "port " + std::to_string(port) + " of model '" + it->second +
                        "' collides with instance '" + list[i]->instance_id + "'");
      }
      if (port == policy.stats_port) {
        throw Error(ErrorCode::kPortCollision, "instance '" + list[i]->instance_id +
                                                   "' collides with the stats port");
      }
      out.instance_ports[list[i]->instance_id] = InstancePort{agent, port};
    }
  }
  return out;
}

}  // namespace sdai
