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

#include "sdai/common/checksum.hpp"
#include "sdai/confgen/confgen.hpp"

namespace sdai {

ConfigBundle RenderBundle(const PlacementPlan &plan, const PortAssignment &ports,
                          const FleetManifest &manifest, const ModelCatalog &catalog) {
  ConfigBundle bundle;
  for (const auto &agent : manifest.agents) {
    bundle.agents[agent.agent_name] = AgentBundle{
        GenerateAgentProxyConfig(agent.agent_name, plan, ports, manifest),
        GenerateStartupScript(agent.agent_name, plan, ports, catalog)};
  }
  bundle.front_proxy_config = GenerateFrontProxyConfig(plan, ports, manifest);

  // Length-prefixed so no two different bundles share a canonical form.
  std::string canonical;
  auto append = [&canonical](std::string_view part) {
    canonical += std::to_string(part.size());
    canonical += ':';
    canonical += part;
  };
  for (const auto &[name, texts] : bundle.agents) {
    append(name);
    append(texts.proxy_config);
    append(texts.startup_script);
  }
  append("front");
  append(bundle.front_proxy_config);
  bundle.checksum = Sha256Hex(canonical);
  return bundle;
}

}  // namespace sdai
