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
#include <charconv>
#include <sstream>

#include "sdai/confgen/confgen.hpp"

namespace sdai {

namespace {

constexpr std::string_view kInstanceMarker = "# instance ";

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void ThrowParse(std::size_t line_no, const std::string &what) {
  throw Error(ErrorCode::kParse, "startup script line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::string GenerateStartupScript(const std::string &agent_name, const PlacementPlan &plan,
                                  const PortAssignment &ports, const ModelCatalog &catalog) {
  struct Local {
    int port;
    const InstanceAssignment *assignment;
    Mib vram;
  };
  std::vector<Local> locals;
  for (const auto &a : plan.assignments) {
    if (a.agent_name != agent_name) continue;
    const ModelSpec *model = catalog.Find(a.model_id);
    if (model == nullptr) {
      throw InfeasiblePlanError({PlanViolation{ViolationKind::kUnknownModel,
                                               "assignments/" + a.instance_id,
                                               "model '" + a.model_id + "' is not in the catalog"}});
    }
    auto ip = ports.instance_ports.find(a.instance_id);
    if (ip == ports.instance_ports.end()) {
      throw InfeasiblePlanError({PlanViolation{ViolationKind::kUnknownGpu,
                                               "assignments/" + a.instance_id,
                                               "instance has no assigned port"}});
    }
    locals.push_back({ip->second.port, &a, model->vram_per_instance});
  }
  std::sort(locals.begin(), locals.end(),
            [](const Local &x, const Local &y) { return x.port < y.port; });

  std::ostringstream out;
  out << "#!/bin/sh\n"
      << "# sdai startup script for agent " << agent_name << "\n"
      << "set -u\n"
      << "\n"
      << "port_bound() {\n"
      << "  nc -z 127.0.0.1 \"$1\" >/dev/null 2>&1\n"
      << "}\n";
  for (const auto &l : locals) {
    const auto &a = *l.assignment;
    out << "\n"
        << kInstanceMarker << a.instance_id << " vram_mib=" << l.vram << "\n"
        << "if port_bound " << l.port << "; then echo \"skip " << a.instance_id << ": port "
        << l.port << " already bound\"; else\n"
        << "  launch --model " << a.model_id << " --gpu " << a.gpu_id
        << " --bind 127.0.0.1:" << l.port << "\n"
        << "fi\n";
  }
  out << "\n"
      << "exit 0\n";
  return out.str();
}

std::vector<LaunchCommand> ParseStartupScript(std::string_view text) {
  std::vector<LaunchCommand> out;
  std::string pending_id;
  Mib pending_vram = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = Trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;

    if (line.rfind(kInstanceMarker, 0) == 0) {
      std::istringstream fields(std::string(line.substr(kInstanceMarker.size())));
      std::string attr;
      fields >> pending_id;
      pending_vram = 0;
      while (fields >> attr) {
        if (attr.rfind("vram_mib=", 0) == 0) pending_vram = std::stoll(attr.substr(9));
      }
      continue;
    }
    if (line.rfind("launch ", 0) != 0) continue;

    std::istringstream tokens{std::string(line)};
    std::string word;
    tokens >> word;
    LaunchCommand cmd;
    std::string bind;
    while (tokens >> word) {
      std::string value;
      if (!(tokens >> value)) ThrowParse(line_no, "flag " + word + " has no value");
      if (word == "--model") {
        cmd.model_id = value;
      } else if (word == "--gpu") {
        cmd.gpu_id = value;
      } else if (word == "--bind") {
        bind = value;
      } else {
        ThrowParse(line_no, "unknown flag " + word);
      }
    }
    if (cmd.model_id.empty() || cmd.gpu_id.empty() || bind.empty()) {
      ThrowParse(line_no, "launch needs --model, --gpu and --bind");
    }
    HostPort hp;
    try {
      hp = ParseHostPort(bind);
    } catch (const Error &e) {
      ThrowParse(line_no, e.what());
    }
    if (pending_id.empty()) ThrowParse(line_no, "launch without a preceding '# instance' line");
    cmd.instance_id = std::move(pending_id);
    cmd.vram_mib = pending_vram;
    cmd.bind_host = hp.host;
    cmd.port = hp.port;
    pending_id.clear();
    out.push_back(std::move(cmd));
  }
  return out;
}

}  // namespace sdai
