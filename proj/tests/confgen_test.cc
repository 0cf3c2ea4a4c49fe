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

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <regex>

#include "oracles.hpp"
#include "sdai/confgen/confgen.hpp"

namespace sdai {
namespace {

ModelSpec Model(const std::string &id, Mib vram) {
  ModelSpec m;
  m.model_id = id;
  m.vram_per_instance = vram;
  return m;
}

GpuDevice Gpu(const std::string &id, Mib total) {
  GpuDevice g;
  g.gpu_id = id;
  g.vram_total = total;
  return g;
}

InstanceAssignment Assign(const std::string &model, const std::string &agent,
                          const std::string &gpu, int replica) {
  return {MakeInstanceId(agent, gpu, model, replica), model, agent, gpu, replica};
}

ErrorCode CodeOf(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an sdai::Error";
  return ErrorCode::kTransport;
}

int CountOccurrences(const std::string &text, const std::string &needle) {
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

// Golden comparison; SDAI_UPDATE_GOLDEN=1 rewrites the file instead.
void ExpectGolden(const std::string &name, const std::string &actual) {
  const std::string path = std::string(SDAI_GOLDEN_DIR) + "/" + name;
  if (std::getenv("SDAI_UPDATE_GOLDEN") != nullptr) {
    std::ofstream(path, std::ios::binary) << actual;
    return;
  }
  EXPECT_EQ(actual, ReadTextFile(path)) << "golden mismatch: " << path;
}

class ConfgenFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    fleet_.agents.push_back({"alpha", "10.0.0.1:7001", {Gpu("gpu0", 8192)}, true});
    fleet_.agents.push_back({"bravo", "10.0.0.2:7001", {Gpu("gpu0", 8192), Gpu("gpu1", 8192)}, false});
    fleet_.agents.push_back({"charlie", "10.0.0.3:7001", {Gpu("gpu0", 16384)}, false});
    plan_.catalog_version = "test";
    plan_.assignments = {
        Assign("llama3.2:3b", "alpha", "gpu0", 0), Assign("llama3.2:3b", "alpha", "gpu0", 1),
        Assign("llama3.2:3b", "bravo", "gpu1", 0), Assign("qwen3:4b", "bravo", "gpu0", 0),
        Assign("qwen3:4b", "charlie", "gpu0", 0),
    };
  }

  FleetManifest fleet_;
  ModelCatalog catalog_{{Model("llama3.2:3b", 2400), Model("qwen3:4b", 2900)}, "test"};
  PlacementPlan plan_;
};

TEST_F(ConfgenFixture, AssignPortsByRank) {
  auto ports = AssignPorts(plan_, PortPolicy{});
  EXPECT_EQ(ports.model_ports.at("llama3.2:3b"), 20000);
  EXPECT_EQ(ports.model_ports.at("qwen3:4b"), 20001);
  EXPECT_EQ(ports.stats_port, 8404);
  // bravo: sorted (model, gpu, replica) = llama/gpu1/0, qwen/gpu0/0
  EXPECT_EQ(ports.instance_ports.at("bravo-gpu1-llama3.2:3b-0").port, 11500);
  EXPECT_EQ(ports.instance_ports.at("bravo-gpu0-qwen3:4b-0").port, 11501);
  EXPECT_EQ(ports.instance_ports.at("alpha-gpu0-llama3.2:3b-1").port, 11501);
}

TEST_F(ConfgenFixture, AssignPortsMatchesSortingOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto fleet = oracle::RandomFleet(rng);
    auto models = oracle::RandomModels(rng);
    auto plan = oracle::RandomFeasiblePlan(rng, fleet, models);
    auto ports = AssignPorts(plan, PortPolicy{});

    std::vector<std::string> ids;
    for (const auto &a : plan.assignments) ids.push_back(a.model_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      ASSERT_EQ(ports.model_ports.at(ids[i]), 20000 + static_cast<int>(i));
    }
    // Instance ports distinct per agent and disjoint from model ports.
    std::map<std::string, std::set<int>> per_agent;
    for (const auto &[id, ip] : ports.instance_ports) {
      ASSERT_TRUE(per_agent[ip.agent_name].insert(ip.port).second);
      for (const auto &[m, p] : ports.model_ports) ASSERT_NE(p, ip.port);
    }
  }
}

TEST_F(ConfgenFixture, AssignPortsEmptyPlan) {
  PortPolicy policy;
  policy.stats_port = 9000;
  auto ports = AssignPorts({}, policy);
  EXPECT_TRUE(ports.model_ports.empty());
  EXPECT_EQ(ports.stats_port, 9000);
}

TEST_F(ConfgenFixture, OverrideCollisionNamesBothModels) {
  PortPolicy policy;
  policy.overrides["qwen3:4b"] = 20000;  // llama3.2:3b ranks first -> 20000
  try {
    AssignPorts(plan_, policy);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kPortCollision);
    EXPECT_NE(std::string(e.what()).find("llama3.2:3b"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("qwen3:4b"), std::string::npos);
  }
  policy.overrides = {{"qwen3:4b", 8404}};
  EXPECT_EQ(CodeOf([&] { AssignPorts(plan_, policy); }), ErrorCode::kPortCollision);
  policy.overrides = {{"qwen3:4b", 11500}};
  EXPECT_EQ(CodeOf([&] { AssignPorts(plan_, policy); }), ErrorCode::kPortCollision);
  policy.overrides = {{"qwen3:4b", 80}};
  EXPECT_EQ(CodeOf([&] { AssignPorts(plan_, policy); }), ErrorCode::kValidation);
  policy.overrides = {{"qwen3:4b", 25000}};
  EXPECT_EQ(AssignPorts(plan_, policy).model_ports.at("qwen3:4b"), 25000);
}

TEST_F(ConfgenFixture, GoldenFiles) {
  auto ports = AssignPorts(plan_, PortPolicy{});
  ExpectGolden("alpha.haproxy.cfg", GenerateAgentProxyConfig("alpha", plan_, ports, fleet_));
  ExpectGolden("front.haproxy.cfg", GenerateFrontProxyConfig(plan_, ports, fleet_));
  ExpectGolden("bravo.start.sh", GenerateStartupScript("bravo", plan_, ports, catalog_));
}

TEST_F(ConfgenFixture, AgentBackendListsLocalAndRemote) {
  auto ports = AssignPorts(plan_, PortPolicy{});
  auto cfg = GenerateAgentProxyConfig("alpha", plan_, ports, fleet_);
  auto topo = InterpretProxyConfig(cfg);
  ASSERT_EQ(topo.routes.size(), 2u);
  const auto &llama = topo.routes[0];
  EXPECT_EQ(llama.model_id, "llama3.2:3b");
  EXPECT_EQ(llama.bind_port, 20000);
  EXPECT_EQ(llama.balance, "roundrobin");
  ASSERT_EQ(llama.servers.size(), 3u);
  EXPECT_EQ(std::count_if(llama.servers.begin(), llama.servers.end(),
                          [](const ProxyServer &s) { return s.host == "127.0.0.1"; }),
            2);
  EXPECT_EQ(llama.servers[2].host, "10.0.0.2");
  for (const auto &s : llama.servers) EXPECT_TRUE(s.check);
  EXPECT_EQ(topo.stats_port, 8404);
}

TEST_F(ConfgenFixture, AgentWithoutInstancesStillRoutes) {
  fleet_.agents.push_back({"delta", "10.0.0.4:7001", {Gpu("gpu0", 8192)}, false});
  auto ports = AssignPorts(plan_, PortPolicy{});
  auto topo = InterpretProxyConfig(GenerateAgentProxyConfig("delta", plan_, ports, fleet_));
  ASSERT_EQ(topo.routes.size(), 2u);
  for (const auto &route : topo.routes)
    for (const auto &s : route.servers) EXPECT_NE(s.host, "127.0.0.1");
}

TEST_F(ConfgenFixture, EmptyPlanHasOnlyStats) {
  auto ports = AssignPorts({}, PortPolicy{});
  auto cfg = GenerateAgentProxyConfig("alpha", {}, ports, fleet_);
  auto parsed = ParseProxyConfig(cfg);
  for (const auto &s : parsed.sections) {
    EXPECT_NE(s.keyword, "frontend");
    EXPECT_NE(s.keyword, "backend");
  }
  EXPECT_EQ(InterpretProxyConfig(cfg).stats_port, 8404);
  EXPECT_EQ(CodeOf([&] { GenerateAgentProxyConfig("nobody", {}, ports, fleet_); }),
            ErrorCode::kUnknownAgent);
}

TEST_F(ConfgenFixture, FrontConfigServersAreHostingAgents) {
  auto ports = AssignPorts(plan_, PortPolicy{});
  auto topo = InterpretProxyConfig(GenerateFrontProxyConfig(plan_, ports, fleet_));
  ASSERT_EQ(topo.routes.size(), 2u);
  ASSERT_EQ(topo.routes[0].servers.size(), 2u);  // llama on alpha, bravo
  EXPECT_EQ(topo.routes[0].servers[0].host, "10.0.0.1");
  EXPECT_EQ(topo.routes[0].servers[0].port, 20000);
  ASSERT_EQ(topo.routes[1].servers.size(), 2u);  // qwen on bravo, charlie

  PlacementPlan single;
  single.assignments = {Assign("qwen3:4b", "charlie", "gpu0", 0)};
  auto p1 = AssignPorts(single, PortPolicy{});
  auto t1 = InterpretProxyConfig(GenerateFrontProxyConfig(single, p1, fleet_));
  ASSERT_EQ(t1.routes.size(), 1u);
  EXPECT_EQ(t1.routes[0].servers.size(), 1u);

  PlacementPlan disjoint;
  disjoint.assignments = {Assign("qwen3:4b", "charlie", "gpu0", 0),
                          Assign("llama3.2:3b", "alpha", "gpu0", 0)};
  auto p2 = AssignPorts(disjoint, PortPolicy{});
  auto t2 = InterpretProxyConfig(GenerateFrontProxyConfig(disjoint, p2, fleet_));
  ASSERT_EQ(t2.routes.size(), 2u);
  EXPECT_EQ(t2.routes[0].servers[0].name, "alpha");
  EXPECT_EQ(t2.routes[1].servers[0].name, "charlie");
}

TEST_F(ConfgenFixture, StartupScriptLaunches) {
  auto ports = AssignPorts(plan_, PortPolicy{});
  auto alpha = ParseStartupScript(GenerateStartupScript("alpha", plan_, ports, catalog_));
  ASSERT_EQ(alpha.size(), 2u);
  EXPECT_EQ(alpha[0].model_id, alpha[1].model_id);
  EXPECT_EQ(alpha[0].gpu_id, alpha[1].gpu_id);
  EXPECT_NE(alpha[0].port, alpha[1].port);
  EXPECT_EQ(alpha[0].bind_host, "127.0.0.1");
  EXPECT_EQ(alpha[0].vram_mib, 2400);

  // Three local instances
  PlacementPlan three = plan_;
  three.assignments.push_back(Assign("qwen3:4b", "alpha", "gpu0", 0));
  auto p3 = AssignPorts(three, PortPolicy{});
  auto script = GenerateStartupScript("alpha", three, p3, catalog_);
  auto cmds = ParseStartupScript(script);
  ASSERT_EQ(cmds.size(), 3u);
  std::set<int> distinct;
  for (const auto &c : cmds) distinct.insert(c.port);
  EXPECT_EQ(distinct.size(), 3u);
  EXPECT_TRUE(std::is_sorted(cmds.begin(), cmds.end(),
                             [](const LaunchCommand &a, const LaunchCommand &b) { return a.port < b.port; }));
  EXPECT_EQ(CountOccurrences(script, "if port_bound "), 3);
}

TEST_F(ConfgenFixture, StartupScriptWithoutInstances) {
  auto ports = AssignPorts(plan_, PortPolicy{});
  auto script = GenerateStartupScript("nobody-here", plan_, ports, catalog_);
  EXPECT_EQ(script.rfind("#!/bin/sh\n", 0), 0u);
  EXPECT_TRUE(ParseStartupScript(script).empty());
  EXPECT_NE(script.find("exit 0\n"), std::string::npos);
}

TEST_F(ConfgenFixture, BundleChecksum) {
  auto ports = AssignPorts(plan_, PortPolicy{});
  auto b1 = RenderBundle(plan_, ports, fleet_, catalog_);
  auto b2 = RenderBundle(plan_, ports, fleet_, catalog_);
  EXPECT_EQ(b1, b2);
  EXPECT_EQ(b1.checksum.size(), 64u);
  EXPECT_EQ(b1.agents.size(), 3u);

  PlacementPlan more = plan_;
  more.assignments.push_back(Assign("qwen3:4b", "charlie", "gpu0", 1));
  auto p2 = AssignPorts(more, PortPolicy{});
  EXPECT_NE(RenderBundle(more, p2, fleet_, catalog_).checksum, b1.checksum);
}

TEST_F(ConfgenFixture, BundleForReferenceFleet) {
  auto fleet = LoadFleetManifest(ReadTextFile(std::string(SDAI_DATA_DIR) + "/reference_fleet.json"));
  PlacementPlan plan;
  plan.assignments = {Assign("qwen3:4b", "node6", "gpu0", 0)};
  auto bundle = RenderBundle(plan, AssignPorts(plan, PortPolicy{}), fleet, catalog_);
  EXPECT_EQ(bundle.agents.size(), 6u);
  EXPECT_FALSE(bundle.front_proxy_config.empty());
}

TEST(ProxyGrammarTest, RejectsMalformedText) {
  EXPECT_EQ(CodeOf([] { ParseProxyConfig("  bind *:80\n"); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([] { ParseProxyConfig("bogus section\n"); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([] { ParseProxyConfig("frontend\n"); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([] { ParseProxyConfig("frontend x\n  server a 1.2.3.4:5\n"); }), ErrorCode::kParse);
  EXPECT_EQ(CodeOf([] { InterpretProxyConfig("frontend fe_x\n  bind *:80\n  default_backend be_y\n"); }),
            ErrorCode::kParse);
  EXPECT_EQ(CodeOf([] { ParseStartupScript("launch --model m --gpu g --bind 127.0.0.1:5\n"); }),
            ErrorCode::kParse);
  EXPECT_EQ(CodeOf([] { ParseStartupScript("# instance i\nlaunch --model m --bind 127.0.0.1:5\n"); }),
            ErrorCode::kParse);
}

// Structural round trip plus the per-instance coverage rule, on random plans.
TEST(ConfgenPropertyTest, GenerateParseCoversEveryInstance) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    auto fleet = oracle::RandomFleet(rng);
    auto models = oracle::RandomModels(rng);
    ModelCatalog catalog(models, "t");
    auto plan = oracle::RandomFeasiblePlan(rng, fleet, models);
    auto ports = AssignPorts(plan, PortPolicy{});
    auto bundle = RenderBundle(plan, ports, fleet, catalog);
    const auto expected = oracle::InstancesByModel(plan);

    std::multiset<std::string> launched;
    for (const auto &[agent, texts] : bundle.agents) {
      auto topo = InterpretProxyConfig(texts.proxy_config);
      std::map<std::string, std::multiset<std::string>> seen;
      std::set<int> binds{topo.stats_port};
      for (const auto &route : topo.routes) {
        ASSERT_TRUE(binds.insert(route.bind_port).second) << "duplicate bind on " << agent;
        for (const auto &s : route.servers) seen[route.model_id].insert(s.name);
      }
      ASSERT_EQ(seen, expected) << agent;
      for (const auto &cmd : ParseStartupScript(texts.startup_script)) launched.insert(cmd.instance_id);
    }
    std::multiset<std::string> all;
    for (const auto &a : plan.assignments) all.insert(a.instance_id);
    ASSERT_EQ(launched, all);
    ASSERT_EQ(RenderBundle(plan, ports, fleet, catalog).checksum, bundle.checksum);
  }
}

}  // namespace
}  // namespace sdai
