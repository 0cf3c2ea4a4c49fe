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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <unistd.h>

#include "controller_harness.hpp"
#include "live_harness.hpp"
#include "oracles.hpp"
#include "sdai/common/checksum.hpp"

namespace sdai {
namespace {

using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char *format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

FleetManifest ReferenceFleet() {
  return LoadFleetManifest(ReadTextFile(std::string(SDAI_DATA_DIR) + "/reference_fleet.json"));
}

ModelSpec Spec(const std::string &id, Mib vram) {
  ModelSpec m;
  m.model_id = id;
  m.vram_per_instance = vram;
  return m;
}

ModelCatalog SmallCatalog() {
  return ModelCatalog({Spec("deepseek-r1:7b", 4900), Spec("llama3.2:3b", 2000), Spec("gemma3:1b", 1000)},
                      "acceptance");
}

std::string ReadBytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1 ------------------------------------------------------------------------
Outcome FleetFidelity() {
  const auto start = Clock::now();
  FleetManifest fleet = ReferenceFleet();
  std::multiset<Mib> vram;
  for (const auto &a : fleet.agents) {
    for (const auto &g : a.gpus) vram.insert(g.vram_total);
  }
  const std::multiset<Mib> expected{8192, 8192, 8192, 6144, 6144, 6144, 16384};
  if (fleet.agents.size() != 6 || fleet.GpuCount() != 7 || vram != expected) {
    return {false, "manifest shape mismatch: agents=" + std::to_string(fleet.agents.size()) +
                       " gpus=" + std::to_string(fleet.GpuCount())};
  }
  const auto interval = 1000ms;
  testing::LiveCluster cluster(SmallCatalog(), ControllerOptions{}, "127.0.10.100");
  const auto fleet_start = Clock::now();
  cluster.Spawn(fleet, {}, interval);
  int connected = 0;
  const bool in_time = testing::WaitFor(
      [&] {
        connected = cluster.controller().Dashboard()["controller"]["connected"].get<int>();
        return connected == 6;
      },
      interval);
  const double to_connected = Seconds(fleet_start);
  const double total = Seconds(start);
  const bool pass = in_time && to_connected <= 1.0 && total < 5.0;
  return {pass, "agents=6 gpus=7 vram ok; connected=" + std::to_string(connected) + " after " +
                    Fmt("%.3f", to_connected) + " s (interval 1.000 s); runtime " + Fmt("%.2f", total) + " s"};
}

// 2 ------------------------------------------------------------------------
Outcome CapacityOracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(0x5eed0001);
  std::uniform_int_distribution<Mib> total_d(0, 40'000), reserve_d(0, 4'000), v_d(1, 12'000),
      pre_v_d(1, 9'000);
  std::uniform_int_distribution<int> pre_n_d(0, 5);
  const int cases = 20'000;
  int mismatches = 0;
  for (int i = 0; i < cases; ++i) {
    GpuDevice gpu;
    gpu.gpu_id = "gpu0";
    gpu.vram_total = total_d(rng);
    gpu.vram_reserved = std::min(reserve_d(rng), gpu.vram_total);
    ModelSpec model = Spec("m:1b", v_d(rng));
    std::vector<ModelSpec> pre;
    Mib used = 0;
    for (int k = pre_n_d(rng); k > 0; --k) {
      pre.push_back(Spec("p:1b", pre_v_d(rng)));
      used += pre.back().vram_per_instance;
    }
    const auto got = MaxInstances(gpu, model, pre);
    const auto want = oracle::LargestKByScan(gpu.vram_total, gpu.vram_reserved, model.vram_per_instance, used);
    if (got != want) ++mismatches;
  }
  const double t = Seconds(start);
  return {mismatches == 0 && t < 10.0,
          std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches, " + Fmt("%.2f", t) + " s"};
}

// 3 ------------------------------------------------------------------------
Outcome PlacementFeasibility() {
  std::mt19937_64 rng(0x5eed0003);
  const int runs = 1000;
  int violations = 0, generated = 0, instances = 0;
  for (int i = 0; i < runs; ++i) {
    FleetManifest fleet;
    std::vector<ModelSpec> models;
    if (i % 2 == 0) {
      fleet = ReferenceFleet();
      models = SmallCatalog().models();
    } else {
      fleet = oracle::RandomFleet(rng, 5, 3);
      models = oracle::RandomModels(rng, 5);
    }
    auto channel = std::make_shared<testing::FakeChannel>();
    Controller controller(ModelCatalog(models, "acceptance"), ControllerOptions{}, channel);
    testing::RegisterFleet(controller, fleet);
    auto overview = testing::RandomWizardRun(controller, fleet, rng, 60);
    if (!overview) continue;
    ++generated;
    instances += static_cast<int>(overview->plan.assignments.size());
    if (!oracle::FitsEverywhere(overview->plan, fleet, models)) ++violations;
  }
  return {violations == 0, std::to_string(runs) + " sequences, " + std::to_string(generated) +
                               " draft plans (" + std::to_string(instances) + " instances), " +
                               std::to_string(violations) + " violations"};
}

// 4 ------------------------------------------------------------------------
Outcome ConfigDeterminism() {
  std::mt19937_64 rng(0x5eed0004);
  int deviations = 0, plans = 0;
  std::string first_problem;
  auto note = [&](const std::string &what) {
    ++deviations;
    if (first_problem.empty()) first_problem = what;
  };
  while (plans < 100) {
    FleetManifest fleet = oracle::RandomFleet(rng, 4, 2);
    auto models = oracle::RandomModels(rng, 4);
    ModelCatalog catalog(models, "acceptance");
    PlacementPlan plan = oracle::RandomFeasiblePlan(rng, fleet, models);
    if (plan.assignments.empty()) continue;
    ++plans;
    PortAssignment ports = AssignPorts(plan, PortPolicy{});
    ConfigBundle a = RenderBundle(plan, ports, fleet, catalog);
    ConfigBundle b = RenderBundle(plan, ports, fleet, catalog);
    if (!(a == b)) note("render differs between runs");

    const auto want = oracle::InstancesByModel(plan);
    std::multiset<std::string> launched;
    for (const auto &[agent, slice] : a.agents) {
      for (const auto &cmd : ParseStartupScript(slice.startup_script)) launched.insert(cmd.instance_id);
      std::map<std::string, std::multiset<std::string>> backends;
      for (const auto &route : InterpretProxyConfig(slice.proxy_config).routes) {
        for (const auto &s : route.servers) backends[route.model_id].insert(s.name);
      }
      if (backends != want) note("backend set of " + agent + " differs from plan");
    }
    std::multiset<std::string> all;
    for (const auto &[m, ids] : want) all.insert(ids.begin(), ids.end());
    if (launched != all) note("startup scripts do not launch each instance once");

    // Apply the bundle to simulated agents and read their state back.
    std::vector<std::unique_ptr<SimAgent>> sims;
    std::map<std::string, std::multiset<std::string>> routed;
    std::multiset<std::string> running;
    try {
      for (const auto &agent : fleet.agents) {
        SimAgentConfig cfg;
        cfg.agent_name = agent.agent_name;
        cfg.address = agent.address;
        cfg.gpus = agent.gpus;
        cfg.is_main_agent = agent.is_main_agent;
        sims.push_back(std::make_unique<SimAgent>(cfg, "127.0.0.1:1"));
        DeployRequest req{1, a.agents.at(agent.agent_name).proxy_config,
                          a.agents.at(agent.agent_name).startup_script, std::nullopt};
        sims.back()->ApplyDeploy(req);
        for (const auto &id : sims.back()->running_instance_ids()) running.insert(id);
        std::map<std::string, std::multiset<std::string>> mine;
        for (const auto &route : sims.back()->routes()) {
          for (const auto &s : route.servers) mine[route.model_id].insert(s.name);
        }
        if (mine != want) note("simulated routes of " + agent.agent_name + " differ from plan");
      }
    } catch (const Error &e) {
      note(std::string("simulator rejected bundle: ") + e.what());
    }
    if (running != all) note("simulated instance set differs from plan");
  }
  return {deviations == 0, std::to_string(plans) + " plans, " + std::to_string(deviations) + " deviations" +
                               (first_problem.empty() ? "" : " (first: " + first_problem + ")")};
}

// 5 ------------------------------------------------------------------------
Outcome BalancingFairness() {
  const auto start = Clock::now();
  testing::LiveCluster cluster(SmallCatalog(), ControllerOptions{}, "127.0.71.100");
  cluster.Spawn(testing::SimManifest("127.0.71", 3));
  auto state = cluster.Deploy({{"n2", "gpu0", "gemma3:1b", 2}, {"n3", "gpu0", "gemma3:1b", 2}});
  const std::string target = "127.0.71.1:" + std::to_string(state.ports.model_ports.at("gemma3:1b"));
  FairnessReport r = DriveRequests(target, "gemma3:1b", 1000);
  const double t = Seconds(start);
  std::string counts;
  bool exact = r.per_instance_counts.size() == 4;
  for (const auto &[id, n] : r.per_instance_counts) {
    counts += (counts.empty() ? "" : ",") + std::to_string(n);
    exact = exact && n == 250;
  }
  return {exact && r.max_spread <= 1 && r.total_requests == 1000 && t < 10.0,
          "counts {" + counts + "} max_spread=" + std::to_string(r.max_spread) + ", " + Fmt("%.2f", t) + " s"};
}

// 6 ------------------------------------------------------------------------
Outcome Failover() {
  const auto start = Clock::now();
  ControllerOptions options;
  options.thresholds = {500, 1500};
  testing::LiveCluster cluster(SmallCatalog(), options, "127.0.72.100");
  FleetManifest fleet = testing::SimManifest("127.0.72", 3);
  cluster.Spawn(fleet, {}, 100ms);
  auto before = cluster.Deploy({{"n2", "gpu0", "llama3.2:3b", 2}, {"n3", "gpu0", "llama3.2:3b", 1}});

  const auto crash_at = Clock::now();
  cluster.fleet().InjectFailure("n2", FailureMode::kCrashAt, "0");
  const bool unavailable =
      testing::WaitFor([&] { return cluster.LivenessOf("n2") == Liveness::kUnavailable; }, 3s, 5ms);
  const double detect = Seconds(crash_at);
  const bool redeployed = testing::WaitFor(
      [&] {
        auto d = cluster.controller().deployed();
        return d && d->plan_version > before.plan_version;
      },
      5s);
  auto after = cluster.controller().deployed();
  auto failover = cluster.controller().last_failover();
  if (!unavailable || !redeployed || !after || !failover) {
    return {false, "unavailable=" + std::to_string(unavailable) + " redeployed=" + std::to_string(redeployed)};
  }
  bool excludes = true;
  for (const auto &a : after->plan.assignments) excludes = excludes && a.agent_name != "n2";
  for (const auto &a : after->fleet.agents) excludes = excludes && a.agent_name != "n2";
  const auto want = oracle::RecountPlan(before.plan).per_model;
  const auto got = oracle::RecountPlan(after->plan).per_model;
  const bool preserved = want == got && failover->unplaced.empty() &&
                         oracle::FitsEverywhere(after->plan, fleet, SmallCatalog().models());
  bool drive_ok = false;
  std::string drive_detail;
  try {
    const std::string target = "127.0.72.1:" + std::to_string(after->ports.model_ports.at("llama3.2:3b"));
    FairnessReport r = DriveRequests(target, "llama3.2:3b", 30);
    drive_ok = r.total_requests == 30 && r.per_instance_counts.size() == 3;
    for (const auto &[id, n] : r.per_instance_counts) drive_ok = drive_ok && id.rfind("n2-", 0) != 0;
    drive_detail = std::to_string(r.per_instance_counts.size()) + " replicas served";
  } catch (const Error &e) {
    drive_detail = e.what();
  }
  const double t = Seconds(start);
  const bool pass = detect <= 2.0 && excludes && preserved && drive_ok && t < 15.0;
  return {pass, "UNAVAILABLE after " + Fmt("%.3f", detect) + " s; plan v" + std::to_string(after->plan_version) +
                    (excludes ? " excludes n2" : " still uses n2") + "; replicas " +
                    (preserved ? "preserved" : "changed") + "; drive: " + drive_detail + "; " + Fmt("%.2f", t) +
                    " s"};
}

// 7 ------------------------------------------------------------------------
Outcome OverviewStatistics() {
  std::mt19937_64 rng(0x5eed0007);
  int mismatches = 0, overviews = 0;
  std::uniform_int_distribution<int> stats_d(8000, 9999);
  FleetManifest fleet = ReferenceFleet();
  ModelCatalog catalog = SmallCatalog();
  for (int trial = 0; trial < 200; ++trial) {
    auto channel = std::make_shared<testing::FakeChannel>();
    Controller c(catalog, ControllerOptions{}, channel);
    testing::RegisterFleet(c, fleet);
    auto sid = c.CreateSession().session_id;
    std::set<std::string> everyone;
    for (const auto &a : fleet.agents) everyone.insert(a.agent_name);
    c.SelectAgents(sid, everyone, false);
    for (const auto &a : fleet.agents) {
      for (const auto &g : a.gpus) {
        if (rng() % 4 == 0) continue;
        c.ToggleGpu(sid, a.agent_name, g.gpu_id, true);
        for (const auto &m : catalog.models()) {
          auto cap = c.SessionCapacity(c.GetSession(sid));
          int max = 0;
          for (const auto &row : cap) {
            if (row["agent"] != a.agent_name || row["gpu"] != g.gpu_id) continue;
            for (const auto &mm : row["models"]) {
              if (mm["model"] == m.model_id) max = mm["max"].get<int>();
            }
          }
          if (max > 0) c.SetModelInstances(sid, a.agent_name, g.gpu_id, m.model_id, static_cast<int>(rng() % (max + 1)));
        }
      }
    }
    if (c.GetSession(sid).chosen_instances.empty()) continue;
    c.SetStage(sid, WizardStage::kConfigure);
    const int stats_port = stats_d(rng);
    c.SetStatsPort(sid, stats_port);
    Overview o = c.GenerateOverview(sid);
    ++overviews;
    auto r = oracle::RecountPlan(o.plan);
    bool ok = o.summary.total_agents == r.agents && o.summary.total_instances == r.instances &&
              o.summary.distinct_models == r.models && o.summary.per_model == r.per_model;
    for (const auto &[agent, d] : o.summary.per_agent) ok = ok && d.instances == r.per_agent[agent];
    ok = ok && o.ports.stats_port == stats_port && OverviewToJson(o)["stats_port"] == stats_port;
    for (const auto &[agent, slice] : o.bundle.agents) {
      ok = ok && InterpretProxyConfig(slice.proxy_config).stats_port == stats_port;
    }
    if (!ok) ++mismatches;
  }
  return {mismatches == 0 && overviews > 0,
          std::to_string(overviews) + " overviews, " + std::to_string(mismatches) + " mismatches"};
}

// 8 ------------------------------------------------------------------------
Outcome DeployAtomicity() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("sdai-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string store = (dir / "state.json").string();
  ControllerOptions options;
  options.store_path = store;
  options.reset_store = true;
  Outcome out;
  {
    testing::LiveCluster cluster(SmallCatalog(), options, "127.0.73.100");
    cluster.Spawn(testing::SimManifest("127.0.73", 4));
    DeployedState prior = cluster.Deploy({{"n2", "gpu0", "llama3.2:3b", 2}, {"n3", "gpu0", "gemma3:1b", 1}});
    const std::string bytes_before = ReadBytes(store);
    const std::string sum_before = Sha256Hex(bytes_before);

    cluster.fleet().InjectFailure("n4", FailureMode::kRejectDeploy, "");
    bool rejected = false;
    try {
      cluster.Deploy({{"n2", "gpu0", "llama3.2:3b", 1}, {"n3", "gpu0", "gemma3:1b", 2}, {"n4", "gpu0", "gemma3:1b", 1}});
    } catch (const Error &e) {
      rejected = e.code() == ErrorCode::kDeployRejected;
    }
    const std::string sum_after = Sha256Hex(ReadBytes(store));
    const bool in_memory = cluster.controller().deployed() == prior;
    const bool agents_back = cluster.fleet().Find("n2")->plan_version() == prior.plan_version &&
                             cluster.fleet().Find("n3")->plan_version() == prior.plan_version;

    ControllerOptions restart;
    restart.store_path = store;
    Controller restored(SmallCatalog(), restart, std::make_shared<testing::FakeChannel>());
    auto again = restored.deployed();
    const bool bit_exact = again && *again == prior &&
                           DeployedStateToJson(*again).dump() == DeployedStateToJson(prior).dump() &&
                           ReadBytes(store) == bytes_before;
    out.pass = rejected && sum_before == sum_after && in_memory && agents_back && bit_exact;
    out.detail = std::string("reject ") + (rejected ? "surfaced" : "missing") + "; store checksum " +
                 (sum_before == sum_after ? "unchanged" : "changed") + " (" + sum_before.substr(0, 12) +
                 "); agents " + (agents_back ? "at" : "not at") + " v" + std::to_string(prior.plan_version) +
                 "; restore " + (bit_exact ? "bit-exact" : "differs");
  }
  fs::remove_all(dir);
  return out;
}

}  // namespace
}  // namespace sdai

int main() {
  using sdai::Outcome;
  const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria = {
      {"fleet-fixture-fidelity", sdai::FleetFidelity},
      {"capacity-oracle", sdai::CapacityOracle},
      {"placement-feasibility", sdai::PlacementFeasibility},
      {"config-determinism-coverage", sdai::ConfigDeterminism},
      {"balancing-fairness", sdai::BalancingFairness},
      {"failover", sdai::Failover},
      {"overview-statistics", sdai::OverviewStatistics},
      {"deploy-atomicity", sdai::DeployAtomicity},
  };
  int failed = 0;
  for (const auto &[name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
