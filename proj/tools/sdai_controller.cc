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

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>

#include "sdai/controlapi/control_server.hpp"

namespace {

int WaitForSignal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
  return sig;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"SDAI controller: registry, configuration wizard and deploy coordinator"};
  std::string listen = "127.0.0.1:8080";
  std::string catalog_path;
  std::string store_path;
  std::string ui_dir;
  std::int64_t degraded_ms = 10'000;
  std::int64_t unavailable_ms = 15'000;
  bool auto_failover = true;
  bool reset_store = false;
  app.add_option("--listen", listen, "host:port of the control API")->envname("SDAI_LISTEN");
  app.add_option("--catalog", catalog_path, "model catalog JSON")->required()->envname("SDAI_CATALOG");
  app.add_option("--store", store_path, "deployed-state file (empty: no persistence)")->envname("SDAI_STORE");
  app.add_option("--heartbeat-degraded", degraded_ms, "ms without heartbeat before DEGRADED")
      ->envname("SDAI_HEARTBEAT_DEGRADED");
  app.add_option("--heartbeat-unavailable", unavailable_ms, "ms without heartbeat before UNAVAILABLE")
      ->envname("SDAI_HEARTBEAT_UNAVAILABLE");
  app.add_option("--auto-failover", auto_failover, "redeploy when a deployed agent becomes UNAVAILABLE")
      ->envname("SDAI_AUTO_FAILOVER");
  app.add_flag("--reset-store", reset_store, "discard the persisted state at startup")->envname("SDAI_RESET_STORE");
  app.add_option("--ui-dir", ui_dir, "static files served under /ui")->envname("SDAI_UI_DIR");
  CLI11_PARSE(app, argc, argv);

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  try {
    sdai::HostPort hp = sdai::ParseHostPort(listen);
    sdai::ControllerOptions options;
    options.thresholds = {degraded_ms, unavailable_ms};
    options.auto_failover = auto_failover;
    options.store_path = store_path;
    options.reset_store = reset_store;
    sdai::Controller controller(sdai::LoadModelCatalog(sdai::ReadTextFile(catalog_path)), options,
                                std::make_shared<sdai::HttpAgentChannel>());
    sdai::ControlServerOptions server_options;
    server_options.ui_dir = ui_dir;
    sdai::ControlServer server(controller, server_options);
    int port = server.Start(hp.host, hp.port);
    std::fprintf(stderr, "sdai-controller listening on %s:%d (catalog %s, %zu models)\n", hp.host.c_str(), port,
                 controller.catalog().version().c_str(), controller.catalog().size());
    if (auto d = controller.deployed()) {
      std::fprintf(stderr, "restored plan version %lld (%zu instances)\n", static_cast<long long>(d->plan_version),
                   d->plan.assignments.size());
    }
    WaitForSignal();
    server.Stop();
  } catch (const sdai::Error &e) {
    std::fprintf(stderr, "sdai-controller: %s\n", e.what());
    return 1;
  }
  return 0;
}
