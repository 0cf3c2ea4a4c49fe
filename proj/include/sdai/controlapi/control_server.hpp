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

#include <chrono>
#include <memory>
#include <string>

#include "sdai/controlapi/controller.hpp"

namespace sdai {

/// HTTP status used for an error code in every control API response.
int HttpStatusFor(ErrorCode code);

struct ControlServerOptions {
  std::string ui_dir;  // served under /ui when set
  // Liveness sweep period; zero picks a fifth of the degraded threshold.
  std::chrono::milliseconds sweep_interval{0};
};

/// Control API over HTTP plus the background liveness sweep.
///
///   GET  /v1/dashboard              GET  /v1/catalog          GET /v1/deployed
///   POST /v1/sessions               GET  /v1/sessions/{id}
///   PATCH /v1/sessions/{id}/agents|gpus|instances|ports|stage
///   POST /v1/sessions/{id}/overview POST /v1/sessions/{id}/deploy
///   POST /v1/agents/register        POST /v1/agents/{name}/heartbeat
///   POST /v1/agents/{name}/failover
class ControlServer {
 public:
  explicit ControlServer(Controller &controller, ControlServerOptions options = {});
  ~ControlServer();
  ControlServer(const ControlServer &) = delete;
  ControlServer &operator=(const ControlServer &) = delete;

  /// Binds `host:port` (port 0 picks a free one) and starts serving and
  /// sweeping on background threads. Returns the bound port.
  int Start(const std::string &host, int port);
  /// Blocks serving on the calling thread; the sweep still runs in background.
  void Run(const std::string &host, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sdai
