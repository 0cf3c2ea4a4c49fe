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

#include "sdai/controlapi/control_server.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <thread>

#include "sdai/domain/json_codec.hpp"

namespace sdai {

using nlohmann::json;

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kValidation:
      return 400;
    case ErrorCode::kUnknownAgent:
    case ErrorCode::kUnknownGpu:
    case ErrorCode::kUnknownModel:
    case ErrorCode::kUnknownSession:
      return 404;
    case ErrorCode::kWrongStage:
    case ErrorCode::kVersionConflict:
    case ErrorCode::kMainAgentConflict:
    case ErrorCode::kPortCollision:
    case ErrorCode::kDeployRejected:
      return 409;
    case ErrorCode::kExceedsCapacity:
    case ErrorCode::kInfeasiblePlan:
    case ErrorCode::kEmptyPlan:
    case ErrorCode::kGpuNotEnabled:
    case ErrorCode::kGpuDisabled:
    case ErrorCode::kAgentNotSelected:
    case ErrorCode::kUnknownModelInPlan:
      return 422;
    case ErrorCode::kAgentUnavailable:
    case ErrorCode::kNoHealthyReplica:
      return 503;
    default:
      return 500;
  }
}

namespace {

void Reply(httplib::Response &res, const json &body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void ReplyError(httplib::Response &res, const Error &e) {
  json body = ErrorBody(e);
  if (auto *cap = dynamic_cast<const ExceedsCapacityError *>(&e)) body["max"] = cap->max();
  if (auto *inf = dynamic_cast<const InfeasiblePlanError *>(&e)) {
    json v = json::array();
    for (const auto &pv : inf->violations()) {
      v.push_back({{"kind", ToString(pv.kind)}, {"subject", pv.subject}, {"detail", pv.detail}});
    }
    body["violations"] = v;
  }
  if (auto *dep = dynamic_cast<const DeployRejectedError *>(&e)) {
    json r = json::array();
    for (const auto &ar : dep->results()) {
      r.push_back({{"agent", ar.agent_name}, {"status", ar.status}, {"message", ar.message}});
    }
    body["results"] = r;
  }
  Reply(res, body, HttpStatusFor(e.code()));
}

json Body(const httplib::Request &req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kParse, "request body is not a JSON object");
  return j;
}

template <typename Fn>
httplib::Server::Handler Wrap(Fn fn) {
  return [fn](const httplib::Request &req, httplib::Response &res) {
    try {
      fn(req, res);
    } catch (const Error &e) {
      ReplyError(res, e);
    } catch (const json::exception &e) {
      ReplyError(res, Error(ErrorCode::kParse, e.what()));
    }
  };
}

}  // namespace

struct ControlServer::Impl {
  Controller &controller;
  ControlServerOptions options;
  httplib::Server server;
  std::thread listen_thread;
  std::thread sweep_thread;
  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;

  Impl(Controller &c, ControlServerOptions o) : controller(c), options(std::move(o)) { Routes(); }

  json Session(const std::string &id) { return controller.SessionView(controller.GetSession(id)); }

  void Routes() {
    Controller &c = controller;
    server.Get("/v1/dashboard", Wrap([&c](const auto &, auto &res) { Reply(res, c.Dashboard()); }));
    server.Get("/v1/catalog", Wrap([&c](const auto &, auto &res) {
      Reply(res, json{{"version", c.catalog().version()}, {"models", c.catalog().models()}});
    }));
    server.Get("/v1/deployed", Wrap([&c](const auto &, auto &res) {
      auto d = c.deployed();
      Reply(res, d ? DeployedStateToJson(*d) : json(nullptr));
    }));
    server.Post("/v1/sessions", Wrap([this, &c](const auto &, auto &res) {
      Reply(res, Session(c.CreateSession().session_id), 201);
    }));
    server.Get(R"(/v1/sessions/([^/]+))", Wrap([this](const auto &req, auto &res) {
      Reply(res, Session(req.matches[1]));
    }));
    server.Patch(R"(/v1/sessions/([^/]+)/agents)", Wrap([this, &c](const auto &req, auto &res) {
      json b = Body(req);
      c.SelectAgents(req.matches[1], b.value("names", std::set<std::string>{}),
                     b.value("select_all_standard", false));
      Reply(res, Session(req.matches[1]));
    }));
    server.Patch(R"(/v1/sessions/([^/]+)/gpus)", Wrap([this, &c](const auto &req, auto &res) {
      json b = Body(req);
      c.ToggleGpu(req.matches[1], b.at("agent").template get<std::string>(),
                  b.at("gpu").template get<std::string>(), b.at("enabled").template get<bool>());
      Reply(res, Session(req.matches[1]));
    }));
    server.Patch(R"(/v1/sessions/([^/]+)/instances)", Wrap([this, &c](const auto &req, auto &res) {
      json b = Body(req);
      c.SetModelInstances(req.matches[1], b.at("agent").template get<std::string>(),
                          b.at("gpu").template get<std::string>(),
                          b.at("model").template get<std::string>(), b.at("count").template get<int>());
      Reply(res, Session(req.matches[1]));
    }));
    server.Patch(R"(/v1/sessions/([^/]+)/ports)", Wrap([this, &c](const auto &req, auto &res) {
      json b = Body(req);
      if (b.contains("stats_port")) c.SetStatsPort(req.matches[1], b["stats_port"].template get<int>());
      if (b.contains("model")) {
        const json &port = b.at("port");
        c.SetPort(req.matches[1], b["model"].template get<std::string>(),
                  port.is_null() ? 0 : port.template get<int>());
      }
      Reply(res, Session(req.matches[1]));
    }));
    server.Patch(R"(/v1/sessions/([^/]+)/stage)", Wrap([this, &c](const auto &req, auto &res) {
      json b = Body(req);
      c.SetStage(req.matches[1], ParseWizardStage(b.at("stage").template get<std::string>()));
      Reply(res, Session(req.matches[1]));
    }));
    server.Post(R"(/v1/sessions/([^/]+)/overview)", Wrap([&c](const auto &req, auto &res) {
      Reply(res, OverviewToJson(c.GenerateOverview(req.matches[1])));
    }));
    server.Post(R"(/v1/sessions/([^/]+)/deploy)", Wrap([&c](const auto &req, auto &res) {
      Reply(res, DeployedStateToJson(c.Deploy(req.matches[1])));
    }));
    server.Post("/v1/agents/register", Wrap([&c](const auto &req, auto &res) {
      Reply(res, json(c.RegisterAgent(Body(req).template get<RegistrationRequest>())));
    }));
    server.Post(R"(/v1/agents/([^/]+)/heartbeat)", Wrap([&c](const auto &req, auto &res) {
      HeartbeatPayload p = Body(req).template get<HeartbeatPayload>();
      p.agent_name = req.matches[1];
      AgentRecord r = c.Heartbeat(p);
      Reply(res, json{{"liveness", ToString(r.liveness)}, {"last_heartbeat", r.last_heartbeat}});
    }));
    server.Post(R"(/v1/agents/([^/]+)/failover)", Wrap([&c](const auto &req, auto &res) {
      Reply(res, FailoverToJson(c.HandleAgentFailure(req.matches[1])));
    }));
    if (!options.ui_dir.empty() && !server.set_mount_point("/ui", options.ui_dir)) {
      std::fprintf(stderr, "ui directory %s not found, /ui disabled\n", options.ui_dir.c_str());
    }
  }

  void StartSweep() {
    auto interval = options.sweep_interval;
    if (interval.count() <= 0) {
      interval = std::chrono::milliseconds(
          std::clamp<std::int64_t>(controller.options().thresholds.degraded_after_ms / 5, 10, 1000));
    }
    sweep_thread = std::thread([this, interval] {
      std::unique_lock<std::mutex> lock(mu);
      while (!cv.wait_for(lock, interval, [this] { return stopping; })) {
        lock.unlock();
        try {
          controller.RunLivenessSweep();
        } catch (const std::exception &e) {
          std::fprintf(stderr, "liveness sweep failed: %s\n", e.what());
        }
        lock.lock();
      }
    });
  }

  void Bind(const std::string &host, int &port) {
    if (port == 0) {
      port = server.bind_to_any_port(host);
      if (port < 0) throw Error(ErrorCode::kPortBindFailure, "cannot bind " + host);
    } else if (!server.bind_to_port(host, port)) {
      throw Error(ErrorCode::kPortBindFailure, "cannot bind " + host + ":" + std::to_string(port));
    }
  }

  void Shutdown() {
    {
      std::lock_guard<std::mutex> lock(mu);
      if (stopping) return;
      stopping = true;
    }
    cv.notify_all();
    server.stop();
    if (listen_thread.joinable()) listen_thread.join();
    if (sweep_thread.joinable()) sweep_thread.join();
  }
};

ControlServer::ControlServer(Controller &controller, ControlServerOptions options)
    : impl_(std::make_unique<Impl>(controller, std::move(options))) {}

ControlServer::~ControlServer() { Stop(); }

int ControlServer::Start(const std::string &host, int port) {
  impl_->Bind(host, port);
  impl_->listen_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  impl_->StartSweep();
  return port;
}

void ControlServer::Run(const std::string &host, int port) {
  impl_->Bind(host, port);
  impl_->StartSweep();
  impl_->server.listen_after_bind();
}

void ControlServer::Stop() { impl_->Shutdown(); }

}  // namespace sdai
