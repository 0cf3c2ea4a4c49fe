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

#include <httplib.h>

#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "sdai/simfleet/simfleet.hpp"

namespace sdai {

using nlohmann::json;

std::string_view ToString(FailureMode mode) {
  switch (mode) {
    case FailureMode::kNone: return "NONE";
    case FailureMode::kCrashAt: return "CRASH_AT";
    case FailureMode::kRejectDeploy: return "REJECT_DEPLOY";
    case FailureMode::kDropHeartbeatsAt: return "DROP_HEARTBEATS_AT";
    case FailureMode::kUnhealthyInstance: return "UNHEALTHY_INSTANCE";
  }
  return "NONE";
}

FailureMode ParseFailureMode(std::string_view text) {
  for (auto m : {FailureMode::kNone, FailureMode::kCrashAt, FailureMode::kRejectDeploy,
                 FailureMode::kDropHeartbeatsAt, FailureMode::kUnhealthyInstance}) {
    if (ToString(m) == text) return m;
  }
  throw Error(ErrorCode::kParse, "unknown failure mode '" + std::string(text) + "'");
}

namespace {

std::int64_t DelayMs(FailureMode mode, const std::string &param) {
  std::size_t used = 0;
  long long ms = -1;
  try {
    ms = std::stoll(param, &used);
  } catch (const std::exception &) {
  }
  if (param.empty() || used != param.size() || ms < 0) {
    throw Error(ErrorCode::kValidation, std::string(ToString(mode)) +
                                            " needs a delay in milliseconds, got '" + param + "'");
  }
  return ms;
}

}  // namespace

void ValidateSimAgentConfig(const SimAgentConfig &config) {
  if (!IsValidName(config.agent_name)) {
    throw Error(ErrorCode::kValidation, "invalid agent name '" + config.agent_name + "'");
  }
  ParseHostPort(config.address);
  if (config.heartbeat_interval.count() <= 0) {
    throw Error(ErrorCode::kValidation, "heartbeat interval must be positive");
  }
  switch (config.failure_mode) {
    case FailureMode::kCrashAt:
    case FailureMode::kDropHeartbeatsAt:
      DelayMs(config.failure_mode, config.failure_param);
      break;
    case FailureMode::kUnhealthyInstance:
      if (config.failure_param.empty()) {
        throw Error(ErrorCode::kValidation, "UNHEALTHY_INSTANCE needs an instance id");
      }
      break;
    default:
      break;
  }
}

namespace {

// An httplib server on its own thread with a bounded worker pool.
class Listener {
 public:
  ~Listener() { Stop(); }

  bool Start(const std::string &host, int port, std::size_t threads,
             const std::function<void(httplib::Server &)> &setup) {
    server_ = std::make_unique<httplib::Server>();
    server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    server_->set_keep_alive_max_count(1);
    setup(*server_);
    if (!server_->bind_to_port(host, port)) {
      server_.reset();
      return false;
    }
    thread_ = std::thread([s = server_.get()] { s->listen_after_bind(); });
    server_->wait_until_ready();
    return true;
  }

  void Stop() {
    if (!server_) return;
    server_->stop();
    if (thread_.joinable()) thread_.join();
    server_.reset();
  }

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

struct Stub {
  std::string model_id;
  std::string gpu_id;
  int port = 0;
  Mib vram = 0;
  std::unique_ptr<Listener> listener;  // null while unhealthy or unbound
};

struct ProxyState {
  std::mutex mu;
  SimRoute route;
  std::size_t cursor = 0;
  std::uint64_t generation = 0;
  std::map<std::string, int> forwarded;
  std::map<std::string, int> failed;
  std::unique_ptr<Listener> listener;
};

void ReplyJson(httplib::Response &res, const json &body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

struct SimAgent::Impl {
  SimAgentConfig config;
  std::string controller_address;
  std::string host;
  int control_port = 0;

  mutable std::mutex mu;
  Listener control;
  std::map<std::string, Stub> stubs;
  std::map<int, std::shared_ptr<ProxyState>> proxies;
  std::unique_ptr<Listener> stats;
  int stats_port = 0;
  std::optional<std::string> front;
  std::int64_t plan_version = 0;
  std::set<std::string> unhealthy;
  FailureMode mode = FailureMode::kNone;

  std::atomic<bool> crashed{false};
  std::atomic<bool> dropped{false};
  std::mutex wait_mu;
  std::condition_variable wait_cv;
  bool stopping = false;
  std::thread heartbeat_thread;
  std::vector<std::thread> timers;

  std::string MapHost(const std::string &h) const {
    return h == "127.0.0.1" || h == "localhost" ? host : h;
  }

  std::unique_ptr<httplib::Client> ControllerClient() const {
    HostPort hp = ParseHostPort(controller_address);
    auto client = std::make_unique<httplib::Client>(hp.host, hp.port);
    client->set_connection_timeout(std::chrono::seconds(2));
    client->set_read_timeout(std::chrono::seconds(5));
    return client;
  }

  RegistrationRequest BuildRegistration() const {
    RegistrationRequest req;
    req.agent_name = config.agent_name;
    req.address = config.address;
    req.gpus = config.gpus;
    req.is_main_agent = config.is_main_agent;
    std::lock_guard<std::mutex> lock(mu);
    for (const auto &[id, stub] : stubs) {
      req.instances.push_back({id, stub.model_id, stub.port, stub.listener != nullptr, true});
    }
    return req;
  }

  void Register() {
    auto res = ControllerClient()->Post("/v1/agents/register", json(BuildRegistration()).dump(),
                                        "application/json");
    if (!res) {
      throw Error(ErrorCode::kRegistrationFailed,
                  config.agent_name + ": controller unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      json body = json::parse(res->body, nullptr, false);
      throw Error(ErrorCode::kRegistrationFailed,
                  config.agent_name + ": " + ErrorFromBody(body, res->status).what());
    }
  }

  HeartbeatPayload BuildHeartbeat() const {
    HeartbeatPayload hb;
    hb.agent_name = config.agent_name;
    std::map<std::string, Mib> used;
    std::lock_guard<std::mutex> lock(mu);
    for (const auto &[id, stub] : stubs) {
      hb.instance_statuses[id] = stub.listener != nullptr;
      used[stub.gpu_id] += stub.vram;
    }
    for (const auto &g : config.gpus) {
      hb.gpu_free_vram[g.gpu_id] = std::max<Mib>(0, EffectiveVram(g) - used[g.gpu_id]);
    }
    return hb;
  }

  void SendHeartbeat() {
    HeartbeatPayload hb = BuildHeartbeat();
    hb.sent_at = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::system_clock::now().time_since_epoch())
                     .count();
    auto res = ControllerClient()->Post("/v1/agents/" + config.agent_name + "/heartbeat",
                                        json(hb).dump(), "application/json");
    if (res && res->status == 404) {
      try {
        Register();
      } catch (const Error &e) {
        std::fprintf(stderr, "re-registration failed: %s\n", e.what());
      }
    }
  }

  // Returns false when stopping.
  bool Sleep(std::chrono::milliseconds d) {
    std::unique_lock<std::mutex> lock(wait_mu);
    return !wait_cv.wait_for(lock, d, [this] { return stopping; });
  }

  void HeartbeatLoop() {
    while (Sleep(config.heartbeat_interval)) {
      if (crashed || dropped) continue;
      SendHeartbeat();
    }
  }

  // --- data plane -----------------------------------------------------------

  std::unique_ptr<Listener> StartStub(const std::string &instance_id, const Stub &stub) {
    auto listener = std::make_unique<Listener>();
    const std::string agent = config.agent_name, model = stub.model_id;
    const auto delay = config.response_delay;
    bool ok = listener->Start(host, stub.port, 2, [=](httplib::Server &s) {
      s.Post("/api/generate", [=](const httplib::Request &, httplib::Response &res) {
        if (delay.count() > 0) std::this_thread::sleep_for(delay);
        ReplyJson(res, json{{"agent", agent}, {"instance", instance_id}, {"model", model}});
      });
    });
    return ok ? std::move(listener) : nullptr;
  }

  static void HandleProxy(const std::shared_ptr<ProxyState> &st, const httplib::Request &req,
                          httplib::Response &res) {
    std::vector<ProxyServer> servers;
    std::size_t start = 0;
    std::uint64_t generation = 0;
    {
      std::lock_guard<std::mutex> lock(st->mu);
      servers = st->route.servers;
      start = st->cursor;
      generation = st->generation;
    }
    const std::string content_type =
        req.has_header("Content-Type") ? req.get_header_value("Content-Type") : "application/json";
    for (std::size_t k = 0; k < servers.size(); ++k) {
      const std::size_t idx = (start + k) % servers.size();
      const ProxyServer &server = servers[idx];
      httplib::Client client(server.host, server.port);
      client.set_connection_timeout(std::chrono::milliseconds(300));
      client.set_read_timeout(std::chrono::seconds(30));
      auto upstream = req.method == "GET" ? client.Get(req.path)
                                          : client.Post(req.path, req.body, content_type);
      if (!upstream || upstream->status >= 500) {
        std::lock_guard<std::mutex> lock(st->mu);
        st->failed[server.name] += 1;
        continue;
      }
      {
        std::lock_guard<std::mutex> lock(st->mu);
        if (st->generation == generation) st->cursor = (idx + 1) % servers.size();
        st->forwarded[server.name] += 1;
      }
      res.status = upstream->status;
      res.set_content(upstream->body, upstream->get_header_value("Content-Type").empty()
                                          ? "application/json"
                                          : upstream->get_header_value("Content-Type"));
      return;
    }
    ReplyJson(res,
              ErrorBody(Error(ErrorCode::kNoHealthyReplica,
                              "no healthy server for " + st->route.model_id)),
              503);
  }

  std::unique_ptr<Listener> StartProxy(const std::shared_ptr<ProxyState> &st, int port) {
    auto listener = std::make_unique<Listener>();
    auto handler = [st](const httplib::Request &req, httplib::Response &res) {
      HandleProxy(st, req, res);
    };
    bool ok = listener->Start(host, port, 4, [&](httplib::Server &s) {
      s.Post(".*", handler);
      s.Get(".*", handler);
    });
    return ok ? std::move(listener) : nullptr;
  }

  json StatsJson() const {
    json routes = json::array();
    std::lock_guard<std::mutex> lock(mu);
    for (const auto &[port, st] : proxies) {
      std::lock_guard<std::mutex> plock(st->mu);
      json servers = json::array();
      for (const auto &s : st->route.servers) {
        servers.push_back({{"name", s.name},
                           {"host", s.host},
                           {"port", s.port},
                           {"forwarded", st->forwarded.count(s.name) ? st->forwarded.at(s.name) : 0},
                           {"failed", st->failed.count(s.name) ? st->failed.at(s.name) : 0}});
      }
      routes.push_back({{"model", st->route.model_id}, {"port", port}, {"servers", servers}});
    }
    return json{{"agent", config.agent_name}, {"plan_version", plan_version}, {"routes", routes}};
  }

  DeployAck Apply(const DeployRequest &request) {
    if (mode == FailureMode::kRejectDeploy) {
      throw Error(ErrorCode::kDeployRejected,
                  "agent '" + config.agent_name + "' is configured to reject deploys");
    }
    ProxyTopology topo;
    std::vector<LaunchCommand> commands;
    try {
      topo = InterpretProxyConfig(request.proxy_config);
      commands = ParseStartupScript(request.startup_script);
      if (request.front_proxy_config) InterpretProxyConfig(*request.front_proxy_config);
    } catch (const Error &e) {
      throw Error(ErrorCode::kDeployRejected, std::string("invalid bundle: ") + e.what());
    }

    std::vector<std::unique_ptr<Listener>> retired;
    std::lock_guard<std::mutex> lock(mu);

    std::map<std::string, const LaunchCommand *> desired;
    for (const auto &cmd : commands) desired[cmd.instance_id] = &cmd;
    for (auto it = stubs.begin(); it != stubs.end();) {
      auto want = desired.find(it->first);
      if (want == desired.end() || want->second->port != it->second.port ||
          want->second->model_id != it->second.model_id) {
        if (it->second.listener) retired.push_back(std::move(it->second.listener));
        it = stubs.erase(it);
      } else {
        ++it;
      }
    }
    // Free the ports before rebinding them.
    for (auto &l : retired) l->Stop();
    retired.clear();

    DeployAck ack{request.plan_version, {}};
    for (const auto &cmd : commands) {
      InstanceStartResult result{cmd.instance_id, cmd.model_id, cmd.port, true, ""};
      auto existing = stubs.find(cmd.instance_id);
      if (existing == stubs.end()) {
        Stub stub{cmd.model_id, cmd.gpu_id, cmd.port, cmd.vram_mib, nullptr};
        if (unhealthy.count(cmd.instance_id)) {
          result.message = "unhealthy";
        } else {
          stub.listener = StartStub(cmd.instance_id, stub);
          if (!stub.listener) {
            result.started = false;
            result.message = "port bind failure on " + host + ":" + std::to_string(cmd.port);
          }
        }
        if (result.started) stubs.emplace(cmd.instance_id, std::move(stub));
      }
      ack.results.push_back(result);
    }

    std::map<int, const ProxyRoute *> wanted_routes;
    for (const auto &r : topo.routes) wanted_routes[r.bind_port] = &r;
    for (auto it = proxies.begin(); it != proxies.end();) {
      if (!wanted_routes.count(it->first)) {
        retired.push_back(std::move(it->second->listener));
        it = proxies.erase(it);
      } else {
        ++it;
      }
    }
    for (auto &l : retired) {
      if (l) l->Stop();
    }
    retired.clear();
    for (const auto &[port, route] : wanted_routes) {
      SimRoute sim{route->model_id, port, route->servers};
      for (auto &s : sim.servers) s.host = MapHost(s.host);
      auto it = proxies.find(port);
      if (it != proxies.end()) {
        std::lock_guard<std::mutex> plock(it->second->mu);
        it->second->route = std::move(sim);
        it->second->cursor = 0;
        it->second->generation += 1;
        continue;
      }
      auto st = std::make_shared<ProxyState>();
      st->route = std::move(sim);
      st->listener = StartProxy(st, port);
      if (!st->listener) {
        throw Error(ErrorCode::kPortBindFailure,
                    "cannot bind model port " + host + ":" + std::to_string(port));
      }
      proxies[port] = st;
    }

    if (!stats || stats_port != topo.stats_port) {
      if (stats) stats->Stop();
      stats = std::make_unique<Listener>();
      stats_port = topo.stats_port;
      if (!stats->Start(host, stats_port, 1, [this](httplib::Server &s) {
            s.Get("/stats", [this](const httplib::Request &, httplib::Response &res) {
              ReplyJson(res, StatsJson());
            });
          })) {
        stats.reset();
      }
    }
    plan_version = request.plan_version;
    front = request.front_proxy_config;
    return ack;
  }

  void StopInstances(const std::vector<std::string> &ids) {
    std::vector<std::unique_ptr<Listener>> retired;
    {
      std::lock_guard<std::mutex> lock(mu);
      for (const auto &id : ids) {
        auto it = stubs.find(id);
        if (it == stubs.end()) continue;
        if (it->second.listener) retired.push_back(std::move(it->second.listener));
        stubs.erase(it);
      }
    }
  }

  void MarkUnhealthy(const std::string &id) {
    std::unique_ptr<Listener> retired;
    std::lock_guard<std::mutex> lock(mu);
    unhealthy.insert(id);
    auto it = stubs.find(id);
    if (it != stubs.end()) retired = std::move(it->second.listener);
    if (retired) retired->Stop();
  }

  // Stops every listener; heartbeats stay off through `crashed`.
  void StopDataPlane() {
    std::vector<std::unique_ptr<Listener>> retired;
    {
      std::lock_guard<std::mutex> lock(mu);
      for (auto &[id, stub] : stubs) {
        if (stub.listener) retired.push_back(std::move(stub.listener));
      }
      for (auto &[port, st] : proxies) {
        if (st->listener) retired.push_back(std::move(st->listener));
      }
      if (stats) retired.push_back(std::move(stats));
    }
    for (auto &l : retired) l->Stop();
  }

  void Crash() {
    crashed = true;
    control.Stop();
    StopDataPlane();
  }

  void StartControl() {
    bool ok = control.Start(host, control_port, 2, [this](httplib::Server &s) {
      s.Post("/v1/deploy", [this](const httplib::Request &req, httplib::Response &res) {
        try {
          json body = json::parse(req.body);
          ReplyJson(res, json(Apply(body.get<DeployRequest>())));
        } catch (const Error &e) {
          ReplyJson(res, ErrorBody(e), e.code() == ErrorCode::kParse ? 400 : 409);
        } catch (const json::exception &e) {
          ReplyJson(res, ErrorBody(Error(ErrorCode::kParse, e.what())), 400);
        }
      });
      s.Post("/v1/stop", [this](const httplib::Request &req, httplib::Response &res) {
        try {
          StopInstances(json::parse(req.body).get<StopRequest>().instance_ids);
          ReplyJson(res, json::object());
        } catch (const json::exception &e) {
          ReplyJson(res, ErrorBody(Error(ErrorCode::kParse, e.what())), 400);
        }
      });
      s.Get("/v1/status", [this](const httplib::Request &, httplib::Response &res) {
        ReplyJson(res, StatsJson());
      });
    });
    if (!ok) {
      throw Error(ErrorCode::kPortBindFailure, "cannot bind control listener " + config.address);
    }
  }
};

SimAgent::SimAgent(SimAgentConfig config, std::string controller_address)
    : impl_(std::make_unique<Impl>()) {
  ValidateSimAgentConfig(config);
  HostPort hp = ParseHostPort(config.address);
  impl_->host = hp.host;
  impl_->control_port = hp.port;
  impl_->config = std::move(config);
  impl_->controller_address = std::move(controller_address);
}

SimAgent::~SimAgent() { Stop(); }

void SimAgent::Start() {
  impl_->StartControl();
  try {
    impl_->Register();
  } catch (...) {
    impl_->control.Stop();
    throw;
  }
  impl_->heartbeat_thread = std::thread([this] { impl_->HeartbeatLoop(); });
  if (impl_->config.failure_mode != FailureMode::kNone) {
    InjectFailure(impl_->config.failure_mode, impl_->config.failure_param);
  }
}

void SimAgent::Stop() {
  {
    std::lock_guard<std::mutex> lock(impl_->wait_mu);
    impl_->stopping = true;
  }
  impl_->wait_cv.notify_all();
  if (impl_->heartbeat_thread.joinable()) impl_->heartbeat_thread.join();
  for (auto &t : impl_->timers) {
    if (t.joinable()) t.join();
  }
  impl_->timers.clear();
  impl_->control.Stop();
  impl_->StopDataPlane();
}

void SimAgent::InjectFailure(FailureMode mode, const std::string &param) {
  Impl &impl = *impl_;
  switch (mode) {
    case FailureMode::kNone:
    case FailureMode::kRejectDeploy: {
      std::lock_guard<std::mutex> lock(impl.mu);
      impl.mode = mode;
      return;
    }
    case FailureMode::kUnhealthyInstance:
      if (param.empty()) throw Error(ErrorCode::kValidation, "UNHEALTHY_INSTANCE needs an instance id");
      impl.MarkUnhealthy(param);
      return;
    case FailureMode::kCrashAt:
    case FailureMode::kDropHeartbeatsAt: {
      const auto delay = std::chrono::milliseconds(DelayMs(mode, param));
      auto act = [&impl, mode] {
        if (mode == FailureMode::kCrashAt) {
          impl.Crash();
        } else {
          impl.dropped = true;
        }
      };
      if (delay.count() == 0) {
        act();
      } else {
        impl.timers.emplace_back([&impl, delay, act] {
          if (impl.Sleep(delay)) act();
        });
      }
      return;
    }
  }
}

DeployAck SimAgent::ApplyDeploy(const DeployRequest &request) { return impl_->Apply(request); }

void SimAgent::StopInstances(const std::vector<std::string> &instance_ids) {
  impl_->StopInstances(instance_ids);
}

const std::string &SimAgent::name() const { return impl_->config.agent_name; }
const std::string &SimAgent::host() const { return impl_->host; }
bool SimAgent::crashed() const { return impl_->crashed; }
bool SimAgent::heartbeats_dropped() const { return impl_->dropped; }

std::int64_t SimAgent::plan_version() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->plan_version;
}

std::vector<std::string> SimAgent::running_instance_ids() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  std::vector<std::string> ids;
  for (const auto &[id, stub] : impl_->stubs) ids.push_back(id);
  return ids;
}

std::vector<SimRoute> SimAgent::routes() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  std::vector<SimRoute> out;
  for (const auto &[port, st] : impl_->proxies) {
    std::lock_guard<std::mutex> plock(st->mu);
    out.push_back(st->route);
  }
  return out;
}

std::optional<std::string> SimAgent::front_proxy_config() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->front;
}

}  // namespace sdai
