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

#include <algorithm>
#include <mutex>
#include <thread>

#include "sdai/simfleet/simfleet.hpp"

namespace sdai {

using nlohmann::json;

FairnessReport DriveRequests(const std::string &target, const std::string &model_id, int n,
                             int concurrency) {
  if (n <= 0) throw Error(ErrorCode::kValidation, "request count must be positive");
  if (concurrency <= 0) throw Error(ErrorCode::kValidation, "concurrency must be positive");
  const HostPort hp = ParseHostPort(target);
  const std::string body = json{{"model", model_id}, {"prompt", "ping"}, {"stream", false}}.dump();

  FairnessReport report;
  report.model_id = model_id;
  std::mutex mu;
  std::optional<Error> failure;

  auto worker = [&](int count) {
    httplib::Client client(hp.host, hp.port);
    client.set_connection_timeout(std::chrono::seconds(2));
    client.set_read_timeout(std::chrono::seconds(30));
    for (int i = 0; i < count; ++i) {
      auto res = client.Post("/api/generate", body, "application/json");
      std::lock_guard<std::mutex> lock(mu);
      if (failure) return;
      if (!res) {
        failure = Error(ErrorCode::kNoHealthyReplica,
                        "no response from " + target + ": " + httplib::to_string(res.error()));
        return;
      }
      if (res->status != 200) {
        json err = json::parse(res->body, nullptr, false);
        failure = ErrorFromBody(err, res->status);
        return;
      }
      json reply = json::parse(res->body, nullptr, false);
      if (reply.is_discarded() || !reply.contains("instance")) {
        failure = Error(ErrorCode::kParse, "malformed reply from " + target);
        return;
      }
      report.per_instance_counts[reply["instance"].get<std::string>()] += 1;
      report.total_requests += 1;
    }
  };

  const int workers = std::min(concurrency, n);
  if (workers == 1) {
    worker(n);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker, n / workers + (w < n % workers ? 1 : 0));
    for (auto &t : threads) t.join();
  }
  if (failure) throw *failure;

  if (!report.per_instance_counts.empty()) {
    auto [lo, hi] = std::minmax_element(
        report.per_instance_counts.begin(), report.per_instance_counts.end(),
        [](const auto &a, const auto &b) { return a.second < b.second; });
    report.max_spread = hi->second - lo->second;
  }
  return report;
}

}  // namespace sdai
