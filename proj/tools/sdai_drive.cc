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

#include <algorithm>
#include <cstdio>

#include "sdai/simfleet/simfleet.hpp"

int main(int argc, char **argv) {
  CLI::App app{"Request driver for simulated model listeners"};
  std::string target;
  std::string model;
  int n = 100;
  int concurrency = 1;
  app.add_option("--target", target, "host:port of a model listener")->required();
  app.add_option("--model", model, "model id")->required();
  app.add_option("-n,--count", n, "number of requests (also --n)")->check(CLI::PositiveNumber);
  app.add_option("--concurrency", concurrency, "parallel workers")->check(CLI::PositiveNumber);
  // CLI11 long names need two characters; accept --n as an alias of -n.
  std::vector<std::string> args(argv + 1, argv + argc);
  for (auto &a : args) {
    if (a == "--n") a = "-n";
    else if (a.rfind("--n=", 0) == 0) a = "--count=" + a.substr(4);
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }

  try {
    sdai::FairnessReport r = sdai::DriveRequests(target, model, n, concurrency);
    nlohmann::json out{{"model", r.model_id},
                       {"total_requests", r.total_requests},
                       {"per_instance_counts", r.per_instance_counts},
                       {"max_spread", r.max_spread}};
    std::printf("%s\n", out.dump(2).c_str());
  } catch (const sdai::Error &e) {
    std::fprintf(stderr, "sdai-drive: %s\n", e.what());
    return 1;
  }
  return 0;
}
