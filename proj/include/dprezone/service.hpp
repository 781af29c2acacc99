// Copyright 2026 The dp-rezone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPREZONE_SERVICE_HPP_
#define DPREZONE_SERVICE_HPP_

#include <memory>
#include <string>

namespace dprezone {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  std::string data_dir = "dp-rezone-data";
  int job_workers = 2;
  std::size_t max_queued_jobs = 64;
};

// Splits "host:port" (or a bare port, or a bare host). Throws
// ValidationError on a malformed port.
void parse_bind_address(const std::string& addr, ServiceOptions& options);

// HTTP job service. Districts live under data_dir/districts/{id}/, run
// records under data_dir/records/{id}.json and run artifacts under
// data_dir/runs/{id}/. Everything is reloaded on construction.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and starts serving on a background thread. Returns the bound port.
  int start();
  // Blocks until stop() is called from another thread.
  void wait();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dprezone

#endif  // DPREZONE_SERVICE_HPP_
