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

#include "dprezone/service.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dprezone/district.hpp"
#include "dprezone/error.hpp"
#include "dprezone/harness.hpp"
#include "dprezone/rng.hpp"

// Last: <resolv.h>, pulled in here, defines a macro that breaks Eigen.
#include <httplib.h>

namespace dprezone {

namespace fs = std::filesystem;
using nlohmann::json;

void parse_bind_address(const std::string& addr, ServiceOptions& options) {
  if (addr.empty()) return;
  std::string host = addr;
  std::string port;
  const auto colon = addr.rfind(':');
  if (colon != std::string::npos) {
    host = addr.substr(0, colon);
    port = addr.substr(colon + 1);
  } else if (addr.find_first_not_of("0123456789") == std::string::npos) {
    host.clear();
    port = addr;
  }
  if (!port.empty()) {
    if (port.find_first_not_of("0123456789") != std::string::npos ||
        port.size() > 5 || std::stoi(port) > 65535) {
      throw ValidationError("malformed port in address '" + addr + "'");
    }
    options.port = std::stoi(port);
  }
  if (!host.empty()) options.host = host;
}

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InternalError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-then-rename so readers never see half a record.
void write_atomic(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InternalError("cannot write " + tmp.string());
    out << text;
    if (!out) throw InternalError("write failed: " + tmp.string());
  }
  fs::rename(tmp, p);
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  send_json(res, status, json{{"code", code}, {"message", message}});
}

enum class RunStatus { kQueued, kRunning, kDone, kFailed };

std::string_view status_name(RunStatus s) {
  switch (s) {
    case RunStatus::kQueued: return "queued";
    case RunStatus::kRunning: return "running";
    case RunStatus::kDone: return "done";
    case RunStatus::kFailed: return "failed";
  }
  return "failed";
}

RunStatus parse_status(const std::string& s) {
  if (s == "queued") return RunStatus::kQueued;
  if (s == "running") return RunStatus::kRunning;
  if (s == "done") return RunStatus::kDone;
  return RunStatus::kFailed;
}

struct RunRecord {
  std::string run_id;
  std::string district_id;
  RunStatus status = RunStatus::kQueued;
  json config;  // as submitted, after validation
  std::string created_at;
  std::string started_at;
  std::string finished_at;
  std::string error;
  std::vector<std::string> artifacts;

  json to_json() const {
    json j{{"run_id", run_id},
           {"district_id", district_id},
           {"status", status_name(status)},
           {"config", config},
           {"created_at", created_at},
           {"started_at", started_at.empty() ? json(nullptr) : json(started_at)},
           {"finished_at",
            finished_at.empty() ? json(nullptr) : json(finished_at)},
           {"error", error.empty() ? json(nullptr) : json(error)},
           {"artifacts", artifacts}};
    return j;
  }

  static RunRecord from_json(const json& j) {
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.district_id = j.at("district_id").get<std::string>();
    r.status = parse_status(j.at("status").get<std::string>());
    r.config = j.at("config");
    r.created_at = j.value("created_at", "");
    if (j.contains("started_at") && j["started_at"].is_string()) {
      r.started_at = j["started_at"];
    }
    if (j.contains("finished_at") && j["finished_at"].is_string()) {
      r.finished_at = j["finished_at"];
    }
    if (j.contains("error") && j["error"].is_string()) r.error = j["error"];
    r.artifacts = j.value("artifacts", std::vector<std::string>{});
    return r;
  }
};

struct StoredDistrict {
  std::string id;
  std::string created_at;
  District district;

  json handle() const {
    json j = district_summary_json(district);
    j["district_id"] = id;
    j["created_at"] = created_at;
    return j;
  }
};

// Everything after "/api/runs/" up to the next slash.
constexpr const char* kIdPattern = "([A-Za-z0-9_-]+)";

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  fs::path root;
  httplib::Server server;
  std::thread listener;
  int bound_port = -1;

  std::mutex mu;
  std::condition_variable cv;
  std::map<std::string, StoredDistrict> districts;
  std::map<std::string, RunRecord> runs;
  std::deque<std::string> queue;
  std::vector<std::thread> workers;
  bool stopping = false;
  std::mt19937_64 id_gen{std::random_device{}()};

  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stopped = false;

  explicit Impl(ServiceOptions o) : options(std::move(o)), root(options.data_dir) {
    if (options.job_workers < 1) throw ValidationError("job_workers must be >= 1");
    fs::create_directories(root / "districts");
    fs::create_directories(root / "records");
    fs::create_directories(root / "runs");
    reload();
    routes();
  }

  fs::path district_dir(const std::string& id) const {
    return root / "districts" / id;
  }
  fs::path record_path(const std::string& id) const {
    return root / "records" / (id + ".json");
  }
  fs::path run_dir(const std::string& id) const { return root / "runs" / id; }

  // Caller holds mu.
  std::string fresh_id(const char* prefix) {
    for (;;) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%012llx", prefix,
                    static_cast<unsigned long long>(id_gen() & 0xffffffffffffULL));
      std::string id = buf;
      if (!districts.count(id) && !runs.count(id) &&
          !fs::exists(district_dir(id)) && !fs::exists(record_path(id))) {
        return id;
      }
    }
  }

  static District load_stored(const fs::path& dir, const std::string& name) {
    DistrictCsvText text;
    text.blocks = read_text(dir / "blocks.csv");
    text.adjacency = read_text(dir / "adjacency.csv");
    text.schools = read_text(dir / "schools.csv");
    text.assignment = read_text(dir / "assignment.csv");
    if (fs::exists(dir / "travel.csv")) text.travel = read_text(dir / "travel.csv");
    if (fs::exists(dir / "ses.csv")) text.ses = read_text(dir / "ses.csv");
    return parse_district(text, name);
  }

  void persist(const RunRecord& r) {
    write_atomic(record_path(r.run_id), r.to_json().dump(2) + "\n");
  }

  void reload() {
    for (const auto& entry : fs::directory_iterator(root / "districts")) {
      if (!entry.is_directory()) continue;
      const fs::path meta = entry.path() / "district.json";
      if (!fs::exists(meta)) continue;
      try {
        const json m = json::parse(read_text(meta));
        StoredDistrict d{m.at("district_id").get<std::string>(),
                         m.value("created_at", ""),
                         load_stored(entry.path(), m.at("name"))};
        districts.emplace(d.id, std::move(d));
      } catch (const std::exception&) {
        // A broken store entry must not take the whole service down.
      }
    }
    std::vector<std::pair<std::string, std::string>> pending;
    for (const auto& entry : fs::directory_iterator(root / "records")) {
      if (entry.path().extension() != ".json") continue;
      try {
        RunRecord r = RunRecord::from_json(json::parse(read_text(entry.path())));
        if (r.status == RunStatus::kRunning) {
          r.status = RunStatus::kFailed;
          r.error = "interrupted by service restart";
          r.finished_at = utc_now();
          persist(r);
        } else if (r.status == RunStatus::kQueued) {
          pending.emplace_back(r.created_at, r.run_id);
        }
        runs.emplace(r.run_id, std::move(r));
      } catch (const std::exception&) {
      }
    }
    std::sort(pending.begin(), pending.end());
    for (const auto& [_, id] : pending) queue.push_back(id);
  }

  json register_district(District d) {
    std::lock_guard lock(mu);
    StoredDistrict stored{fresh_id("d"), utc_now(), std::move(d)};
    const fs::path dir = district_dir(stored.id);
    write_district(stored.district, dir.string());
    write_atomic(dir / "district.json",
                 json{{"district_id", stored.id},
                      {"name", stored.district.name()},
                      {"created_at", stored.created_at}}
                     .dump(2) +
                     "\n");
    json h = stored.handle();
    districts.emplace(stored.id, std::move(stored));
    return h;
  }

  void post_district(const httplib::Request& req, httplib::Response& res) {
    if (req.is_multipart_form_data()) {
      DistrictCsvText text;
      auto need = [&](const char* key) {
        if (!req.has_file(key)) {
          throw ValidationError(std::string("missing upload part '") + key + "'");
        }
        return req.get_file_value(key).content;
      };
      auto maybe = [&](const char* key) {
        return req.has_file(key) ? req.get_file_value(key).content : std::string();
      };
      text.blocks = need("blocks");
      text.adjacency = need("adjacency");
      text.schools = need("schools");
      text.assignment = need("assignment");
      text.travel = maybe("travel");
      text.ses = maybe("ses");
      std::string name = maybe("name");
      if (name.empty()) name = "uploaded";
      send_json(res, 201, register_district(parse_district(text, name)));
      return;
    }
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("request body is not JSON: ") + e.what());
    }
    if (!body.is_object() || !body.contains("synthetic")) {
      throw ValidationError(
          "expected multipart CSV upload or {\"synthetic\": params}");
    }
    send_json(res, 201, register_district(generate_synthetic(
                            synthetic_params_from_json(body.at("synthetic")))));
  }

  void post_run(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      throw ValidationError(std::string("request body is not JSON: ") + e.what());
    }
    if (!body.is_object() || !body.contains("district_id") ||
        !body["district_id"].is_string()) {
      throw ValidationError("district_id (string) is required");
    }
    const json config_json = body.value("config", json::object());
    const ExperimentConfig config = config_from_json(config_json);
    std::unique_lock lock(mu);
    const std::string district_id = body["district_id"];
    if (!districts.count(district_id)) {
      throw NotFoundError("unknown district '" + district_id + "'");
    }
    if (queue.size() >= options.max_queued_jobs) {
      lock.unlock();
      send_error(res, 503, "queue_full", "job queue is full; retry later");
      return;
    }
    RunRecord r;
    r.run_id = fresh_id("r");
    r.district_id = district_id;
    r.config = config_to_json(config);
    r.config["workers"] = config.workers;
    r.created_at = utc_now();
    persist(r);
    runs.emplace(r.run_id, r);
    queue.push_back(r.run_id);
    cv.notify_one();
    lock.unlock();
    send_json(res, 202, r.to_json());
  }

  RunRecord get_record(const std::string& id) {
    std::lock_guard lock(mu);
    auto it = runs.find(id);
    if (it == runs.end()) throw NotFoundError("unknown run '" + id + "'");
    return it->second;
  }

  RunRecord done_record(const std::string& id) {
    RunRecord r = get_record(id);
    if (r.status != RunStatus::kDone) {
      throw ValidationError("run '" + id + "' is " +
                            std::string(status_name(r.status)) + ", not done");
    }
    return r;
  }

  json summary_for(const RunRecord& r) {
    json results = json::parse(read_text(run_dir(r.run_id) / "results.json"));
    json per_eps = json::array();
    for (auto& e : results.at("private")) {
      e.erase("replicates");
      per_eps.push_back(e);
    }
    return json{{"current_di", results["summary"]["current_di"]},
                {"nonprivate_di", results["summary"]["nonprivate_di"]},
                {"private_mean_di", results["summary"]["private_mean_di"]},
                {"nonprivate_reduction", results["summary"]["nonprivate_reduction"]},
                {"current", results["current"]},
                {"nonprivate", results["nonprivate"]},
                {"private", per_eps}};
  }

  void get_geojson(const httplib::Request& req, httplib::Response& res,
                   const std::string& id) {
    const RunRecord r = done_record(id);
    const std::string scenario =
        req.has_param("scenario") ? req.get_param_value("scenario") : "current";
    if (scenario != "current" && scenario != "nonprivate" &&
        scenario != "private_mean") {
      throw ValidationError(
          "scenario must be current, nonprivate or private_mean");
    }
    const fs::path path = run_dir(id) / "assignment.geojson";
    if (!fs::exists(path)) {
      throw NotFoundError("district has no block centroids; no geometry");
    }
    json fc = json::parse(read_text(path));
    std::string eps_label;
    if (scenario == "private_mean") {
      const auto& eps = r.config.at("epsilons");
      eps_label = epsilon_label(eps.at(0).get<double>());
      if (req.has_param("epsilon")) {
        const double want = std::stod(req.get_param_value("epsilon"));
        bool found = false;
        for (const auto& e : eps) found |= e.get<double>() == want;
        if (!found) throw ValidationError("epsilon not in this run's config");
        eps_label = epsilon_label(want);
      }
    }
    for (auto& f : fc["features"]) {
      auto& p = f["properties"];
      if (scenario == "current") {
        p["school"] = p["current_school"];
      } else if (scenario == "nonprivate") {
        p["school"] = p["nonprivate_school"];
      } else {
        p["school"] = p["private_school_eps" + eps_label];
        p["rezone_probability"] = p["rezone_probability_eps" + eps_label];
      }
    }
    fc["scenario"] = scenario;
    if (!eps_label.empty()) fc["epsilon"] = std::stod(eps_label);
    res.status = 200;
    res.set_content(fc.dump(), "application/geo+json; charset=utf-8");
  }

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const NotFoundError& e) {
        send_error(res, 404, "not_found", e.what());
      } catch (const ValidationError& e) {
        send_error(res, 400, "validation_error", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal_error", e.what());
      }
    };
  }

  void routes() {
    server.set_pre_routing_handler(
        [](const httplib::Request& req, httplib::Response& res) {
          res.set_header("Access-Control-Allow-Origin", "*");
          res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
          res.set_header("Access-Control-Allow-Headers", "Content-Type");
          if (req.method == "OPTIONS") {
            res.status = 204;
            return httplib::Server::HandlerResponse::Handled;
          }
          return httplib::Server::HandlerResponse::Unhandled;
        });

    server.Post("/api/districts",
                guarded([this](const auto& req, auto& res) {
                  post_district(req, res);
                }));
    server.Get("/api/districts", guarded([this](const auto&, auto& res) {
                 std::lock_guard lock(mu);
                 json out = json::array();
                 for (const auto& [_, d] : districts) out.push_back(d.handle());
                 send_json(res, 200, out);
               }));
    server.Get(std::string("/api/districts/") + kIdPattern,
               guarded([this](const auto& req, auto& res) {
                 std::lock_guard lock(mu);
                 auto it = districts.find(req.matches[1]);
                 if (it == districts.end()) {
                   throw NotFoundError("unknown district '" +
                                       std::string(req.matches[1]) + "'");
                 }
                 send_json(res, 200, it->second.handle());
               }));
    server.Post("/api/runs", guarded([this](const auto& req, auto& res) {
                  post_run(req, res);
                }));
    server.Get("/api/runs", guarded([this](const auto&, auto& res) {
                 std::lock_guard lock(mu);
                 json out = json::array();
                 for (const auto& [_, r] : runs) out.push_back(r.to_json());
                 send_json(res, 200, out);
               }));
    server.Get(std::string("/api/runs/") + kIdPattern,
               guarded([this](const auto& req, auto& res) {
                 const RunRecord r = get_record(req.matches[1]);
                 json j = r.to_json();
                 if (r.status == RunStatus::kDone) j["summary"] = summary_for(r);
                 send_json(res, 200, j);
               }));
    server.Get(std::string("/api/runs/") + kIdPattern + "/assignment.geojson",
               guarded([this](const auto& req, auto& res) {
                 get_geojson(req, res, req.matches[1]);
               }));
    server.Get(std::string("/api/runs/") + kIdPattern + "/metrics.csv",
               guarded([this](const auto& req, auto& res) {
                 const RunRecord r = done_record(req.matches[1]);
                 res.status = 200;
                 res.set_content(read_text(run_dir(r.run_id) / "metrics.csv"),
                                 "text/csv; charset=utf-8");
               }));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        const bool client = res.status >= 400 && res.status < 500;
        send_error(res, res.status, client ? "not_found" : "internal_error",
                   client ? "no such endpoint" : "server error");
      }
    });
  }

  void execute(const std::string& id) {
    RunRecord r;
    District district;
    {
      std::lock_guard lock(mu);
      auto& rec = runs.at(id);
      rec.status = RunStatus::kRunning;
      rec.started_at = utc_now();
      persist(rec);
      r = rec;
      district = districts.at(rec.district_id).district;
    }
    try {
      const ExperimentConfig config = config_from_json(r.config);
      const ExperimentResult result = run_experiment(district, config);
      r.artifacts = emit_report(result, district, run_dir(id).string());
      r.status = RunStatus::kDone;
    } catch (const std::exception& e) {
      r.status = RunStatus::kFailed;
      r.error = e.what();
    }
    r.finished_at = utc_now();
    std::lock_guard lock(mu);
    runs[id] = r;
    persist(r);
  }

  void worker_loop() {
    for (;;) {
      std::string id;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        id = queue.front();
        queue.pop_front();
      }
      execute(id);
    }
  }
};

Service::Service(ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() { stop(); }

int Service::start() {
  Impl& m = *impl_;
  if (m.bound_port >= 0) return m.bound_port;
  if (m.options.port == 0) {
    m.bound_port = m.server.bind_to_any_port(m.options.host);
  } else if (m.server.bind_to_port(m.options.host, m.options.port)) {
    m.bound_port = m.options.port;
  }
  if (m.bound_port < 0) {
    throw InternalError("cannot bind " + m.options.host + ":" +
                        std::to_string(m.options.port));
  }
  for (int i = 0; i < m.options.job_workers; ++i) {
    m.workers.emplace_back([&m] { m.worker_loop(); });
  }
  m.listener = std::thread([&m] { m.server.listen_after_bind(); });
  m.server.wait_until_ready();
  return m.bound_port;
}

void Service::wait() {
  std::unique_lock lock(impl_->stop_mu);
  impl_->stop_cv.wait(lock, [&] { return impl_->stopped; });
}

void Service::stop() {
  Impl& m = *impl_;
  {
    std::lock_guard lock(m.stop_mu);
    if (m.stopped) return;
    m.stopped = true;
  }
  m.server.stop();
  if (m.listener.joinable()) m.listener.join();
  {
    std::lock_guard lock(m.mu);
    m.stopping = true;
  }
  m.cv.notify_all();
  for (auto& t : m.workers) {
    if (t.joinable()) t.join();
  }
  m.stop_cv.notify_all();
}

int Service::port() const { return impl_->bound_port; }

}  // namespace dprezone
