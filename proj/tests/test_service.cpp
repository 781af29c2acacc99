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

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <set>
#include <thread>

#include <json.hpp>

#include "dprezone/error.hpp"
#include "dprezone/service.hpp"

#include <httplib.h>

namespace dprezone {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "dpr_service_test";
    fs::remove_all(dir_);
    start();
  }
  void TearDown() override {
    service_.reset();
    fs::remove_all(dir_);
  }
  void start() {
    ServiceOptions o;
    o.port = 0;
    o.data_dir = dir_.string();
    service_ = std::make_unique<Service>(o);
    port_ = service_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(30, 0);
  }
  void restart() {
    service_.reset();
    start();
  }

  json post(const std::string& path, const json& body, int expect) {
    auto res = client_->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << res->body;
    return json::parse(res->body);
  }
  json get(const std::string& path, int expect) {
    auto res = client_->Get(path);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect) << res->body;
    return json::parse(res->body);
  }
  std::string synthetic_district() {
    const json h = post("/api/districts",
                        {{"synthetic", {{"rows", 6}, {"cols", 6}, {"schools", 3},
                                        {"segregation_strength", 0.8},
                                        {"seed", 3}}}},
                        201);
    return h.at("district_id");
  }
  json wait_done(const std::string& run_id) {
    std::set<std::string> seen;
    for (int i = 0; i < 600; ++i) {
      json r = get("/api/runs/" + run_id, 200);
      const std::string st = r.at("status");
      seen.insert(st);
      EXPECT_NE(st, "failed") << r.dump();
      if (st == "done" || st == "failed") return r;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    ADD_FAILURE() << "run " << run_id << " did not finish";
    return {};
  }

  fs::path dir_;
  int port_ = 0;
  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Client> client_;
};

const json kRunConfig = {{"epsilons", {2, 4}}, {"replicates", 3}, {"seed", 5},
                         {"bootstrap_resamples", 100}};

TEST_F(ServiceTest, EndToEndRun) {
  const std::string did = synthetic_district();
  const json list = get("/api/districts", 200);
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0]["district_id"], did);
  EXPECT_EQ(list[0]["blocks"], 36);
  EXPECT_TRUE(list[0]["counts"].contains("white"));

  const json rec = post("/api/runs", {{"district_id", did}, {"config", kRunConfig}}, 202);
  EXPECT_EQ(rec["status"], "queued");
  const std::string rid = rec["run_id"];
  const json done = wait_done(rid);
  ASSERT_EQ(done["status"], "done");
  const json& s = done["summary"];
  EXPECT_TRUE(s["current_di"].is_number());
  EXPECT_TRUE(s["nonprivate_di"].is_number());
  EXPECT_EQ(s["private_mean_di"].size(), 2u);
  EXPECT_TRUE(s["private"][0]["di_ci"].contains("lo"));
  EXPECT_FALSE(s["private"][0].contains("replicates"));
  EXPECT_FALSE(done["finished_at"].is_null());

  // Artifacts on disk are exactly the report file set.
  std::set<std::string> on_disk;
  for (const auto& e : fs::directory_iterator(dir_ / "runs" / rid)) {
    on_disk.insert(e.path().filename().string());
  }
  std::set<std::string> listed;
  for (const auto& a : done["artifacts"]) listed.insert(a.get<std::string>());
  EXPECT_EQ(on_disk, listed);

  auto csv = client_->Get("/api/runs/" + rid + "/metrics.csv");
  ASSERT_TRUE(csv);
  EXPECT_EQ(csv->status, 200);
  EXPECT_EQ(csv->body.rfind("scenario,epsilon,replicate,dissimilarity", 0), 0u);

  for (const char* sc : {"current", "nonprivate", "private_mean"}) {
    const json g = get("/api/runs/" + rid + "/assignment.geojson?scenario=" + sc, 200);
    EXPECT_EQ(g["type"], "FeatureCollection");
    ASSERT_EQ(g["features"].size(), 36u);
    EXPECT_TRUE(g["features"][0]["properties"].contains("school"));
  }
  const json pm =
      get("/api/runs/" + rid + "/assignment.geojson?scenario=private_mean&epsilon=4", 200);
  EXPECT_TRUE(pm["features"][0]["properties"].contains("rezone_probability"));
  EXPECT_EQ(pm["epsilon"], 4.0);
  get("/api/runs/" + rid + "/assignment.geojson?scenario=future", 400);
  get("/api/runs/" + rid + "/assignment.geojson?scenario=private_mean&epsilon=3", 400);
}

TEST_F(ServiceTest, ErrorsAreJsonObjects) {
  json e = get("/api/runs/r000000000000", 404);
  EXPECT_EQ(e["code"], "not_found");
  EXPECT_TRUE(e["message"].is_string());
  e = get("/api/nothing", 404);
  EXPECT_EQ(e["code"], "not_found");
  e = post("/api/runs", {{"district_id", "dmissing"}}, 404);
  EXPECT_EQ(e["code"], "not_found");
  const std::string did = synthetic_district();
  e = post("/api/runs", {{"district_id", did}, {"config", {{"epsilons", {-1}}}}}, 400);
  EXPECT_EQ(e["code"], "validation_error");
  e = post("/api/runs", {{"config", {}}}, 400);
  e = post("/api/districts", {{"synthetic", {{"rows", 0}}}}, 400);
  auto res = client_->Post("/api/districts", "not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(ServiceTest, CorsHeaders) {
  auto res = client_->Get("/api/districts");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
  auto opt = client_->Options("/api/runs");
  ASSERT_TRUE(opt);
  EXPECT_EQ(opt->status, 204);
  EXPECT_NE(opt->get_header_value("Access-Control-Allow-Methods").find("POST"),
            std::string::npos);
}

TEST_F(ServiceTest, MultipartUpload) {
  httplib::MultipartFormDataItems items = {
      {"blocks",
       "block_id,block_group_id,lat,lon,n_white,n_black,n_asian,n_native,"
       "n_hispanic,n_total\nb1,g1,33.7,-84.40,9,1,0,0,0,10\n"
       "b2,g1,33.7,-84.39,5,5,0,0,0,10\nb3,g2,33.7,-84.38,1,9,0,0,0,10\n",
       "blocks.csv", "text/csv"},
      {"adjacency", "block_id_a,block_id_b\nb1,b2\nb2,b3\n", "adjacency.csv",
       "text/csv"},
      {"schools", "school_id,name,root_block_id\ns1,West,b1\ns2,East,b3\n",
       "schools.csv", "text/csv"},
      {"assignment", "block_id,school_id\nb1,s1\nb2,s1\nb3,s2\n",
       "assignment.csv", "text/csv"},
      {"name", "tiny", "", ""},
  };
  auto res = client_->Post("/api/districts", items);
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 201) << res->body;
  const json h = json::parse(res->body);
  EXPECT_EQ(h["name"], "tiny");
  EXPECT_EQ(h["blocks"], 3);

  items[3].content = "block_id,school_id\nb1,s1\nb2,s9\nb3,s2\n";
  res = client_->Post("/api/districts", items);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  const json e = json::parse(res->body);
  EXPECT_NE(e["message"].get<std::string>().find("assignment.csv:3"),
            std::string::npos)
      << e.dump();

  items.erase(items.begin() + 1);
  res = client_->Post("/api/districts", items);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(ServiceTest, ConcurrentRunsAreIndependent) {
  const std::string did = synthetic_district();
  std::string a, b;
  std::thread ta([&] {
    httplib::Client c("127.0.0.1", port_);
    auto r = c.Post("/api/runs", json{{"district_id", did}, {"config", kRunConfig}}.dump(),
                    "application/json");
    if (r && r->status == 202) a = json::parse(r->body)["run_id"];
  });
  std::thread tb([&] {
    httplib::Client c("127.0.0.1", port_);
    auto r = c.Post("/api/runs", json{{"district_id", did}, {"config", kRunConfig}}.dump(),
                    "application/json");
    if (r && r->status == 202) b = json::parse(r->body)["run_id"];
  });
  ta.join();
  tb.join();
  ASSERT_FALSE(a.empty());
  ASSERT_FALSE(b.empty());
  EXPECT_NE(a, b);
  const json ra = wait_done(a);
  const json rb = wait_done(b);
  EXPECT_EQ(ra["status"], "done");
  EXPECT_EQ(rb["status"], "done");
  // Same district and config: same numbers.
  EXPECT_EQ(ra["summary"]["private_mean_di"], rb["summary"]["private_mean_di"]);
  EXPECT_EQ(get("/api/runs", 200).size(), 2u);
}

TEST_F(ServiceTest, SurvivesRestart) {
  const std::string did = synthetic_district();
  const json rec = post("/api/runs", {{"district_id", did}, {"config", kRunConfig}}, 202);
  const json before = wait_done(rec["run_id"]);
  restart();
  const json after = get("/api/runs/" + rec["run_id"].get<std::string>(), 200);
  EXPECT_EQ(after["status"], "done");
  EXPECT_EQ(after["summary"], before["summary"]);
  const json list = get("/api/districts", 200);
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0]["district_id"], did);
  // The restored district is usable.
  const json rec2 = post("/api/runs", {{"district_id", did}, {"config", kRunConfig}}, 202);
  const json again = wait_done(rec2["run_id"]);
  EXPECT_EQ(again["summary"]["current_di"], before["summary"]["current_di"]);
}

TEST(BindAddress, Parsing) {
  ServiceOptions o;
  parse_bind_address("0.0.0.0:9000", o);
  EXPECT_EQ(o.host, "0.0.0.0");
  EXPECT_EQ(o.port, 9000);
  parse_bind_address("8081", o);
  EXPECT_EQ(o.host, "0.0.0.0");
  EXPECT_EQ(o.port, 8081);
  parse_bind_address("localhost", o);
  EXPECT_EQ(o.host, "localhost");
  EXPECT_EQ(o.port, 8081);
  EXPECT_THROW(parse_bind_address("h:99999", o), ValidationError);
  EXPECT_THROW(parse_bind_address("h:x1", o), ValidationError);
}

}  // namespace
}  // namespace dprezone
