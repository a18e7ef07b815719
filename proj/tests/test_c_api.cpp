/*
 * Copyright 2026 The stage authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Exercises the shared library through its C interface only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <string>

#include "doctest.h"
#include "stage/stage.h"
#include "support.hpp"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  stage_string_free(s);
  return out;
}

struct Config {
  stage_config* c = nullptr;
  ~Config() { stage_config_free(c); }
};

}  // namespace

TEST_CASE("config handle") {
  Config cfg;
  REQUIRE(stage_config_load(nullptr, nullptr, &cfg.c) == STAGE_OK);
  CHECK(stage_config_set(cfg.c, "global_limit", "16") == STAGE_OK);
  CHECK(stage_config_set(cfg.c, "per_node_limit", "20") == STAGE_USAGE);
  CHECK(std::string(stage_last_error_class()) == "ConfigError");
  CHECK(stage_config_set(cfg.c, "bogus", "1") == STAGE_USAGE);
  char* text = nullptr;
  REQUIRE(stage_config_render(cfg.c, &text) == STAGE_OK);
  CHECK(take(text).find("global_limit = 16\n") != std::string::npos);

  const char* envp[] = {"STAGE_PER_NODE_LIMIT=2", nullptr};
  Config env_cfg;
  REQUIRE(stage_config_load(nullptr, envp, &env_cfg.c) == STAGE_OK);
  REQUIRE(stage_config_render(env_cfg.c, &text) == STAGE_OK);
  CHECK(take(text).find("per_node_limit = 2\n") != std::string::npos);

  Config missing;
  CHECK(stage_config_load("/nonexistent/stage.conf", nullptr, &missing.c) == STAGE_USAGE);
}

TEST_CASE("errors map to exit codes") {
  stage::testing::TempDir dir;
  stage::testing::write_file(dir / "bad.txt", "dataset d\nfile 'a' 'b'\n");
  const std::string bad = (dir / "bad.txt").string();
  const char* paths[] = {bad.c_str()};
  char* out = nullptr;
  CHECK(stage_estimate(paths, 1, nullptr, &out) == STAGE_USAGE);
  CHECK(std::string(stage_last_error_class()) == "ParseError");
  CHECK(std::string(stage_last_error_detail()).find("line 2") != std::string::npos);
  CHECK(stage_estimate(paths, 0, nullptr, &out) == STAGE_USAGE);
}

TEST_CASE("fleet, estimate, run, resume, status, report") {
  stage::testing::TempDir dir;
  stage::testing::write_file(dir / "fleet.conf",
                             "[node a]\ncontent_seed = 3\nfile = d/x.nc 4000\nfile = y.nc 100\n");
  stage_fleet* fleet = nullptr;
  REQUIRE(stage_fleet_start((dir / "fleet.conf").c_str(), &fleet) == STAGE_OK);
  char* text = nullptr;
  REQUIRE(stage_fleet_describe(fleet, &text) == STAGE_OK);
  const auto described = take(text);
  const auto base = described.substr(described.find("http://"));
  const auto url = base.substr(0, base.find('\n'));

  // Digests of the seed-3 content, from tools/content_oracle.py.
  const std::string manifest =
      "dataset d\n"
      "file 'd/x.nc' '" + url + "/d/x.nc' 'md5' '05901fa7a6f23a05ed84b050ef87ec87' 4000\n"
      "file 'y.nc' '" + url + "/y.nc' 'md5' '2c601b321b234a5c1fe0f64ccfb2796e'\n";
  stage::testing::write_file(dir / "m.txt", manifest);
  const std::string mpath = (dir / "m.txt").string();
  const char* paths[] = {mpath.c_str()};

  Config cfg;
  REQUIRE(stage_config_load(nullptr, nullptr, &cfg.c) == STAGE_OK);
  REQUIRE(stage_config_set(cfg.c, "staging_dir", (dir / "staging").c_str()) == STAGE_OK);

  REQUIRE(stage_estimate(paths, 1, cfg.c, &text) == STAGE_OK);
  const auto estimate = take(text);
  CHECK(estimate.find("files: 2\n") != std::string::npos);
  CHECK(estimate.find("total bytes: 4100 ") != std::string::npos);

  REQUIRE(stage_config_set(cfg.c, "quota_bytes", "4099") == STAGE_OK);
  CHECK(stage_run(paths, 1, cfg.c, &text) == STAGE_QUOTA);
  take(text);
  CHECK(std::string(stage_last_error_class()) == "QuotaExceeded");
  CHECK_FALSE(std::filesystem::exists(dir / "staging/d/x.nc"));
  REQUIRE(stage_config_set(cfg.c, "quota_bytes", "none") == STAGE_OK);

  CHECK(stage_run(paths, 1, cfg.c, &text) == STAGE_OK);
  CHECK(take(text).find("\n4100 bytes transferred\n") != std::string::npos);
  CHECK(stage_run(paths, 1, cfg.c, &text) == STAGE_OK);
  CHECK(take(text).find("\n0 bytes transferred\n") != std::string::npos);

  REQUIRE(stage_journal_status(paths, 1, cfg.c, &text) == STAGE_OK);
  const auto status = take(text);
  CHECK(status.find("Done 2\n") != std::string::npos);
  CHECK(status.find("Pending 0\n") != std::string::npos);

  REQUIRE(stage_node_report(cfg.c, 1, &text) == STAGE_OK);
  const auto csv = take(text);
  CHECK(csv.find(url.substr(7) + ",4100,") != std::string::npos);

  const char* nodes[] = {url.c_str(), "http://127.0.0.1:1"};
  CHECK(stage_probe(nodes, 2, 100000, cfg.c, &text) == STAGE_UNRESOLVED);
  CHECK(take(text).find(url.substr(7) + ",100000,") != std::string::npos);
  CHECK(std::string(stage_last_error_class()) == "ProbeFailed");

  stage_fleet_stop(fleet);
}
