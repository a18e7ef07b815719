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

// Operator entry point. Talks to the library only through stage.h.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "stage/stage.h"

extern char** environ;

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) {
  g_interrupted = 1;
  stage_request_stop();
}

int report_error(stage_status status) {
  std::fprintf(stderr, "ERROR %s: %s\n", stage_last_error_class(), stage_last_error_detail());
  return static_cast<int>(status);
}

void print_and_free(char* text) {
  if (!text) return;
  std::fputs(text, stdout);
  std::fflush(stdout);
  stage_string_free(text);
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

struct ConfigHandle {
  stage_config* config = nullptr;
  ~ConfigHandle() { stage_config_free(config); }
};

stage_status load_config(const std::string& path, const std::vector<std::string>& overrides,
                         ConfigHandle& handle) {
  auto status = stage_config_load(path.empty() ? nullptr : path.c_str(), environ, &handle.config);
  if (status != STAGE_OK) return status;
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "ERROR UsageError: --set expects key=value, got '%s'\n", kv.c_str());
      return STAGE_USAGE;
    }
    status = stage_config_set(handle.config, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (status != STAGE_OK) return status;
  }
  return STAGE_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bulk dataset staging from replicated data nodes"};
  app.require_subcommand(1);

  std::vector<std::string> manifests;
  std::string config_path;
  std::vector<std::string> overrides;
  bool csv = false;
  std::vector<std::string> nodes;
  std::uint64_t probe_bytes = 10000000;
  std::string fleet_path;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "config file (key = value)");
    sub->add_option("--set", overrides, "override a config key: key=value");
  };

  auto* estimate = app.add_subcommand("estimate", "print dataset size and file counts");
  estimate->add_option("-m,--manifest", manifests, "manifest file")->required();
  add_config(estimate);

  auto* run = app.add_subcommand("run", "stage a dataset; rerun to resume");
  run->alias("resume");
  run->add_option("-m,--manifest", manifests, "manifest file")->required();
  add_config(run);

  auto* status = app.add_subcommand("status", "per-state counts from the journal");
  status->add_option("-m,--manifest", manifests, "manifest file");
  add_config(status);

  auto* report = app.add_subcommand("report", "per-node totals from recorded samples");
  report->add_flag("--csv", csv, "CSV output");
  add_config(report);

  auto* probe = app.add_subcommand("probe", "measure node rates with a probe object");
  probe->add_option("--nodes", nodes, "node base URLs")->required()->delimiter(',');
  probe->add_option("--bytes", probe_bytes, "probe object size");
  add_config(probe);

  auto* simfleet = app.add_subcommand("simfleet", "run the simulated node fleet in the foreground");
  simfleet->add_option("-c,--config", fleet_path, "fleet config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "ERROR UsageError: %s\n", e.what());
    return STAGE_USAGE;
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  if (simfleet->parsed()) {
    stage_fleet* fleet = nullptr;
    const auto rc = stage_fleet_start(fleet_path.c_str(), &fleet);
    if (rc != STAGE_OK) return report_error(rc);
    char* text = nullptr;
    if (stage_fleet_describe(fleet, &text) == STAGE_OK) print_and_free(text);
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    stage_fleet_stop(fleet);
    return 0;
  }

  ConfigHandle config;
  if (const auto rc = load_config(config_path, overrides, config); rc != STAGE_OK) {
    return stage_last_error_class()[0] ? report_error(rc) : static_cast<int>(rc);
  }
  const auto paths = c_strings(manifests);
  char* text = nullptr;
  stage_status rc = STAGE_OK;

  if (estimate->parsed()) {
    rc = stage_estimate(paths.data(), paths.size(), config.config, &text);
  } else if (run->parsed()) {
    rc = stage_run(paths.data(), paths.size(), config.config, &text);
  } else if (status->parsed()) {
    rc = stage_journal_status(paths.data(), paths.size(), config.config, &text);
  } else if (report->parsed()) {
    rc = stage_node_report(config.config, csv ? 1 : 0, &text);
  } else if (probe->parsed()) {
    const auto urls = c_strings(nodes);
    rc = stage_probe(urls.data(), urls.size(), probe_bytes, config.config, &text);
  }
  print_and_free(text);
  if (rc != STAGE_OK) return report_error(rc);
  return 0;
}
