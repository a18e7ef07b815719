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

#include "stage/stage.h"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "stage/config.hpp"
#include "stage/credential.hpp"
#include "stage/error.hpp"
#include "stage/http_transport.hpp"
#include "stage/journal.hpp"
#include "stage/manifest.hpp"
#include "stage/metrics.hpp"
#include "stage/profiles.hpp"
#include "stage/scheduler.hpp"
#include "stage/simnode.hpp"

struct stage_config {
  stage::SchedulerConfig config;
};

struct stage_fleet {
  std::unique_ptr<stage::SimFleet> fleet;
};

namespace {

thread_local std::string g_error_class;
thread_local std::string g_error_detail;
std::atomic<bool> g_stop{false};

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void clear_error() {
  g_error_class.clear();
  g_error_detail.clear();
}

stage_status fail(std::string_view cls, const std::string& detail, int code) {
  g_error_class = cls;
  g_error_detail = detail;
  return static_cast<stage_status>(code);
}

// Runs fn, translating exceptions into the thread's last error.
template <typename Fn>
stage_status guarded(Fn&& fn) {
  clear_error();
  try {
    return fn();
  } catch (const stage::ParseError& e) {
    std::string detail = e.line() > 0 ? "line " + std::to_string(e.line()) + ": " + e.reason()
                                      : e.reason();
    return fail(stage::error_class_name(e.error_class()), detail, 2);
  } catch (const stage::Error& e) {
    return fail(stage::error_class_name(e.error_class()), e.what(),
                stage::exit_code_for(e.error_class()));
  } catch (const std::bad_alloc&) {
    return fail("Internal", "out of memory", 1);
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), 1);
  }
}

std::vector<stage::Manifest> load_manifests(const char* const* paths, size_t count) {
  if (count == 0) throw stage::Error(stage::ErrorClass::Usage, "no manifest given");
  std::vector<stage::Manifest> out;
  for (size_t i = 0; i < count; ++i) {
    try {
      out.push_back(stage::load_manifest(paths[i]));
    } catch (const stage::ParseError& e) {
      std::string where = std::string(paths[i]) + ": ";
      if (e.line() > 0) where += "line " + std::to_string(e.line()) + ": ";
      throw stage::ParseError(0, where + e.reason());
    }
  }
  return out;
}

const stage::SchedulerConfig& config_or_default(const stage_config* c) {
  static const stage::SchedulerConfig defaults;
  return c ? c->config : defaults;
}

}  // namespace

extern "C" {

const char* stage_last_error_class(void) { return g_error_class.c_str(); }
const char* stage_last_error_detail(void) { return g_error_detail.c_str(); }

void stage_string_free(char* s) { std::free(s); }

stage_status stage_config_load(const char* path, const char* const* envp, stage_config** out) {
  return guarded([&] {
    if (!out) throw stage::Error(stage::ErrorClass::Usage, "null output");
    const auto env = envp ? stage::stage_environment(envp) : std::map<std::string, std::string>{};
    auto c = std::make_unique<stage_config>();
    c->config = path ? stage::load_config(path, env) : stage::parse_config("", env);
    *out = c.release();
    return STAGE_OK;
  });
}

stage_status stage_config_set(stage_config* config, const char* key, const char* value) {
  return guarded([&] {
    if (!config || !key || !value) throw stage::Error(stage::ErrorClass::Usage, "null argument");
    auto updated = config->config;
    updated.set(key, value);
    updated.validate();
    config->config = std::move(updated);
    return STAGE_OK;
  });
}

stage_status stage_config_render(const stage_config* config, char** out) {
  return guarded([&] {
    *out = dup(stage::render_config(config_or_default(config)));
    return STAGE_OK;
  });
}

void stage_config_free(stage_config* config) { delete config; }

stage_status stage_estimate(const char* const* manifest_paths, size_t count,
                            const stage_config* config, char** out) {
  return guarded([&] {
    const auto& cfg = config_or_default(config);
    const auto manifests = load_manifests(manifest_paths, count);
    stage::group_replicas(manifests);
    stage::LocalCredentialProvider provider(stage::system_clock());
    const auto cred = provider.issue(cfg.credential.lifetime_s);
    stage::HttpConnection conn;
    stage::ConnectionSizeProber prober(conn, stage::token_header_value(cred));
    const auto summary = stage::estimate_size(manifests, prober);
    std::string text = stage::render_summary(summary);
    *out = dup(text);
    return STAGE_OK;
  });
}

stage_status stage_run(const char* const* manifest_paths, size_t count,
                       const stage_config* config, char** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    const auto& cfg = config_or_default(config);
    const auto manifests = load_manifests(manifest_paths, count);
    g_stop = false;
    stage::StageEnvironment env;
    env.stop = &g_stop;
    const auto report = stage::stage_dataset(manifests, cfg, env);
    if (out) *out = dup(stage::render_run_report(report));
    if (report.aborted) {
      return fail(stage::error_class_name(*report.aborted), report.abort_detail,
                  stage::exit_code_for(*report.aborted));
    }
    if (!report.complete()) {
      std::ostringstream detail;
      detail << report.persistent_mismatch << " persistent checksum mismatch, "
             << report.failed_transport << " failed transport, "
             << report.relocation_needed.size() << " relocation needed, " << report.pending
             << " pending";
      return fail("UnresolvedFailures", detail.str(), STAGE_UNRESOLVED);
    }
    return STAGE_OK;
  });
}

void stage_request_stop(void) { g_stop = true; }

stage_status stage_journal_status(const char* const* manifest_paths, size_t count,
                                  const stage_config* config, char** out) {
  return guarded([&] {
    const auto& cfg = config_or_default(config);
    stage::StatusJournal journal(stage::journal_path(cfg));
    auto counts = journal.state_counts();
    std::ostringstream text;
    text << "journal " << journal.file().string() << "\n";
    if (count > 0) {
      const auto manifests = load_manifests(manifest_paths, count);
      std::size_t done = 0;
      std::size_t mismatch = 0;
      std::size_t pending = 0;
      for (const auto& rs : stage::group_replicas(manifests)) {
        const auto rec = journal.lookup(rs.relative_path);
        if (stage::is_done(journal, rs.relative_path, rs.checksum_type, rs.checksum_hex)) {
          ++done;
        } else if (rec && rec->state == stage::TransferState::PersistentChecksumMismatch) {
          ++mismatch;
        } else {
          ++pending;
        }
      }
      text << "Done " << done << "\n";
      text << "PersistentChecksumMismatch " << mismatch << "\n";
      text << "Pending " << pending << "\n";
    } else {
      text << "Done " << counts[stage::TransferState::Done] << "\n";
      text << "PersistentChecksumMismatch "
           << counts[stage::TransferState::PersistentChecksumMismatch] << "\n";
    }
    if (journal.discarded_lines() > 0) {
      text << "discarded " << journal.discarded_lines() << " malformed line(s)\n";
    }
    *out = dup(text.str());
    return STAGE_OK;
  });
}

stage_status stage_node_report(const stage_config* config, int csv, char** out) {
  return guarded([&] {
    stage::MetricsRecorder metrics;
    metrics.load_csv(stage::samples_path(config_or_default(config)));
    const auto report = stage::render_node_report(metrics.aggregates());
    *out = dup(csv ? report.csv : report.text);
    return STAGE_OK;
  });
}

stage_status stage_probe(const char* const* node_urls, size_t count, uint64_t bytes,
                         const stage_config* config, char** out) {
  return guarded([&] {
    const auto& cfg = config_or_default(config);
    if (count == 0) throw stage::Error(stage::ErrorClass::Usage, "no nodes given");
    std::vector<std::string> urls(node_urls, node_urls + count);
    const auto clock = stage::system_clock();
    stage::LocalCredentialProvider provider(clock);
    const auto cred = provider.issue(cfg.credential.lifetime_s);
    stage::HttpConnection conn;
    stage::MetricsRecorder history;
    history.load_csv(stage::samples_path(cfg));
    stage::NodeProfiles profiles;
    for (const auto& s : history.samples()) {
      profiles.observe(s.node_id, s.bytes, s.transfer_seconds, cfg.ewma_alpha);
    }
    stage::MetricsRecorder metrics;
    const auto results =
        stage::probe(urls, bytes, cred, conn, metrics, profiles, cfg.ewma_alpha, *clock);
    const auto samples = metrics.samples();
    if (!samples.empty()) stage::MetricsRecorder::append_csv(stage::samples_path(cfg), samples);
    *out = dup(stage::render_probe_csv(results));
    for (const auto& r : results) {
      if (!r.ok) return fail("ProbeFailed", r.node_id + ": " + r.error, STAGE_UNRESOLVED);
    }
    return STAGE_OK;
  });
}

stage_status stage_fleet_start(const char* fleet_config_path, stage_fleet** out) {
  return guarded([&] {
    if (!fleet_config_path || !out) {
      throw stage::Error(stage::ErrorClass::Usage, "null argument");
    }
    std::ifstream in(fleet_config_path);
    if (!in) {
      throw stage::Error(stage::ErrorClass::Config,
                         std::string("cannot read ") + fleet_config_path);
    }
    std::stringstream text;
    text << in.rdbuf();
    auto f = std::make_unique<stage_fleet>();
    f->fleet = stage::SimFleet::start(stage::parse_fleet_config(text.str()));
    *out = f.release();
    return STAGE_OK;
  });
}

stage_status stage_fleet_describe(const stage_fleet* fleet, char** out) {
  return guarded([&] {
    if (!fleet) throw stage::Error(stage::ErrorClass::Usage, "null fleet");
    *out = dup(fleet->fleet->describe());
    return STAGE_OK;
  });
}

void stage_fleet_stop(stage_fleet* fleet) {
  if (!fleet) return;
  fleet->fleet->stop();
  delete fleet;
}

}  // extern "C"
