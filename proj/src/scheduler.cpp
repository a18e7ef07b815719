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

#include "stage/scheduler.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "stage/http_transport.hpp"

namespace stage {

std::string make_run_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  const auto a = rng();
  const auto b = rng();
  char buf[40];
  std::snprintf(buf, sizeof buf, "%08llx-%04llx-4%03llx-%04llx-%012llx",
                static_cast<unsigned long long>(a >> 32),
                static_cast<unsigned long long>((a >> 16) & 0xffff),
                static_cast<unsigned long long>(a & 0xfff),
                static_cast<unsigned long long>(((b >> 48) & 0x3fff) | 0x8000),
                static_cast<unsigned long long>(b & 0xffffffffffffULL));
  return buf;
}

void rebuild_node_queues(TransferPlan& plan) {
  plan.node_queues.clear();
  for (std::size_t i = 0; i < plan.tasks.size(); ++i) {
    if (!plan.tasks[i].finished) plan.node_queues[plan.tasks[i].chosen.node_id].push_back(i);
  }
}

Location select_replica(const ReplicaSet& rs, const NodeProfiles& profiles,
                        double unknown_rate_prior, const std::set<std::string>& exclude_urls) {
  const Location* best = nullptr;
  double best_rate = 0;
  for (const auto& loc : rs.locations) {
    if (exclude_urls.count(loc.url) || !profiles.available(loc.node_id)) continue;
    const double rate = profiles.effective_rate(loc.node_id, unknown_rate_prior);
    if (!best || rate > best_rate || (rate == best_rate && loc.node_id < best->node_id)) {
      best = &loc;
      best_rate = rate;
    }
  }
  if (!best) {
    throw Error(ErrorClass::NoAvailableReplica, "no available replica for " + rs.relative_path);
  }
  return *best;
}

TransferPlan build_plan(std::span<const ReplicaSet> replica_sets, const SchedulerConfig& config,
                        const DatasetSummary& summary, const NodeProfiles& profiles,
                        TimePoint now) {
  if (config.quota_bytes && summary.total_bytes > *config.quota_bytes) {
    if (!config.quota_override) throw QuotaExceeded(summary.total_bytes, *config.quota_bytes);
  }
  TransferPlan plan;
  plan.run_id = make_run_id();
  plan.created_at = now;
  plan.lower_bound = summary.lower_bound;
  if (config.quota_bytes && summary.total_bytes > *config.quota_bytes) {
    plan.warnings.push_back("quota override: dataset needs " +
                            std::to_string(summary.total_bytes) + " bytes, quota is " +
                            std::to_string(*config.quota_bytes));
  }
  if (summary.lower_bound) {
    plan.warnings.push_back(std::to_string(summary.unknown_size_count) +
                            " file size(s) unknown; total_bytes is a lower bound");
  }
  for (const auto& rs : replica_sets) {
    PlannedTask pt;
    pt.replicas = rs;
    pt.task.entry.relative_path = rs.relative_path;
    pt.task.entry.checksum_type = rs.checksum_type;
    pt.task.entry.checksum_hex = rs.checksum_hex;
    pt.task.entry.size_bytes = rs.size_bytes;
    try {
      pt.chosen = select_replica(rs, profiles, config.unknown_rate_prior);
      pt.task.entry.url = pt.chosen.url;
    } catch (const Error&) {
      pt.chosen = rs.locations.front();
      pt.task.entry.url = pt.chosen.url;
      pt.finished = true;
      pt.relocation_needed = true;
    }
    plan.tasks.push_back(std::move(pt));
  }
  rebuild_node_queues(plan);
  return plan;
}

namespace {

void retarget(PlannedTask& pt, const Location& loc) {
  pt.chosen = loc;
  pt.task.entry.url = loc.url;
  pt.task.state = TransferState::Pending;
  pt.task.transport_attempts = 0;
  pt.task.checksum_attempts = 0;
  pt.task.error = TaskError::None;
  pt.task.relocated_to.reset();
}

std::optional<std::string> relocation_prefix_from(const std::optional<std::string>& hint,
                                                  const std::string& path) {
  if (!hint) return std::nullopt;
  if (hint->size() > path.size() && hint->ends_with(path)) {
    return hint->substr(0, hint->size() - path.size());
  }
  return std::nullopt;
}

// Alternate replica, else relocation prefix, else RelocationNeeded.
void remap_task(PlannedTask& pt, const NodeProfiles& profiles,
                const std::optional<std::string>& relocation_prefix,
                const SchedulerConfig& config, NodeGoneOutcome& out) {
  const auto from = pt.chosen.url;
  try {
    const auto alt = select_replica(pt.replicas, profiles, config.unknown_rate_prior,
                                    pt.tried_urls);
    retarget(pt, alt);
    out.remaps.push_back({pt.replicas.relative_path, from, alt.url, "replica"});
    return;
  } catch (const Error&) {
  }
  if (relocation_prefix) {
    Location loc{*relocation_prefix + pt.replicas.relative_path, ""};
    loc.node_id = node_id_of(loc.url);
    const bool known = std::any_of(pt.replicas.locations.begin(), pt.replicas.locations.end(),
                                   [&](const Location& l) { return l.url == loc.url; });
    if (!known) pt.replicas.locations.push_back(loc);
    if (!pt.tried_urls.count(loc.url) && profiles.available(loc.node_id)) {
      retarget(pt, loc);
      out.remaps.push_back({pt.replicas.relative_path, from, loc.url, "relocation"});
      return;
    }
  }
  pt.finished = true;
  pt.relocation_needed = true;
  out.relocation_needed.push_back(pt.replicas.relative_path);
}

}  // namespace

NodeGoneOutcome handle_node_gone(TransferPlan& plan, NodeProfiles& profiles,
                                 const std::string& node_id,
                                 const std::optional<std::string>& relocation_prefix,
                                 const SchedulerConfig& config) {
  profiles.mark_unavailable(node_id);
  NodeGoneOutcome out;
  for (auto& pt : plan.tasks) {
    if (pt.finished || pt.in_flight || pt.chosen.node_id != node_id) continue;
    pt.tried_urls.insert(pt.chosen.url);
    remap_task(pt, profiles, relocation_prefix, config, out);
  }
  rebuild_node_queues(plan);
  return out;
}

bool RunReport::complete() const {
  return !aborted && pending == 0 && persistent_mismatch == 0 && failed_transport == 0 &&
         relocation_needed.empty();
}

std::string render_run_report(const RunReport& r) {
  std::ostringstream out;
  char buf[128];
  out << "run " << r.run_id << "\n";
  out << "files planned " << r.planned << ", already done " << r.already_done << "\n";
  out << "state Done " << r.done << "\n";
  out << "state PersistentChecksumMismatch " << r.persistent_mismatch << "\n";
  out << "state FailedTransport " << r.failed_transport << "\n";
  out << "state RelocationNeeded " << r.relocation_needed.size() << "\n";
  out << "state Pending " << r.pending << "\n";
  out << r.bytes_transferred << " bytes transferred\n";
  out << "downloads " << r.downloads << "\n";
  out << "faults " << r.faults << "\n";
  out << "credential refreshes " << r.credential_refreshes << "\n";
  out << "credential expired failures " << r.credential_expired_failures << "\n";
  std::snprintf(buf, sizeof buf, "wall seconds %.3f\n", r.wall_seconds);
  out << buf;
  std::snprintf(buf, sizeof buf, "summed transfer seconds %.3f\n", r.transfer_seconds_sum);
  out << buf;
  out << "peak in flight " << r.peak_inflight << "\n";
  for (const auto& [node, totals] : r.per_node) {
    std::snprintf(buf, sizeof buf, " bytes %llu files %zu transfer_seconds %.3f\n",
                  static_cast<unsigned long long>(totals.bytes), totals.files,
                  totals.transfer_seconds);
    out << "node " << node << buf;
  }
  for (const auto& m : r.remaps) {
    out << "remap '" << m.path << "' " << m.from_url << " -> " << m.to_url << " (" << m.reason
        << ")\n";
  }
  for (const auto& b : r.bad_sources) {
    out << "bad source '" << b.path << "' " << b.url << " (completed from " << b.good_url
        << ")\n";
  }
  for (const auto& p : r.relocation_needed) out << "relocation needed '" << p << "'\n";
  for (const auto& a : r.alerts) out << "alert " << a << "\n";
  for (const auto& w : r.warnings) out << "warning " << w << "\n";
  if (r.aborted) {
    out << "aborted " << error_class_name(*r.aborted) << ": " << r.abort_detail << "\n";
  }
  out << "\n" << render_run_summary(r.summary);
  return out.str();
}

namespace {

bool startable(const PlannedTask& pt) {
  const auto s = pt.task.state;
  return !pt.finished && !pt.in_flight &&
         (s == TransferState::Pending || s == TransferState::FailedTransport ||
          s == TransferState::FailedChecksum);
}

void add_dirs(const std::string& path, std::set<std::string>& dirs) {
  for (auto slash = path.find('/'); slash != std::string::npos;
       slash = path.find('/', slash + 1)) {
    dirs.insert(path.substr(0, slash));
  }
}

}  // namespace

RunReport run(TransferPlan& plan, DataNodeConnection& conn, CredentialManager& credentials,
              StatusJournal& journal, MetricsRecorder& metrics, NodeProfiles& profiles,
              const SchedulerConfig& config, const RunOptions& options) {
  const auto clock = options.clock ? options.clock : system_clock();
  const auto wall_start = std::chrono::steady_clock::now();
  const auto request_time = clock->now();
  const int refreshes_before = credentials.refresh_count();

  RunReport report;
  report.run_id = plan.run_id;
  report.planned = plan.tasks.size();
  report.lower_bound = plan.lower_bound;
  report.warnings = plan.warnings;

  std::atomic<bool> halt{false};
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::pair<std::size_t, FileTask>> results;
  std::map<std::size_t, std::thread> workers;
  std::map<std::string, int> node_inflight;
  int inflight = 0;
  std::set<std::string> done_dirs;
  std::uint64_t done_files = 0;

  auto abort_with = [&](ErrorClass cls, const std::string& detail) {
    if (!report.aborted) {
      report.aborted = cls;
      report.abort_detail = detail;
    }
    halt = true;
  };

  std::shared_ptr<const Credential> cred;
  try {
    cred = credentials.ensure_fresh(clock->now());
  } catch (const Error& e) {
    abort_with(ErrorClass::RefreshFailed, e.what());
  }

  TransferOptions topts;
  topts.verify_mode = config.verify_mode;
  topts.clock = clock;
  topts.stop = &halt;

  auto handle_result = [&](std::size_t idx, FileTask t) {
    auto& pt = plan.tasks[idx];
    const FileTask before = pt.task;
    pt.in_flight = false;
    --inflight;
    --node_inflight[pt.chosen.node_id];

    report.bytes_transferred += t.wire_bytes - before.wire_bytes;
    report.downloads += static_cast<std::uint64_t>(t.downloads - before.downloads);
    report.faults += static_cast<std::uint64_t>(
        std::max(0, t.transport_attempts - before.transport_attempts) +
        std::max(0, t.checksum_attempts - before.checksum_attempts));
    pt.task = t;
    const auto& path = pt.replicas.relative_path;
    const auto now = clock->now();
    if (t.error == TaskError::CredentialExpired) {
      ++report.credential_expired_failures;
      if (!report.first_credential_failure) report.first_credential_failure = now;
    }

    switch (t.state) {
      case TransferState::Done: {
        pt.finished = true;
        try {
          journal.record(t, now);
        } catch (const Error& e) {
          abort_with(ErrorClass::JournalWrite, e.what());
        }
        const auto& node = pt.chosen.node_id;
        metrics.record({node, t.bytes_transferred, t.transfer_seconds, now});
        profiles.observe(node, t.bytes_transferred, t.transfer_seconds, config.ewma_alpha);
        auto& totals = report.per_node[node];
        totals.bytes += t.bytes_transferred;
        totals.transfer_seconds += t.transfer_seconds;
        ++totals.files;
        report.transfer_seconds_sum += t.transfer_seconds;
        report.done_bytes += t.bytes_transferred;
        ++done_files;
        add_dirs(path, done_dirs);
        for (const auto& bad : pt.bad_sources) {
          report.bad_sources.push_back({path, bad, pt.chosen.url});
        }
        return;
      }
      case TransferState::PersistentChecksumMismatch: {
        pt.tried_urls.insert(pt.chosen.url);
        pt.bad_sources.push_back(pt.chosen.url);
        try {
          const auto alt = select_replica(pt.replicas, profiles, config.unknown_rate_prior,
                                          pt.tried_urls);
          report.remaps.push_back({path, pt.chosen.url, alt.url, "checksum"});
          retarget(pt, alt);
          return;
        } catch (const Error&) {
        }
        pt.finished = true;
        std::string tried;
        for (const auto& u : pt.bad_sources) tried += " " + u;
        report.alerts.push_back("PersistentChecksumMismatch '" + path + "' " +
                                to_string(pt.replicas.checksum_type).data() + ":" +
                                pt.replicas.checksum_hex + " served wrong data from:" + tried);
        try {
          journal.record(t, now);
        } catch (const Error& e) {
          abort_with(ErrorClass::JournalWrite, e.what());
        }
        return;
      }
      case TransferState::Relocated: {
        ++report.faults;
        const auto node = pt.chosen.node_id;
        const auto prefix = relocation_prefix_from(t.relocated_to, path);
        pt.tried_urls.insert(pt.chosen.url);
        NodeGoneOutcome out;
        profiles.mark_unavailable(node);
        remap_task(pt, profiles, prefix, config, out);
        auto rest = handle_node_gone(plan, profiles, node, prefix, config);
        for (auto* o : {&out, &rest}) {
          report.remaps.insert(report.remaps.end(), o->remaps.begin(), o->remaps.end());
          report.relocation_needed.insert(report.relocation_needed.end(),
                                          o->relocation_needed.begin(),
                                          o->relocation_needed.end());
        }
        return;
      }
      default: break;
    }

    // FailedTransport / FailedChecksum returned to the coordinator.
    switch (t.error) {
      case TaskError::StorageFull:
        abort_with(ErrorClass::StorageFull, t.last_error.value_or("storage full"));
        return;
      case TaskError::CredentialExpired:
        if (t.transport_attempts > config.retry.max_transport_retries) pt.finished = true;
        return;
      case TaskError::NotFound:
      case TaskError::Transport: {
        // Below the cap only when interrupted by a stop request.
        if (t.error == TaskError::Transport &&
            t.transport_attempts <= config.retry.max_transport_retries) {
          return;
        }
        pt.tried_urls.insert(pt.chosen.url);
        try {
          const auto alt = select_replica(pt.replicas, profiles, config.unknown_rate_prior,
                                          pt.tried_urls);
          report.remaps.push_back({path, pt.chosen.url, alt.url, "transport"});
          retarget(pt, alt);
        } catch (const Error&) {
          pt.finished = true;
        }
        return;
      }
      default:
        // Returned early because of a stop request; stays pending.
        return;
    }
  };

  while (true) {
    if (options.stop && options.stop->load()) halt = true;

    if (!halt) {
      std::vector<std::size_t> wave;
      int slots = config.global_limit - inflight;
      std::map<std::string, int> planned_per_node = node_inflight;
      for (std::size_t i = 0; i < plan.tasks.size() && slots > 0; ++i) {
        const auto& pt = plan.tasks[i];
        if (!startable(pt) || !profiles.available(pt.chosen.node_id)) continue;
        auto& n = planned_per_node[pt.chosen.node_id];
        if (n >= config.per_node_limit) continue;
        ++n;
        --slots;
        wave.push_back(i);
      }
      if (!wave.empty()) {
        if (options.refresh_enabled) {
          try {
            cred = credentials.ensure_fresh(clock->now());
          } catch (const Error& e) {
            abort_with(ErrorClass::RefreshFailed, e.what());
            wave.clear();
          }
        }
        for (auto idx : wave) {
          auto& pt = plan.tasks[idx];
          pt.in_flight = true;
          ++inflight;
          const int n = ++node_inflight[pt.chosen.node_id];
          report.peak_inflight = std::max(report.peak_inflight, inflight);
          auto& peak = report.peak_inflight_per_node[pt.chosen.node_id];
          peak = std::max(peak, n);
          workers.emplace(idx, std::thread([&, idx, task = pt.task, credential = cred] {
            FileTask out;
            try {
              out = transfer_file(task, conn, *credential, config.staging_dir, config.retry,
                                  topts);
            } catch (const std::exception& e) {
              out = task;
              if (out.state == TransferState::Pending) out.state = TransferState::FailedTransport;
              out.error = TaskError::Transport;
              out.last_error = e.what();
              ++out.transport_attempts;
            }
            std::lock_guard lock(mu);
            results.emplace_back(idx, std::move(out));
            cv.notify_one();
          }));
        }
      }
    }

    if (inflight == 0) {
      bool more = false;
      if (!halt) {
        for (const auto& pt : plan.tasks) {
          if (startable(pt) && profiles.available(pt.chosen.node_id)) {
            more = true;
            break;
          }
        }
      }
      if (!more) break;
      continue;
    }

    std::deque<std::pair<std::size_t, FileTask>> ready;
    {
      std::unique_lock lock(mu);
      cv.wait_for(lock, std::chrono::milliseconds(50), [&] { return !results.empty(); });
      ready.swap(results);
    }
    for (auto& [idx, task] : ready) {
      auto it = workers.find(idx);
      if (it != workers.end()) {
        it->second.join();
        workers.erase(it);
      }
      handle_result(idx, std::move(task));
    }
  }
  for (auto& [idx, th] : workers) th.join();

  for (const auto& pt : plan.tasks) {
    if (pt.relocation_needed) continue;
    switch (pt.task.state) {
      case TransferState::Done: ++report.done; break;
      case TransferState::PersistentChecksumMismatch: ++report.persistent_mismatch; break;
      default:
        if (pt.finished) {
          ++report.failed_transport;
        } else {
          ++report.pending;
        }
    }
  }
  for (const auto& pt : plan.tasks) {
    if (pt.relocation_needed &&
        std::find(report.relocation_needed.begin(), report.relocation_needed.end(),
                  pt.replicas.relative_path) == report.relocation_needed.end()) {
      report.relocation_needed.push_back(pt.replicas.relative_path);
    }
  }
  if (report.persistent_mismatch > 0 && report.alerts.empty()) {
    report.alerts.push_back("persistent checksum mismatch");
  }
  report.credential_refreshes = credentials.refresh_count() - refreshes_before;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  report.summary = RunSummary::make(plan.run_id, request_time, clock->now(), done_files,
                                    done_dirs.size(), report.done_bytes, report.faults);
  return report;
}

RunReport stage_dataset(std::span<const Manifest> manifests, const SchedulerConfig& config,
                        const StageEnvironment& env) {
  config.validate();
  const auto clock = env.clock ? env.clock : system_clock();
  auto provider = env.provider ? env.provider : std::make_shared<LocalCredentialProvider>(clock);
  HttpConnection default_conn;
  DataNodeConnection& conn = env.connection ? *env.connection : default_conn;

  const auto replica_sets = group_replicas(manifests);
  StatusJournal journal(journal_path(config));
  CredentialManager credentials(provider, config.credential);
  const auto cred = credentials.ensure_fresh(clock->now());

  ConnectionSizeProber prober(conn, token_header_value(*cred));
  const auto summary = estimate_size(manifests, prober);

  std::vector<ReplicaSet> pending;
  for (const auto& rs : replica_sets) {
    if (!is_done(journal, rs.relative_path, rs.checksum_type, rs.checksum_hex)) {
      pending.push_back(rs);
    }
  }

  NodeProfiles profiles;
  {
    MetricsRecorder history;
    history.load_csv(samples_path(config));
    for (const auto& s : history.samples()) {
      profiles.observe(s.node_id, s.bytes, s.transfer_seconds, config.ewma_alpha);
    }
  }

  auto plan = build_plan(pending, config, summary, profiles, clock->now());
  plan.warnings.insert(plan.warnings.end(), summary.warnings.begin(), summary.warnings.end());

  MetricsRecorder metrics;
  RunOptions options;
  options.clock = clock;
  options.refresh_enabled = env.refresh_enabled;
  options.stop = env.stop;
  auto report = run(plan, conn, credentials, journal, metrics, profiles, config, options);
  report.already_done = replica_sets.size() - pending.size();
  report.credential_refreshes += 1;  // the bootstrap credential above

  const auto samples = metrics.samples();
  if (!samples.empty()) {
    try {
      MetricsRecorder::append_csv(samples_path(config), samples);
    } catch (const Error& e) {
      if (!report.aborted) {
        report.aborted = ErrorClass::StorageFull;
        report.abort_detail = e.what();
      }
    }
  }
  return report;
}

}  // namespace stage
