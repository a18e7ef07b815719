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

#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "stage/clock.hpp"
#include "stage/config.hpp"
#include "stage/credential.hpp"
#include "stage/engine.hpp"
#include "stage/error.hpp"
#include "stage/journal.hpp"
#include "stage/manifest.hpp"
#include "stage/metrics.hpp"
#include "stage/profiles.hpp"

namespace stage {

struct PlannedTask {
  FileTask task;
  ReplicaSet replicas;
  Location chosen;
  // Locations given up on for this file (exhausted retries or bad data).
  std::set<std::string> tried_urls;
  std::vector<std::string> bad_sources;
  bool in_flight = false;
  bool finished = false;
  bool relocation_needed = false;
};

struct TransferPlan {
  std::string run_id;
  std::vector<PlannedTask> tasks;
  std::map<std::string, std::vector<std::size_t>> node_queues;
  TimePoint created_at{};
  bool lower_bound = false;
  std::vector<std::string> warnings;
};

void rebuild_node_queues(TransferPlan& plan);

// Fastest available location by EWMA rate (unknown nodes use the prior);
// ties go to the lexicographically smallest node_id. Throws
// Error(NoAvailableReplica).
Location select_replica(const ReplicaSet& rs, const NodeProfiles& profiles,
                        double unknown_rate_prior, const std::set<std::string>& exclude_urls = {});

// Throws QuotaExceeded when the configured quota is below the dataset size
// and quota_override is off.
TransferPlan build_plan(std::span<const ReplicaSet> replica_sets, const SchedulerConfig& config,
                        const DatasetSummary& summary, const NodeProfiles& profiles,
                        TimePoint now);

struct RemapEvent {
  std::string path;
  std::string from_url;
  std::string to_url;
  std::string reason;
};

struct NodeGoneOutcome {
  std::vector<RemapEvent> remaps;
  std::vector<std::string> relocation_needed;
};

// Marks the node unavailable and moves its unfinished, idle tasks to another
// replica, else under `relocation_prefix`, else flags them RelocationNeeded.
NodeGoneOutcome handle_node_gone(TransferPlan& plan, NodeProfiles& profiles,
                                 const std::string& node_id,
                                 const std::optional<std::string>& relocation_prefix,
                                 const SchedulerConfig& config);

struct BadSource {
  std::string path;
  std::string url;       // served bytes disagreeing with the manifest checksum
  std::string good_url;  // location the file was completed from
};

struct NodeTotals {
  std::uint64_t bytes = 0;
  double transfer_seconds = 0;
  std::size_t files = 0;
};

struct RunReport {
  std::string run_id;
  std::size_t planned = 0;
  std::size_t already_done = 0;
  std::size_t done = 0;
  std::size_t persistent_mismatch = 0;
  std::size_t failed_transport = 0;
  std::size_t pending = 0;
  std::vector<std::string> relocation_needed;
  std::vector<RemapEvent> remaps;
  std::vector<BadSource> bad_sources;
  std::vector<std::string> alerts;

  std::uint64_t bytes_transferred = 0;  // on the wire, all attempts
  std::uint64_t done_bytes = 0;         // sizes of files completed this run
  std::uint64_t downloads = 0;
  std::uint64_t faults = 0;
  int credential_expired_failures = 0;
  std::optional<TimePoint> first_credential_failure;  // run clock
  int credential_refreshes = 0;

  int peak_inflight = 0;
  std::map<std::string, int> peak_inflight_per_node;
  double wall_seconds = 0;
  double transfer_seconds_sum = 0;
  std::map<std::string, NodeTotals> per_node;

  std::optional<ErrorClass> aborted;
  std::string abort_detail;
  bool lower_bound = false;
  std::vector<std::string> warnings;
  RunSummary summary;

  // Every file of the dataset is Done and the run was not aborted.
  bool complete() const;
};

std::string render_run_report(const RunReport& report);

struct RunOptions {
  std::shared_ptr<const Clock> clock;
  // Off only for negative-control experiments: no refresh between waves.
  bool refresh_enabled = true;
  const std::atomic<bool>* stop = nullptr;
};

// Executes the plan with at most global_limit transfers in flight and at most
// per_node_limit per node. Credentials are refreshed before each dispatch
// wave. StorageFull, journal failures and RefreshFailed stop dispatching and
// end the run with `aborted` set; the journal makes it resumable.
RunReport run(TransferPlan& plan, DataNodeConnection& conn, CredentialManager& credentials,
              StatusJournal& journal, MetricsRecorder& metrics, NodeProfiles& profiles,
              const SchedulerConfig& config, const RunOptions& options = {});

struct StageEnvironment {
  std::shared_ptr<const Clock> clock;
  std::shared_ptr<CredentialProvider> provider;  // default: LocalCredentialProvider
  DataNodeConnection* connection = nullptr;      // default: HttpConnection
  bool refresh_enabled = true;
  const std::atomic<bool>* stop = nullptr;
};

// Full staging pass: group replicas, open the journal, estimate sizes, drop
// files already Done, quota preflight, plan, run, persist samples. Calling it
// again on the same staging_dir resumes.
RunReport stage_dataset(std::span<const Manifest> manifests, const SchedulerConfig& config,
                        const StageEnvironment& env = {});

std::string make_run_id();

}  // namespace stage
