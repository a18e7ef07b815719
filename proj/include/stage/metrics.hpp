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

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stage/clock.hpp"
#include "stage/credential.hpp"
#include "stage/engine.hpp"
#include "stage/profiles.hpp"

namespace stage {

struct ThroughputSample {
  std::string node_id;
  std::uint64_t bytes = 0;
  double transfer_seconds = 0;  // excludes verification
  TimePoint recorded_at{};

  bool operator==(const ThroughputSample&) const = default;
};

struct NodeAggregate {
  std::string node_id;
  std::uint64_t total_bytes = 0;
  double total_transfer_seconds = 0;
  double mean_rate = 0;  // bytes/s
  std::size_t sample_count = 0;
};

// Thread-safe accumulation of samples. Per-node totals are order-independent
// sums; mean_rate is derived from them.
class MetricsRecorder {
 public:
  void record(const ThroughputSample& sample);
  // Throws Error(UnknownNode).
  NodeAggregate aggregate(const std::string& node_id) const;
  std::vector<NodeAggregate> aggregates() const;
  std::vector<ThroughputSample> samples() const;

  // CSV: node_id,bytes,transfer_seconds,recorded_at
  void load_csv(const std::filesystem::path& file);
  static void append_csv(const std::filesystem::path& file,
                         std::span<const ThroughputSample> samples);

 private:
  mutable std::mutex mu_;
  std::vector<ThroughputSample> samples_;
};

// Decimal megabits per second over request..completion wall time.
// Throws Error(InvalidInterval) unless completion > request.
double mbits_per_sec(std::uint64_t bytes, TimePoint request_time, TimePoint completion_time);

// Throws Error(ZeroRate) unless rate > 0.
double time_to_transfer(double target_bytes, double rate_bytes_per_sec);

// seconds / 86400 rounded half-to-even to one decimal: 3097432 -> "35.8".
std::string format_days(double seconds);
// Largest decimal unit with value >= 1, one decimal: 1e6 -> "1.0 MB/s".
std::string format_rate(double bytes_per_sec);
// Always terabytes with three decimals: 1e12 -> "1.000 TB".
std::string format_tb(std::uint64_t bytes);

inline constexpr std::string_view kNodeReportCsvHeader =
    "node_id,total_bytes,total_tb,transfer_seconds,transfer_days,mean_rate_bytes_per_sec,"
    "mean_rate,seconds_per_tb";

struct NodeReport {
  std::string text;
  std::string csv;
};

NodeReport render_node_report(std::span<const NodeAggregate> aggregates);

struct RunSummary {
  std::string task_id;
  TimePoint request_time{};
  TimePoint completion_time{};
  std::uint64_t total_tasks = 0;
  std::uint64_t files = 0;
  std::uint64_t dirs = 0;
  std::uint64_t bytes_transferred = 0;
  double mbits_per_sec = 0;
  std::uint64_t faults = 0;

  bool operator==(const RunSummary&) const = default;

  // Truncates times to whole seconds, total_tasks = files + dirs + 1, and
  // derives mbits_per_sec (0 for an empty interval).
  static RunSummary make(std::string task_id, TimePoint request_time, TimePoint completion_time,
                         std::uint64_t files, std::uint64_t dirs, std::uint64_t bytes,
                         std::uint64_t faults);
};

// Exact integer in E-notation with at least five decimals: "2.94442E+13".
std::string format_bytes_sci(std::uint64_t bytes);
std::optional<std::uint64_t> parse_bytes_sci(std::string_view text);

std::string render_run_summary(const RunSummary& s);
// Throws ParseError.
RunSummary parse_run_summary(std::string_view text);

inline constexpr std::string_view kProbeCsvHeader =
    "node_id,bytes,seconds,rate_bytes_per_sec,ewma_rate";
inline constexpr std::uint64_t kMinProbeBytes = 100000;

struct ProbeResult {
  std::string node_id;
  std::string url;
  bool ok = false;
  std::uint64_t bytes = 0;
  double seconds = 0;
  double rate = 0;
  std::optional<double> ewma;
  std::string error;
};

std::string probe_object_url(std::string_view node_base_url, std::uint64_t bytes);

// Downloads a probe object from every node, records samples and folds the
// measured rate into the node's EWMA. Failures are per-node entries.
// Throws Error(Usage) if probe_bytes < kMinProbeBytes.
std::vector<ProbeResult> probe(std::span<const std::string> node_base_urls,
                               std::uint64_t probe_bytes, const Credential& cred,
                               DataNodeConnection& conn, MetricsRecorder& metrics,
                               NodeProfiles& profiles, double ewma_alpha, const Clock& clock);

std::string render_probe_csv(std::span<const ProbeResult> results);

}  // namespace stage
