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

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stage/clock.hpp"
#include "stage/manifest.hpp"

namespace stage {

struct FaultSpec {
  enum class Kind {
    wrong_published_checksum,
    corrupt_first_n,
    gone_after,
    reject_all_tokens,
    drop_connection,
  };

  Kind kind = Kind::corrupt_first_n;
  std::string match = "*";  // fnmatch glob over the relative path
  int n = 1;                // corrupt_first_n
  double t_s = 0;           // gone_after: seconds after fleet start (fleet clock)
  std::optional<std::string> relocation_url;  // gone_after: prefix, path appended
  double p = 0;             // drop_connection probability

  bool operator==(const FaultSpec&) const = default;
};

std::string_view to_string(FaultSpec::Kind kind);

// Text form: "<kind> <glob> [args]", e.g. "corrupt_first_n data/* 1",
// "gone_after * 30 http://host:port/", "drop_connection * 0.25".
FaultSpec parse_fault(std::string_view text);
std::string format_fault(const FaultSpec& f);

struct CatalogEntry {
  std::string path;
  std::uint64_t size = 0;
};

struct SimNodeConfig {
  std::string name;
  std::string listen_host = "127.0.0.1";
  int port = 0;  // 0 = ephemeral
  std::optional<std::uint64_t> bandwidth_bytes_per_sec;  // unset = unlimited
  int latency_ms = 0;
  std::uint64_t content_seed = 0;
  ChecksumType checksum_type = ChecksumType::md5;
  std::vector<CatalogEntry> catalog;
  std::vector<FaultSpec> faults;

  void validate() const;
};

// Sections "[node <name>]" followed by key = value lines. Repeatable keys:
// "file = <path> <size>", "fault = <fault text>".
std::vector<SimNodeConfig> parse_fleet_config(std::string_view text);

// Token bucket with a debt model: consumers may overdraw and then sleep until
// the balance is non-negative again, which keeps the aggregate rate exact
// under concurrent use. Starts full.
class TokenBucket {
 public:
  TokenBucket(double rate_bytes_per_sec, double capacity_bytes);

  void consume(std::size_t bytes);
  double rate() const { return rate_; }
  double capacity() const { return capacity_; }

 private:
  double rate_;
  double capacity_;
  std::mutex mu_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

// Per-write chunk for a node throttled at `rate`: 10 ms of bandwidth,
// clamped to [256 B, 64 KiB]. The bucket capacity equals one chunk.
std::size_t throttle_chunk_bytes(std::optional<std::uint64_t> rate);

struct InflightStats {
  int current = 0;
  int peak = 0;
};

// A set of local HTTP data nodes implementing the transfer wire protocol,
// plus an admin interface:
//   GET  /admin/inflight        {"node","inflight","peak","global_inflight","global_peak"}
//   POST /admin/inflight/reset  zero the peaks
//   POST /admin/fault           JSON {"kind","match","n","t","relocation","p"}
//   POST /admin/fault/clear     remove all faults of this node
//   POST /admin/clock           JSON {"advance_s": seconds}
//   GET  /admin/stats           {"gets": {path: count}, "bytes_served": n}
class SimFleet {
 public:
  // Throws Error(Bind) when an address cannot be bound.
  static std::unique_ptr<SimFleet> start(std::vector<SimNodeConfig> configs,
                                         std::shared_ptr<const Clock> clock = system_clock());
  ~SimFleet();
  SimFleet(const SimFleet&) = delete;
  SimFleet& operator=(const SimFleet&) = delete;

  void stop();

  std::size_t size() const;
  const SimNodeConfig& config(std::size_t node) const;
  std::string base_url(std::size_t node) const;
  std::string node_id(std::size_t node) const;
  std::string url_for(std::size_t node, std::string_view path) const;

  // Manifest text for the given catalog paths (all when empty); paths under a
  // wrong_published_checksum fault get their first hex nibble inverted.
  // Throws Error(UnknownPath).
  std::string publish_manifest(std::size_t node, std::span<const std::string> paths,
                               const std::string& dataset_id) const;
  std::string publish_manifest(std::size_t node, const std::string& dataset_id) const;
  // Digest of what the node serves for `path` on a clean request.
  std::string served_digest(std::size_t node, const std::string& path) const;

  void add_fault(std::size_t node, FaultSpec fault);
  void clear_faults(std::size_t node);

  void advance_clock(std::chrono::milliseconds d);
  TimePoint now() const;

  InflightStats inflight(std::size_t node) const;
  InflightStats global_inflight() const;
  void reset_peaks();

  std::uint64_t get_count(std::size_t node, const std::string& path) const;
  std::uint64_t total_gets() const;
  std::uint64_t bytes_served(std::size_t node) const;
  void reset_counters();

  // "node <name> <base_url>" per line.
  std::string describe() const;

 private:
  struct Node;
  struct Shared;
  SimFleet() = default;

  std::shared_ptr<Shared> shared_;
  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace stage
