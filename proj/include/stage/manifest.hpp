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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stage {

enum class ChecksumType { md5, sha256 };

std::string_view to_string(ChecksumType type);
std::optional<ChecksumType> checksum_type_from_string(std::string_view name);
std::size_t hex_length(ChecksumType type);

struct FileEntry {
  std::string relative_path;
  std::string url;
  ChecksumType checksum_type = ChecksumType::md5;
  std::string checksum_hex;
  std::optional<std::uint64_t> size_bytes;

  bool operator==(const FileEntry&) const = default;
};

struct Manifest {
  std::string dataset_id;
  std::vector<FileEntry> entries;
  // Host (authority) of the first entry's url; empty for an empty manifest.
  std::string source_node;

  bool operator==(const Manifest&) const = default;
};

struct Location {
  std::string url;
  std::string node_id;

  bool operator==(const Location&) const = default;
};

struct ReplicaSet {
  std::string relative_path;
  ChecksumType checksum_type = ChecksumType::md5;
  std::string checksum_hex;
  std::optional<std::uint64_t> size_bytes;
  std::vector<Location> locations;
};

struct DatasetSummary {
  std::uint64_t file_count = 0;
  std::uint64_t dir_count = 0;
  std::uint64_t total_bytes = 0;
  std::uint64_t unknown_size_count = 0;
  // total_bytes is only a lower bound when some sizes are unknown.
  bool lower_bound = false;
  std::vector<std::string> warnings;

  bool operator==(const DatasetSummary&) const = default;
};

// Relative POSIX path: non-empty, no leading '/', no empty, '.' or '..'
// segments, no quotes, first segment not the reserved ".stage".
bool valid_relative_path(std::string_view path);

// "http://host:port/a/b" -> "host:port"; empty when there is no scheme.
std::string node_id_of(std::string_view url);

Manifest parse_manifest(std::string_view text);
Manifest load_manifest(const std::filesystem::path& file);
std::string serialize_manifest(const Manifest& manifest);

DatasetSummary summarize(const Manifest& manifest);
DatasetSummary summarize(std::span<const Manifest> manifests);

struct SizeProbe {
  std::optional<std::uint64_t> size;
  std::string error;
};

// HEAD-style size lookup. Implementations must be safe for concurrent use.
class SizeProber {
 public:
  virtual ~SizeProber() = default;
  virtual SizeProbe probe_size(const FileEntry& entry) = 0;
};

DatasetSummary estimate_size(const Manifest& manifest, SizeProber& prober);
DatasetSummary estimate_size(std::span<const Manifest> manifests, SizeProber& prober);

// Merges entries by relative_path across manifests, in first-seen order.
// Throws ReplicaConflict when the same path carries different checksums.
std::vector<ReplicaSet> group_replicas(std::span<const Manifest> manifests);

// Decimal units with three decimals: 29444248373687 -> "29.444 TB".
std::string format_decimal_bytes(std::uint64_t bytes);

std::string render_summary(const DatasetSummary& summary);

}  // namespace stage
