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
#include "stage/engine.hpp"
#include "stage/manifest.hpp"

namespace stage {

inline constexpr std::string_view kJournalHeader = "stage-journal v1";

// One line of the status journal:
//   v1 <state> '<relative_path>' <checksum_type>:<hex> <bytes> <transfer_ms> <verify_ms> <iso8601_utc>
struct JournalRecord {
  TransferState state = TransferState::Done;
  std::string relative_path;
  ChecksumType checksum_type = ChecksumType::md5;
  std::string checksum_hex;
  std::uint64_t bytes = 0;
  std::int64_t transfer_ms = 0;
  std::int64_t verify_ms = 0;
  TimePoint completed_at{};

  bool operator==(const JournalRecord&) const = default;
};

std::string format_record(const JournalRecord& r);  // without the trailing LF
std::optional<JournalRecord> parse_record(std::string_view line);

// Append-only completion record. Loading tolerates a torn trailing line and
// truncates it away before the next append; the last complete record for a
// path wins. Appends from many threads are serialized.
class StatusJournal {
 public:
  // Throws Error(JournalCorrupt) if a complete first line is not the header.
  explicit StatusJournal(std::filesystem::path file);

  // Appends and fdatasyncs one record, then updates the index.
  // Throws Error(JournalWrite).
  void record(const FileTask& task, TimePoint completed_at);
  void record(const JournalRecord& r);

  std::optional<JournalRecord> lookup(const std::string& relative_path) const;
  std::map<std::string, JournalRecord> snapshot() const;
  std::map<TransferState, std::size_t> state_counts() const;
  const std::filesystem::path& file() const { return file_; }
  std::size_t discarded_lines() const { return discarded_; }

 private:
  void load();

  std::filesystem::path file_;
  mutable std::mutex mu_;
  std::map<std::string, JournalRecord> index_;
  std::uint64_t valid_length_ = 0;
  bool header_written_ = false;
  std::size_t discarded_ = 0;
};

// Entries still to fetch: everything not recorded Done with the checksum the
// manifest carries today.
std::vector<FileEntry> load_resume(const StatusJournal& journal, const Manifest& manifest);

// True when `relative_path` is recorded Done with this checksum.
bool is_done(const StatusJournal& journal, const std::string& relative_path, ChecksumType type,
             const std::string& checksum_hex);

}  // namespace stage
