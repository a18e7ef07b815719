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
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "stage/clock.hpp"
#include "stage/credential.hpp"
#include "stage/manifest.hpp"

namespace stage {

enum class TransferState {
  Pending,
  InFlight,
  Verifying,
  Done,
  FailedTransport,
  FailedChecksum,
  PersistentChecksumMismatch,
  Relocated,
};

std::string_view to_string(TransferState s);
std::optional<TransferState> transfer_state_from_string(std::string_view name);
bool is_legal_transition(TransferState from, TransferState to);

// Why the last attempt stopped short of Done.
enum class TaskError {
  None,
  Transport,
  Checksum,
  CredentialExpired,
  StorageFull,
  NodeGone,
  NotFound,
};

std::string_view to_string(TaskError e);

struct FileTask {
  FileEntry entry;
  TransferState state = TransferState::Pending;
  int transport_attempts = 0;
  int checksum_attempts = 0;
  int downloads = 0;
  std::uint64_t bytes_transferred = 0;  // last attempt
  std::uint64_t wire_bytes = 0;         // every attempt
  // Read/write loop only; verification time is kept apart.
  double transfer_seconds = 0;
  double verify_seconds = 0;
  std::optional<std::string> last_error;
  TaskError error = TaskError::None;
  std::optional<std::string> relocated_to;

  // Throws std::logic_error on an illegal transition.
  void transition(TransferState to);
};

struct RetryPolicy {
  int max_transport_retries = 3;
  int max_checksum_retries = 3;
  std::int64_t backoff_base_ms = 1000;
  std::int64_t backoff_cap_ms = 60000;

  void validate() const;
  // Delay before retry number `attempt` (1-based): base * 2^(attempt-1), capped.
  std::chrono::milliseconds backoff(int attempt) const;
};

enum class VerifyMode { streamed, posthoc };

struct FetchResult {
  enum class Status { Ok, Unauthorized, Gone, NotFound, TransportError, SinkFailed };
  Status status = Status::TransportError;
  int http_status = 0;
  std::optional<std::string> relocated_to;
  std::string detail;
};

struct HeadResult {
  std::optional<std::uint64_t> size;
  FetchResult::Status status = FetchResult::Status::TransportError;
  std::string detail;
};

// Sink returns false to abort the body (local write failure).
using ByteSink = std::function<bool(std::span<const std::byte>)>;

// Data-node protocol client. Implementations must be safe for concurrent use.
class DataNodeConnection {
 public:
  virtual ~DataNodeConnection() = default;
  virtual FetchResult get(const std::string& url, const std::string& token_header,
                          const ByteSink& sink) = 0;
  virtual HeadResult head(const std::string& url, const std::string& token_header) = 0;
};

std::filesystem::path final_path(const std::filesystem::path& staging_dir,
                                 std::string_view relative_path);
std::filesystem::path part_path(const std::filesystem::path& staging_dir,
                                std::string_view relative_path);

// Streams the file and compares against checksum_hex case-insensitively.
// Throws Error(ReadError) when the file cannot be read.
bool verify(const std::filesystem::path& file, ChecksumType type, std::string_view checksum_hex);

struct TransferOptions {
  VerifyMode verify_mode = VerifyMode::streamed;
  std::shared_ptr<const Clock> clock;
  // Checked between attempts; a set flag returns the task as it stands.
  const std::atomic<bool>* stop = nullptr;
};

// One file, whole-file retries. Returns with state Done,
// PersistentChecksumMismatch, Relocated, or FailedTransport/FailedChecksum
// together with `error` when the caller must intervene (credential expired,
// storage full, node gone, retry cap reached).
FileTask transfer_file(FileTask task, DataNodeConnection& conn, const Credential& cred,
                       const std::filesystem::path& staging_dir, const RetryPolicy& policy,
                       const TransferOptions& options = {});

}  // namespace stage
