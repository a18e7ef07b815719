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

#include "stage/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <system_error>
#include <thread>
#include <vector>

#include "stage/digest.hpp"
#include "stage/error.hpp"

namespace stage {

namespace fs = std::filesystem;

std::string_view to_string(TransferState s) {
  switch (s) {
    case TransferState::Pending: return "Pending";
    case TransferState::InFlight: return "InFlight";
    case TransferState::Verifying: return "Verifying";
    case TransferState::Done: return "Done";
    case TransferState::FailedTransport: return "FailedTransport";
    case TransferState::FailedChecksum: return "FailedChecksum";
    case TransferState::PersistentChecksumMismatch: return "PersistentChecksumMismatch";
    case TransferState::Relocated: return "Relocated";
  }
  return "?";
}

std::optional<TransferState> transfer_state_from_string(std::string_view name) {
  for (auto s : {TransferState::Pending, TransferState::InFlight, TransferState::Verifying,
                 TransferState::Done, TransferState::FailedTransport,
                 TransferState::FailedChecksum, TransferState::PersistentChecksumMismatch,
                 TransferState::Relocated}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

bool is_legal_transition(TransferState from, TransferState to) {
  using S = TransferState;
  switch (from) {
    case S::Pending: return to == S::InFlight;
    case S::InFlight: return to == S::Verifying || to == S::FailedTransport || to == S::Relocated;
    case S::Verifying: return to == S::Done || to == S::FailedChecksum;
    case S::FailedChecksum: return to == S::InFlight || to == S::PersistentChecksumMismatch;
    case S::FailedTransport: return to == S::InFlight || to == S::Relocated;
    case S::Done:
    case S::PersistentChecksumMismatch:
    case S::Relocated: return false;
  }
  return false;
}

std::string_view to_string(TaskError e) {
  switch (e) {
    case TaskError::None: return "none";
    case TaskError::Transport: return "transport";
    case TaskError::Checksum: return "checksum";
    case TaskError::CredentialExpired: return "CredentialExpired";
    case TaskError::StorageFull: return "StorageFull";
    case TaskError::NodeGone: return "NodeGone";
    case TaskError::NotFound: return "NotFound";
  }
  return "?";
}

void FileTask::transition(TransferState to) {
  if (!is_legal_transition(state, to)) {
    throw std::logic_error("illegal transition " + std::string(to_string(state)) + " -> " +
                           std::string(to_string(to)) + " for " + entry.relative_path);
  }
  state = to;
}

void RetryPolicy::validate() const {
  if (max_transport_retries <= 0 || max_checksum_retries <= 0 || backoff_base_ms <= 0 ||
      backoff_cap_ms <= 0) {
    throw Error(ErrorClass::Config, "retry policy values must be positive");
  }
}

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
  std::int64_t delay = backoff_base_ms;
  for (int i = 1; i < attempt && delay < backoff_cap_ms; ++i) delay *= 2;
  return std::chrono::milliseconds(std::min(delay, backoff_cap_ms));
}

fs::path final_path(const fs::path& staging_dir, std::string_view relative_path) {
  return staging_dir / fs::path(std::string(relative_path));
}

fs::path part_path(const fs::path& staging_dir, std::string_view relative_path) {
  return staging_dir / fs::path(std::string(relative_path) + ".part");
}

bool verify(const fs::path& file, ChecksumType type, std::string_view checksum_hex) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorClass::ReadError, "cannot read " + file.string());
  Digest d(type);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    d.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  if (in.bad()) throw Error(ErrorClass::ReadError, "read failed on " + file.string());
  std::string expected(checksum_hex);
  std::transform(expected.begin(), expected.end(), expected.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return d.finish_hex() == expected;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

void discard(const fs::path& p) {
  std::error_code ec;
  fs::remove(p, ec);
}

bool stopping(const TransferOptions& options) {
  return options.stop && options.stop->load();
}

}  // namespace

FileTask transfer_file(FileTask task, DataNodeConnection& conn, const Credential& cred,
                       const fs::path& staging_dir, const RetryPolicy& policy,
                       const TransferOptions& options) {
  using S = TransferState;
  if (task.state != S::Pending && task.state != S::FailedTransport &&
      task.state != S::FailedChecksum) {
    throw std::logic_error("transfer_file: task not startable: " +
                           std::string(to_string(task.state)));
  }
  const auto clock = options.clock ? options.clock : system_clock();
  const auto part = part_path(staging_dir, task.entry.relative_path);
  const auto target = final_path(staging_dir, task.entry.relative_path);
  const auto token = token_header_value(cred);
  task.error = TaskError::None;

  while (true) {
    task.transition(S::InFlight);

    if (remaining(cred, clock->now()).count() <= 0) {
      ++task.transport_attempts;
      task.error = TaskError::CredentialExpired;
      task.last_error = "credential " + cred.id + " expired before request";
      task.transition(S::FailedTransport);
      return task;
    }

    std::error_code ec;
    fs::create_directories(part.parent_path(), ec);
    std::unique_ptr<std::FILE, FileCloser> out(
        ec ? nullptr : std::fopen(part.c_str(), "wb"));
    if (!out) {
      task.error = TaskError::StorageFull;
      task.last_error = "cannot create " + part.string();
      task.transition(S::FailedTransport);
      return task;
    }

    std::optional<Digest> digest;
    if (options.verify_mode == VerifyMode::streamed) digest.emplace(task.entry.checksum_type);
    std::uint64_t received = 0;
    bool write_failed = false;
    const auto started = std::chrono::steady_clock::now();
    ++task.downloads;
    auto fetched = conn.get(task.entry.url, token, [&](std::span<const std::byte> chunk) {
      if (std::fwrite(chunk.data(), 1, chunk.size(), out.get()) != chunk.size()) {
        write_failed = true;
        return false;
      }
      if (digest) digest->update(chunk);
      received += chunk.size();
      return true;
    });
    if (std::fflush(out.get()) != 0) write_failed = true;
    if (std::fclose(out.release()) != 0) write_failed = true;
    task.transfer_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    task.bytes_transferred = received;
    task.wire_bytes += received;

    if (write_failed || fetched.status == FetchResult::Status::SinkFailed) {
      discard(part);
      task.error = TaskError::StorageFull;
      task.last_error = "write failed on " + part.string();
      task.transition(S::FailedTransport);
      return task;
    }

    switch (fetched.status) {
      case FetchResult::Status::Ok: break;
      case FetchResult::Status::Unauthorized:
        discard(part);
        ++task.transport_attempts;
        task.error = TaskError::CredentialExpired;
        task.last_error = "node rejected credential " + cred.id;
        task.transition(S::FailedTransport);
        return task;
      case FetchResult::Status::Gone:
        discard(part);
        task.error = TaskError::NodeGone;
        task.relocated_to = fetched.relocated_to;
        task.last_error = "node gone: " + task.entry.url;
        task.transition(S::Relocated);
        return task;
      case FetchResult::Status::NotFound:
        discard(part);
        ++task.transport_attempts;
        task.error = TaskError::NotFound;
        task.last_error = "not found: " + task.entry.url;
        task.transition(S::FailedTransport);
        return task;
      case FetchResult::Status::TransportError:
      case FetchResult::Status::SinkFailed:
        discard(part);
        ++task.transport_attempts;
        task.last_error = fetched.detail;
        task.transition(S::FailedTransport);
        if (task.transport_attempts > policy.max_transport_retries || stopping(options)) {
          task.error = TaskError::Transport;
          return task;
        }
        std::this_thread::sleep_for(policy.backoff(task.transport_attempts));
        continue;
    }

    task.transition(S::Verifying);
    bool match = false;
    if (digest) {
      match = digest->finish_hex() == task.entry.checksum_hex;
      task.verify_seconds = 0;
    } else {
      const auto vstart = std::chrono::steady_clock::now();
      try {
        match = verify(part, task.entry.checksum_type, task.entry.checksum_hex);
      } catch (const Error&) {
        match = false;
      }
      task.verify_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - vstart).count();
    }

    if (match) {
      fs::rename(part, target, ec);
      if (ec) {
        discard(part);
        task.error = TaskError::StorageFull;
        task.last_error = "rename failed: " + ec.message();
        task.transition(S::FailedChecksum);
        return task;
      }
      task.transition(S::Done);
      task.last_error.reset();
      return task;
    }

    discard(part);
    ++task.checksum_attempts;
    task.last_error = "checksum mismatch from " + task.entry.url;
    task.transition(S::FailedChecksum);
    if (task.checksum_attempts > policy.max_checksum_retries) {
      task.error = TaskError::Checksum;
      task.transition(S::PersistentChecksumMismatch);
      return task;
    }
    if (stopping(options)) {
      task.error = TaskError::Checksum;
      return task;
    }
  }
}

}  // namespace stage
