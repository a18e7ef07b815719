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

#include "stage/journal.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "stage/error.hpp"

namespace stage {

namespace fs = std::filesystem;

std::string format_record(const JournalRecord& r) {
  std::string out = "v1 ";
  out += to_string(r.state);
  out += " '" + r.relative_path + "' ";
  out += to_string(r.checksum_type);
  out += ":" + r.checksum_hex + " " + std::to_string(r.bytes) + " " +
         std::to_string(r.transfer_ms) + " " + std::to_string(r.verify_ms) + " " +
         format_iso8601(r.completed_at);
  return out;
}

namespace {

template <typename T>
bool parse_int(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::string_view next_token(std::string_view& rest) {
  const auto sp = rest.find(' ');
  auto tok = rest.substr(0, sp);
  rest = sp == std::string_view::npos ? std::string_view() : rest.substr(sp + 1);
  return tok;
}

}  // namespace

std::optional<JournalRecord> parse_record(std::string_view line) {
  if (!line.starts_with("v1 ")) return std::nullopt;
  std::string_view rest = line.substr(3);
  JournalRecord r;
  const auto state = transfer_state_from_string(next_token(rest));
  if (!state) return std::nullopt;
  r.state = *state;
  if (!rest.starts_with('\'')) return std::nullopt;
  const auto close = rest.find('\'', 1);
  if (close == std::string_view::npos || close + 1 >= rest.size() || rest[close + 1] != ' ') {
    return std::nullopt;
  }
  r.relative_path = std::string(rest.substr(1, close - 1));
  rest = rest.substr(close + 2);
  const auto sum = next_token(rest);
  const auto colon = sum.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto type = checksum_type_from_string(sum.substr(0, colon));
  if (!type) return std::nullopt;
  r.checksum_type = *type;
  r.checksum_hex = std::string(sum.substr(colon + 1));
  if (r.checksum_hex.size() != hex_length(r.checksum_type)) return std::nullopt;
  if (!parse_int(next_token(rest), r.bytes)) return std::nullopt;
  if (!parse_int(next_token(rest), r.transfer_ms)) return std::nullopt;
  if (!parse_int(next_token(rest), r.verify_ms)) return std::nullopt;
  const auto when = parse_utc(next_token(rest));
  if (!when || !rest.empty()) return std::nullopt;
  r.completed_at = *when;
  return r;
}

StatusJournal::StatusJournal(fs::path file) : file_(std::move(file)) { load(); }

void StatusJournal::load() {
  std::ifstream in(file_, std::ios::binary);
  if (!in) return;
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();

  std::size_t pos = 0;
  bool first = true;
  while (pos < data.size()) {
    const auto eol = data.find('\n', pos);
    if (eol == std::string::npos) break;  // torn tail
    const std::string_view line(data.data() + pos, eol - pos);
    if (first) {
      if (line != kJournalHeader) {
        throw Error(ErrorClass::JournalCorrupt, "unrecognized journal header in " + file_.string());
      }
      header_written_ = true;
      first = false;
    } else if (auto rec = parse_record(line)) {
      index_[rec->relative_path] = *rec;
    } else {
      ++discarded_;
    }
    pos = eol + 1;
    valid_length_ = pos;
  }
}

void StatusJournal::record(const FileTask& task, TimePoint completed_at) {
  JournalRecord r;
  r.state = task.state;
  r.relative_path = task.entry.relative_path;
  r.checksum_type = task.entry.checksum_type;
  r.checksum_hex = task.entry.checksum_hex;
  r.bytes = task.bytes_transferred;
  r.transfer_ms = static_cast<std::int64_t>(task.transfer_seconds * 1000.0 + 0.5);
  r.verify_ms = static_cast<std::int64_t>(task.verify_seconds * 1000.0 + 0.5);
  r.completed_at = completed_at;
  record(r);
}

void StatusJournal::record(const JournalRecord& r) {
  if (r.state != TransferState::Done && r.state != TransferState::PersistentChecksumMismatch) {
    throw std::logic_error("journal records terminal states only");
  }
  std::lock_guard lock(mu_);
  std::error_code ec;
  fs::create_directories(file_.parent_path(), ec);
  const int fd = ::open(file_.c_str(), O_WRONLY | O_CREAT, 0644);
  if (fd < 0) {
    throw Error(ErrorClass::JournalWrite,
                "cannot open journal " + file_.string() + ": " + std::strerror(errno));
  }
  std::string payload;
  if (!header_written_) payload = std::string(kJournalHeader) + "\n";
  payload += format_record(r) + "\n";
  // Drop any torn tail left by an interrupted writer before appending.
  const off_t at = header_written_ ? static_cast<off_t>(valid_length_) : 0;
  bool ok = ::ftruncate(fd, at) == 0 && ::lseek(fd, at, SEEK_SET) == at;
  std::size_t written = 0;
  while (ok && written < payload.size()) {
    const auto n = ::write(fd, payload.data() + written, payload.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ok = false;
    } else {
      written += static_cast<std::size_t>(n);
    }
  }
  if (ok && ::fdatasync(fd) != 0) ok = false;
  const int saved = errno;
  ::close(fd);
  if (!ok) {
    throw Error(ErrorClass::JournalWrite,
                "journal append failed on " + file_.string() + ": " + std::strerror(saved));
  }
  header_written_ = true;
  valid_length_ = static_cast<std::uint64_t>(at) + payload.size();
  index_[r.relative_path] = r;
}

std::optional<JournalRecord> StatusJournal::lookup(const std::string& relative_path) const {
  std::lock_guard lock(mu_);
  auto it = index_.find(relative_path);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, JournalRecord> StatusJournal::snapshot() const {
  std::lock_guard lock(mu_);
  return index_;
}

std::map<TransferState, std::size_t> StatusJournal::state_counts() const {
  std::lock_guard lock(mu_);
  std::map<TransferState, std::size_t> counts;
  for (const auto& [path, r] : index_) ++counts[r.state];
  return counts;
}

bool is_done(const StatusJournal& journal, const std::string& relative_path, ChecksumType type,
             const std::string& checksum_hex) {
  const auto r = journal.lookup(relative_path);
  return r && r->state == TransferState::Done && r->checksum_type == type &&
         r->checksum_hex == checksum_hex;
}

std::vector<FileEntry> load_resume(const StatusJournal& journal, const Manifest& manifest) {
  std::vector<FileEntry> pending;
  for (const auto& e : manifest.entries) {
    if (!is_done(journal, e.relative_path, e.checksum_type, e.checksum_hex)) {
      pending.push_back(e);
    }
  }
  return pending;
}

}  // namespace stage
