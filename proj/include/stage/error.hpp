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
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stage {

enum class ErrorClass {
  Usage,
  Parse,
  ReplicaConflict,
  Config,
  QuotaExceeded,
  RefreshFailed,
  CredentialExpired,
  StorageFull,
  JournalWrite,
  JournalCorrupt,
  ReadError,
  UnknownNode,
  InvalidInterval,
  ZeroRate,
  NoAvailableReplica,
  Bind,
  UnknownPath,
  ProbeFailed,
};

std::string_view error_class_name(ErrorClass cls);

// Process exit code for a failure of this class (2 usage, 3 quota,
// 4 credential, 5 storage or journal, 1 otherwise).
int exit_code_for(ErrorClass cls);

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& detail)
      : std::runtime_error(detail), class_(cls) {}

  ErrorClass error_class() const { return class_; }

 private:
  ErrorClass class_;
};

// Manifest or config text rejected; line is 1-based, 0 when not line-bound.
class ParseError : public Error {
 public:
  ParseError(int line, std::string reason);

  int line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  int line_;
  std::string reason_;
};

class ReplicaConflict : public Error {
 public:
  // (url, checksum_hex) for every location of the path.
  using Claim = std::pair<std::string, std::string>;

  ReplicaConflict(std::string path, std::vector<Claim> claims);

  const std::string& path() const { return path_; }
  const std::vector<Claim>& claims() const { return claims_; }

 private:
  std::string path_;
  std::vector<Claim> claims_;
};

class QuotaExceeded : public Error {
 public:
  QuotaExceeded(std::uint64_t required, std::uint64_t available);

  std::uint64_t required() const { return required_; }
  std::uint64_t available() const { return available_; }

 private:
  std::uint64_t required_;
  std::uint64_t available_;
};

}  // namespace stage
