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

#include "stage/error.hpp"

namespace stage {

std::string_view error_class_name(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::Usage: return "UsageError";
    case ErrorClass::Parse: return "ParseError";
    case ErrorClass::ReplicaConflict: return "ReplicaConflict";
    case ErrorClass::Config: return "ConfigError";
    case ErrorClass::QuotaExceeded: return "QuotaExceeded";
    case ErrorClass::RefreshFailed: return "RefreshFailed";
    case ErrorClass::CredentialExpired: return "CredentialExpired";
    case ErrorClass::StorageFull: return "StorageFull";
    case ErrorClass::JournalWrite: return "JournalWriteError";
    case ErrorClass::JournalCorrupt: return "JournalCorrupt";
    case ErrorClass::ReadError: return "ReadError";
    case ErrorClass::UnknownNode: return "UnknownNode";
    case ErrorClass::InvalidInterval: return "InvalidInterval";
    case ErrorClass::ZeroRate: return "ZeroRate";
    case ErrorClass::NoAvailableReplica: return "NoAvailableReplica";
    case ErrorClass::Bind: return "BindError";
    case ErrorClass::UnknownPath: return "UnknownPath";
    case ErrorClass::ProbeFailed: return "ProbeFailed";
  }
  return "Error";
}

ParseError::ParseError(int line, std::string reason)
    : Error(ErrorClass::Parse,
            (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + reason),
      line_(line),
      reason_(std::move(reason)) {}

namespace {

std::string describe_conflict(const std::string& path,
                              const std::vector<ReplicaConflict::Claim>& claims) {
  std::string out = "checksums disagree for '" + path + "':";
  for (const auto& [url, sum] : claims) out += " " + url + "=" + sum;
  return out;
}

}  // namespace

ReplicaConflict::ReplicaConflict(std::string path, std::vector<Claim> claims)
    : Error(ErrorClass::ReplicaConflict, describe_conflict(path, claims)),
      path_(std::move(path)),
      claims_(std::move(claims)) {}

QuotaExceeded::QuotaExceeded(std::uint64_t required, std::uint64_t available)
    : Error(ErrorClass::QuotaExceeded,
            "required " + std::to_string(required) + " bytes, quota " +
                std::to_string(available) + " bytes"),
      required_(required),
      available_(available) {}


int exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::Usage:
    case ErrorClass::Parse:
    case ErrorClass::ReplicaConflict:
    case ErrorClass::Config:
    case ErrorClass::InvalidInterval:
    case ErrorClass::ZeroRate:
    case ErrorClass::UnknownNode:
    case ErrorClass::Bind:
      return 2;
    case ErrorClass::QuotaExceeded:
      return 3;
    case ErrorClass::RefreshFailed:
    case ErrorClass::CredentialExpired:
      return 4;
    case ErrorClass::StorageFull:
    case ErrorClass::JournalWrite:
    case ErrorClass::JournalCorrupt:
    case ErrorClass::ReadError:
      return 5;
    case ErrorClass::NoAvailableReplica:
    case ErrorClass::UnknownPath:
    case ErrorClass::ProbeFailed:
      return 1;
  }
  return 1;
}

}  // namespace stage
