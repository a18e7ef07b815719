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
#include <optional>
#include <string>
#include <string_view>

#include "stage/credential.hpp"
#include "stage/engine.hpp"

namespace stage {

struct SchedulerConfig {
  int global_limit = 8;
  int per_node_limit = 4;
  std::optional<std::uint64_t> quota_bytes;
  bool quota_override = false;
  double ewma_alpha = 0.3;
  double unknown_rate_prior = 1e6;  // bytes/s
  std::filesystem::path staging_dir = "staging";
  CredentialPolicy credential;
  RetryPolicy retry;
  VerifyMode verify_mode = VerifyMode::streamed;

  // Throws Error(Config).
  void validate() const;
  // Applies one key; throws Error(Config) for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
};

// Flat "key = value" lines, '#' comments. Environment entries
// STAGE_<UPPERCASE_KEY> override file values. The result is validated.
SchedulerConfig parse_config(std::string_view text,
                             const std::map<std::string, std::string>& env = {});
SchedulerConfig load_config(const std::filesystem::path& file,
                            const std::map<std::string, std::string>& env = {});

// STAGE_* entries of a NULL-terminated environment block.
std::map<std::string, std::string> stage_environment(const char* const* envp);

std::string render_config(const SchedulerConfig& config);

// <staging_dir>/.stage/journal and <staging_dir>/.stage/samples.csv
std::filesystem::path journal_path(const SchedulerConfig& config);
std::filesystem::path samples_path(const SchedulerConfig& config);

}  // namespace stage
