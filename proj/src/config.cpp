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

#include "stage/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stage/error.hpp"

namespace stage {

namespace {

constexpr std::string_view kKeys[] = {
    "global_limit",      "per_node_limit",        "quota_bytes",
    "quota_override",    "ewma_alpha",            "unknown_rate_prior",
    "staging_dir",       "credential_lifetime_s", "refresh_margin_s",
    "max_checksum_retries", "max_transport_retries", "verify_mode",
    "backoff_base_ms"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    throw Error(ErrorClass::Config,
                "bad value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(ErrorClass::Config, "bad boolean '" + std::string(value) + "' for " +
                                      std::string(key));
}

}  // namespace

void SchedulerConfig::validate() const {
  if (per_node_limit < 1 || per_node_limit > global_limit) {
    throw Error(ErrorClass::Config, "limits require 1 <= per_node_limit <= global_limit");
  }
  if (!(ewma_alpha > 0 && ewma_alpha <= 1)) {
    throw Error(ErrorClass::Config, "ewma_alpha must be in (0, 1]");
  }
  if (!(unknown_rate_prior > 0)) {
    throw Error(ErrorClass::Config, "unknown_rate_prior must be positive");
  }
  if (staging_dir.empty()) throw Error(ErrorClass::Config, "staging_dir is empty");
  credential.validate();
  retry.validate();
}

void SchedulerConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "global_limit") {
    global_limit = parse_number<int>(key, value);
  } else if (key == "per_node_limit") {
    per_node_limit = parse_number<int>(key, value);
  } else if (key == "quota_bytes") {
    if (value.empty() || value == "none") {
      quota_bytes.reset();
    } else {
      quota_bytes = parse_number<std::uint64_t>(key, value);
    }
  } else if (key == "quota_override") {
    quota_override = parse_bool(key, value);
  } else if (key == "ewma_alpha") {
    ewma_alpha = parse_number<double>(key, value);
  } else if (key == "unknown_rate_prior") {
    unknown_rate_prior = parse_number<double>(key, value);
  } else if (key == "staging_dir") {
    staging_dir = std::string(value);
  } else if (key == "credential_lifetime_s") {
    credential.lifetime_s = parse_number<std::int64_t>(key, value);
  } else if (key == "refresh_margin_s") {
    credential.refresh_margin_s = parse_number<std::int64_t>(key, value);
  } else if (key == "max_checksum_retries") {
    retry.max_checksum_retries = parse_number<int>(key, value);
  } else if (key == "max_transport_retries") {
    retry.max_transport_retries = parse_number<int>(key, value);
  } else if (key == "backoff_base_ms") {
    retry.backoff_base_ms = parse_number<std::int64_t>(key, value);
  } else if (key == "verify_mode") {
    if (value == "streamed") {
      verify_mode = VerifyMode::streamed;
    } else if (value == "posthoc") {
      verify_mode = VerifyMode::posthoc;
    } else {
      throw Error(ErrorClass::Config, "verify_mode must be streamed or posthoc");
    }
  } else {
    throw Error(ErrorClass::Config, "unknown config key '" + std::string(key) + "'");
  }
}

SchedulerConfig parse_config(std::string_view text,
                             const std::map<std::string, std::string>& env) {
  SchedulerConfig cfg;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorClass::Config, "line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorClass::Config, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (const auto key : kKeys) {
    std::string env_key = "STAGE_";
    for (char c : key) env_key.push_back(static_cast<char>(std::toupper(c)));
    if (auto it = env.find(env_key); it != env.end()) {
      try {
        cfg.set(key, it->second);
      } catch (const Error& e) {
        throw Error(ErrorClass::Config, env_key + ": " + e.what());
      }
    }
  }
  cfg.validate();
  return cfg;
}

SchedulerConfig load_config(const std::filesystem::path& file,
                            const std::map<std::string, std::string>& env) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorClass::Config, "cannot read config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), env);
}

std::map<std::string, std::string> stage_environment(const char* const* envp) {
  std::map<std::string, std::string> env;
  for (; envp && *envp; ++envp) {
    const std::string_view entry(*envp);
    if (!entry.starts_with("STAGE_")) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
  }
  return env;
}

std::string render_config(const SchedulerConfig& c) {
  std::ostringstream out;
  out << "global_limit = " << c.global_limit << "\n"
      << "per_node_limit = " << c.per_node_limit << "\n"
      << "quota_bytes = " << (c.quota_bytes ? std::to_string(*c.quota_bytes) : "none") << "\n"
      << "quota_override = " << (c.quota_override ? "true" : "false") << "\n"
      << "ewma_alpha = " << c.ewma_alpha << "\n"
      << "unknown_rate_prior = " << c.unknown_rate_prior << "\n"
      << "staging_dir = " << c.staging_dir.string() << "\n"
      << "credential_lifetime_s = " << c.credential.lifetime_s << "\n"
      << "refresh_margin_s = " << c.credential.refresh_margin_s << "\n"
      << "max_checksum_retries = " << c.retry.max_checksum_retries << "\n"
      << "max_transport_retries = " << c.retry.max_transport_retries << "\n"
      << "backoff_base_ms = " << c.retry.backoff_base_ms << "\n"
      << "verify_mode = " << (c.verify_mode == VerifyMode::streamed ? "streamed" : "posthoc")
      << "\n";
  return out.str();
}

std::filesystem::path journal_path(const SchedulerConfig& config) {
  return config.staging_dir / ".stage" / "journal";
}

std::filesystem::path samples_path(const SchedulerConfig& config) {
  return config.staging_dir / ".stage" / "samples.csv";
}

}  // namespace stage
