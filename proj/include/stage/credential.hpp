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
#include <string>
#include <string_view>

#include "stage/clock.hpp"

namespace stage {

struct Credential {
  std::string id;
  std::string token;  // opaque
  TimePoint issued_at;
  TimePoint expires_at;

  bool operator==(const Credential&) const = default;
};

struct CredentialPolicy {
  std::int64_t lifetime_s = 259200;
  std::int64_t refresh_margin_s = 86400;

  // Throws Error(Config) unless 0 < refresh_margin_s < lifetime_s.
  void validate() const;
};

// expires_at - now; negative once expired.
std::chrono::milliseconds remaining(const Credential& c, TimePoint now);

// Inclusive at the margin boundary.
bool needs_refresh(const Credential& c, TimePoint now, const CredentialPolicy& policy);

class CredentialProvider {
 public:
  virtual ~CredentialProvider() = default;
  // Throws Error(RefreshFailed) when the provider is unreachable or denies.
  virtual Credential issue(std::int64_t lifetime_s) = 0;
};

// In-process issuer used by the CLI and the simulated fleet.
class LocalCredentialProvider final : public CredentialProvider {
 public:
  explicit LocalCredentialProvider(std::shared_ptr<const Clock> clock);

  Credential issue(std::int64_t lifetime_s) override;

  void set_healthy(bool healthy);
  int issued_count() const;

 private:
  std::shared_ptr<const Clock> clock_;
  mutable std::mutex mu_;
  bool healthy_ = true;
  int issued_ = 0;
};

Credential ensure_fresh(CredentialProvider& provider, const std::optional<Credential>& current,
                        TimePoint now, const CredentialPolicy& policy);

// Holds the current credential for concurrent readers; refreshes are
// serialized and publish the new credential with a single pointer swap.
class CredentialManager {
 public:
  CredentialManager(std::shared_ptr<CredentialProvider> provider, CredentialPolicy policy);

  std::shared_ptr<const Credential> current() const;
  std::shared_ptr<const Credential> ensure_fresh(TimePoint now);
  int refresh_count() const;
  const CredentialPolicy& policy() const { return policy_; }

 private:
  std::shared_ptr<CredentialProvider> provider_;
  CredentialPolicy policy_;
  mutable std::mutex refresh_mu_;
  mutable std::mutex read_mu_;
  std::shared_ptr<const Credential> current_;
  int refreshes_ = 0;
};

// Value of the X-Stage-Token header: "<id>:<expiry unix seconds>".
std::string token_header_value(const Credential& c);

struct TokenClaims {
  std::string id;
  std::int64_t expires_unix_s = 0;
};

std::optional<TokenClaims> parse_token_header(std::string_view value);

}  // namespace stage
