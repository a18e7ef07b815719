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

#include "stage/credential.hpp"

#include <charconv>
#include <cstdio>
#include <random>

#include "stage/error.hpp"

namespace stage {

void CredentialPolicy::validate() const {
  if (!(refresh_margin_s > 0 && refresh_margin_s < lifetime_s)) {
    throw Error(ErrorClass::Config, "credential policy requires 0 < refresh_margin_s < lifetime_s");
  }
}

std::chrono::milliseconds remaining(const Credential& c, TimePoint now) {
  return c.expires_at - now;
}

bool needs_refresh(const Credential& c, TimePoint now, const CredentialPolicy& policy) {
  return remaining(c, now) <= std::chrono::seconds(policy.refresh_margin_s);
}

LocalCredentialProvider::LocalCredentialProvider(std::shared_ptr<const Clock> clock)
    : clock_(std::move(clock)) {}

Credential LocalCredentialProvider::issue(std::int64_t lifetime_s) {
  std::lock_guard lock(mu_);
  if (!healthy_) throw Error(ErrorClass::RefreshFailed, "credential provider unavailable");
  ++issued_;
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char token[33];
  std::snprintf(token, sizeof token, "%016llx%016llx",
                static_cast<unsigned long long>(rng()), static_cast<unsigned long long>(rng()));
  Credential c;
  c.id = "cred-" + std::to_string(issued_);
  c.token = token;
  c.issued_at = clock_->now();
  c.expires_at = c.issued_at + std::chrono::seconds(lifetime_s);
  return c;
}

void LocalCredentialProvider::set_healthy(bool healthy) {
  std::lock_guard lock(mu_);
  healthy_ = healthy;
}

int LocalCredentialProvider::issued_count() const {
  std::lock_guard lock(mu_);
  return issued_;
}

Credential ensure_fresh(CredentialProvider& provider, const std::optional<Credential>& current,
                        TimePoint now, const CredentialPolicy& policy) {
  if (current && !needs_refresh(*current, now, policy)) return *current;
  return provider.issue(policy.lifetime_s);
}

CredentialManager::CredentialManager(std::shared_ptr<CredentialProvider> provider,
                                     CredentialPolicy policy)
    : provider_(std::move(provider)), policy_(policy) {
  policy_.validate();
}

std::shared_ptr<const Credential> CredentialManager::current() const {
  std::lock_guard lock(read_mu_);
  return current_;
}

std::shared_ptr<const Credential> CredentialManager::ensure_fresh(TimePoint now) {
  std::lock_guard refresh_lock(refresh_mu_);
  auto cur = current();
  std::optional<Credential> existing;
  if (cur) existing = *cur;
  auto next = stage::ensure_fresh(*provider_, existing, now, policy_);
  if (cur && next == *cur) return cur;
  auto published = std::make_shared<const Credential>(std::move(next));
  {
    std::lock_guard lock(read_mu_);
    current_ = published;
    ++refreshes_;
  }
  return published;
}

int CredentialManager::refresh_count() const {
  std::lock_guard lock(read_mu_);
  return refreshes_;
}

std::string token_header_value(const Credential& c) {
  return c.id + ":" + std::to_string(to_unix_seconds(c.expires_at));
}

std::optional<TokenClaims> parse_token_header(std::string_view value) {
  const auto colon = value.rfind(':');
  if (colon == std::string_view::npos || colon == 0) return std::nullopt;
  TokenClaims claims;
  claims.id = std::string(value.substr(0, colon));
  const auto digits = value.substr(colon + 1);
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), claims.expires_unix_s);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return claims;
}

}  // namespace stage
