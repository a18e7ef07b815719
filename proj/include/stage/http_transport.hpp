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

#include <optional>
#include <string>
#include <string_view>

#include "stage/engine.hpp"
#include "stage/manifest.hpp"

namespace stage {

inline constexpr const char* kTokenHeader = "X-Stage-Token";
inline constexpr const char* kRelocatedHeader = "X-Relocated-To";

struct ParsedUrl {
  std::string origin;  // scheme://host:port
  std::string path;    // begins with '/'
};

std::optional<ParsedUrl> parse_url(std::string_view url);

// HTTP/1.1 binding of the data-node protocol: GET for content, HEAD for size,
// 401 = credential rejected, 410 (+ X-Relocated-To) = node gone, 404 = unknown.
// A new connection is opened per request, so one instance may be shared by
// all workers.
class HttpConnection final : public DataNodeConnection {
 public:
  explicit HttpConnection(int timeout_s = 30) : timeout_s_(timeout_s) {}

  FetchResult get(const std::string& url, const std::string& token_header,
                  const ByteSink& sink) override;
  HeadResult head(const std::string& url, const std::string& token_header) override;

 private:
  int timeout_s_;
};

// Size lookups over any DataNodeConnection.
class ConnectionSizeProber final : public SizeProber {
 public:
  ConnectionSizeProber(DataNodeConnection& conn, std::string token_header)
      : conn_(conn), token_(std::move(token_header)) {}

  SizeProbe probe_size(const FileEntry& entry) override;

 private:
  DataNodeConnection& conn_;
  std::string token_;
};

}  // namespace stage
