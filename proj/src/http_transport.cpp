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

#include "stage/http_transport.hpp"

#include <httplib.h>

namespace stage {

std::optional<ParsedUrl> parse_url(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) return std::nullopt;
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string_view::npos || slash == scheme + 3) return std::nullopt;
  return ParsedUrl{std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

namespace {

FetchResult::Status classify(int status) {
  switch (status) {
    case 200: return FetchResult::Status::Ok;
    case 401: return FetchResult::Status::Unauthorized;
    case 404: return FetchResult::Status::NotFound;
    case 410: return FetchResult::Status::Gone;
    default: return FetchResult::Status::TransportError;
  }
}

void configure(httplib::Client& cli, int timeout_s) {
  cli.set_connection_timeout(timeout_s, 0);
  cli.set_read_timeout(timeout_s, 0);
  cli.set_write_timeout(timeout_s, 0);
  cli.set_keep_alive(false);
}

}  // namespace

FetchResult HttpConnection::get(const std::string& url, const std::string& token_header,
                                const ByteSink& sink) {
  FetchResult out;
  const auto parsed = parse_url(url);
  if (!parsed) {
    out.detail = "bad url " + url;
    return out;
  }
  httplib::Client cli(parsed->origin);
  configure(cli, timeout_s_);
  bool sink_failed = false;
  httplib::Headers headers{{kTokenHeader, token_header}};
  auto res = cli.Get(
      parsed->path, headers,
      [&](const httplib::Response& r) {
        out.http_status = r.status;
        if (r.has_header(kRelocatedHeader)) out.relocated_to = r.get_header_value(kRelocatedHeader);
        return true;
      },
      [&](const char* data, size_t len) {
        // Bodies of error responses are informational only.
        if (out.http_status != 200) return true;
        if (!sink(std::as_bytes(std::span(data, len)))) {
          sink_failed = true;
          return false;
        }
        return true;
      });
  if (sink_failed) {
    out.status = FetchResult::Status::SinkFailed;
    out.detail = "local write failed";
    return out;
  }
  if (!res) {
    out.status = FetchResult::Status::TransportError;
    out.detail = "transport error: " + httplib::to_string(res.error()) + " for " + url;
    return out;
  }
  out.http_status = res->status;
  out.status = classify(res->status);
  if (out.status == FetchResult::Status::TransportError) {
    out.detail = "HTTP " + std::to_string(res->status) + " for " + url;
  }
  return out;
}

HeadResult HttpConnection::head(const std::string& url, const std::string& token_header) {
  HeadResult out;
  const auto parsed = parse_url(url);
  if (!parsed) {
    out.detail = "bad url " + url;
    return out;
  }
  httplib::Client cli(parsed->origin);
  configure(cli, timeout_s_);
  auto res = cli.Head(parsed->path, httplib::Headers{{kTokenHeader, token_header}});
  if (!res) {
    out.detail = "transport error: " + httplib::to_string(res.error()) + " for " + url;
    return out;
  }
  out.status = classify(res->status);
  if (out.status != FetchResult::Status::Ok) {
    out.detail = "HTTP " + std::to_string(res->status) + " for " + url;
    return out;
  }
  if (!res->has_header("Content-Length")) {
    out.status = FetchResult::Status::TransportError;
    out.detail = "no Content-Length for " + url;
    return out;
  }
  try {
    out.size = std::stoull(res->get_header_value("Content-Length"));
  } catch (const std::exception&) {
    out.status = FetchResult::Status::TransportError;
    out.detail = "bad Content-Length for " + url;
  }
  return out;
}

SizeProbe ConnectionSizeProber::probe_size(const FileEntry& entry) {
  auto head = conn_.head(entry.url, token_);
  return {head.size, head.detail};
}

}  // namespace stage
