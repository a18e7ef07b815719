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

#include "stage/simnode.hpp"

#include <fnmatch.h>
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "stage/content.hpp"
#include "stage/credential.hpp"
#include "stage/error.hpp"
#include "stage/http_transport.hpp"

namespace stage {

using json = nlohmann::json;

std::string_view to_string(FaultSpec::Kind kind) {
  switch (kind) {
    case FaultSpec::Kind::wrong_published_checksum: return "wrong_published_checksum";
    case FaultSpec::Kind::corrupt_first_n: return "corrupt_first_n";
    case FaultSpec::Kind::gone_after: return "gone_after";
    case FaultSpec::Kind::reject_all_tokens: return "reject_all_tokens";
    case FaultSpec::Kind::drop_connection: return "drop_connection";
  }
  return "?";
}

namespace {

std::optional<FaultSpec::Kind> fault_kind_from(std::string_view name) {
  for (auto k : {FaultSpec::Kind::wrong_published_checksum, FaultSpec::Kind::corrupt_first_n,
                 FaultSpec::Kind::gone_after, FaultSpec::Kind::reject_all_tokens,
                 FaultSpec::Kind::drop_connection}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

void validate_fault(const FaultSpec& f) {
  if (f.match.empty()) throw Error(ErrorClass::Config, "fault glob is empty");
  if (f.kind == FaultSpec::Kind::corrupt_first_n && f.n < 1) {
    throw Error(ErrorClass::Config, "corrupt_first_n requires n >= 1");
  }
  if (f.kind == FaultSpec::Kind::drop_connection && !(f.p >= 0 && f.p <= 1)) {
    throw Error(ErrorClass::Config, "drop_connection requires 0 <= p <= 1");
  }
  if (f.kind == FaultSpec::Kind::gone_after && f.t_s < 0) {
    throw Error(ErrorClass::Config, "gone_after requires t >= 0");
  }
}

bool glob_match(const std::string& pattern, const std::string& path) {
  return ::fnmatch(pattern.c_str(), path.c_str(), 0) == 0;
}

FaultSpec fault_from_json(const json& j) {
  FaultSpec f;
  const auto kind = fault_kind_from(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorClass::Config, "unknown fault kind");
  f.kind = *kind;
  f.match = j.value("match", std::string("*"));
  f.n = j.value("n", 1);
  f.t_s = j.value("t", 0.0);
  f.p = j.value("p", 0.0);
  if (j.contains("relocation") && !j["relocation"].is_null()) {
    f.relocation_url = j["relocation"].get<std::string>();
  }
  validate_fault(f);
  return f;
}

}  // namespace

FaultSpec parse_fault(std::string_view text) {
  const auto tok = split_ws(text);
  if (tok.size() < 2) throw Error(ErrorClass::Config, "fault needs '<kind> <glob>'");
  const auto kind = fault_kind_from(tok[0]);
  if (!kind) throw Error(ErrorClass::Config, "unknown fault kind '" + tok[0] + "'");
  FaultSpec f;
  f.kind = *kind;
  f.match = tok[1];
  try {
    switch (f.kind) {
      case FaultSpec::Kind::corrupt_first_n:
        if (tok.size() != 3) throw Error(ErrorClass::Config, "corrupt_first_n <glob> <n>");
        f.n = std::stoi(tok[2]);
        break;
      case FaultSpec::Kind::gone_after:
        if (tok.size() < 3 || tok.size() > 4) {
          throw Error(ErrorClass::Config, "gone_after <glob> <t_s> [relocation_url]");
        }
        f.t_s = std::stod(tok[2]);
        if (tok.size() == 4) f.relocation_url = tok[3];
        break;
      case FaultSpec::Kind::drop_connection:
        if (tok.size() != 3) throw Error(ErrorClass::Config, "drop_connection <glob> <p>");
        f.p = std::stod(tok[2]);
        break;
      case FaultSpec::Kind::wrong_published_checksum:
      case FaultSpec::Kind::reject_all_tokens:
        if (tok.size() != 2) throw Error(ErrorClass::Config, tok[0] + " <glob>");
        break;
    }
  } catch (const std::invalid_argument&) {
    throw Error(ErrorClass::Config, "bad fault argument in '" + std::string(text) + "'");
  } catch (const std::out_of_range&) {
    throw Error(ErrorClass::Config, "bad fault argument in '" + std::string(text) + "'");
  }
  validate_fault(f);
  return f;
}

std::string format_fault(const FaultSpec& f) {
  std::ostringstream out;
  out << to_string(f.kind) << ' ' << f.match;
  switch (f.kind) {
    case FaultSpec::Kind::corrupt_first_n: out << ' ' << f.n; break;
    case FaultSpec::Kind::gone_after:
      out << ' ' << f.t_s;
      if (f.relocation_url) out << ' ' << *f.relocation_url;
      break;
    case FaultSpec::Kind::drop_connection: out << ' ' << f.p; break;
    default: break;
  }
  return out.str();
}

void SimNodeConfig::validate() const {
  if (bandwidth_bytes_per_sec && *bandwidth_bytes_per_sec == 0) {
    throw Error(ErrorClass::Config, "node " + name + ": bandwidth must be > 0");
  }
  std::vector<std::string> paths;
  for (const auto& c : catalog) {
    if (!valid_relative_path(c.path)) {
      throw Error(ErrorClass::Config, "node " + name + ": bad catalog path " + c.path);
    }
    paths.push_back(c.path);
  }
  std::sort(paths.begin(), paths.end());
  if (std::adjacent_find(paths.begin(), paths.end()) != paths.end()) {
    throw Error(ErrorClass::Config, "node " + name + ": duplicate catalog path");
  }
  for (const auto& f : faults) validate_fault(f);
}

std::vector<SimNodeConfig> parse_fleet_config(std::string_view text) {
  std::vector<SimNodeConfig> nodes;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || !line.starts_with("[node ")) {
        throw ParseError(line_no, "expected '[node <name>]'");
      }
      SimNodeConfig cfg;
      cfg.name = std::string(trim(line.substr(6, line.size() - 7)));
      if (cfg.name.empty()) throw ParseError(line_no, "empty node name");
      nodes.push_back(std::move(cfg));
      continue;
    }
    if (nodes.empty()) throw ParseError(line_no, "key outside a [node] section");
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = std::string(trim(line.substr(eq + 1)));
    auto& cfg = nodes.back();
    try {
      if (key == "listen") {
        const auto colon = value.rfind(':');
        if (colon == std::string::npos) throw ParseError(line_no, "listen = host:port");
        cfg.listen_host = value.substr(0, colon);
        cfg.port = std::stoi(value.substr(colon + 1));
      } else if (key == "bandwidth_bytes_per_sec") {
        if (value == "unlimited") {
          cfg.bandwidth_bytes_per_sec.reset();
        } else {
          cfg.bandwidth_bytes_per_sec = static_cast<std::uint64_t>(std::stod(value));
        }
      } else if (key == "latency_ms") {
        cfg.latency_ms = std::stoi(value);
      } else if (key == "content_seed") {
        cfg.content_seed = std::stoull(value);
      } else if (key == "checksum_type") {
        const auto t = checksum_type_from_string(value);
        if (!t) throw ParseError(line_no, "unknown checksum type");
        cfg.checksum_type = *t;
      } else if (key == "file") {
        const auto tok = split_ws(value);
        if (tok.size() != 2) throw ParseError(line_no, "file = <path> <size>");
        cfg.catalog.push_back({tok[0], std::stoull(tok[1])});
      } else if (key == "fault") {
        cfg.faults.push_back(parse_fault(value));
      } else {
        throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ParseError(line_no, "bad value for " + std::string(key));
    } catch (const std::out_of_range&) {
      throw ParseError(line_no, "bad value for " + std::string(key));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  for (const auto& n : nodes) n.validate();
  return nodes;
}

TokenBucket::TokenBucket(double rate_bytes_per_sec, double capacity_bytes)
    : rate_(rate_bytes_per_sec),
      capacity_(capacity_bytes),
      tokens_(capacity_bytes),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::consume(std::size_t bytes) {
  double wait_s = 0;
  {
    std::lock_guard lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    tokens_ = std::min(capacity_,
                       tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
    last_ = now;
    tokens_ -= static_cast<double>(bytes);
    if (tokens_ < 0) wait_s = -tokens_ / rate_;
  }
  if (wait_s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
}

std::size_t throttle_chunk_bytes(std::optional<std::uint64_t> rate) {
  if (!rate) return 64 * 1024;
  const auto ten_ms = static_cast<std::size_t>(*rate / 100);
  return std::clamp<std::size_t>(ten_ms, 256, 64 * 1024);
}

namespace {

constexpr std::string_view kProbePrefix = "__probe__/";

struct Counter {
  std::atomic<int> current{0};
  std::atomic<int> peak{0};

  void enter() {
    const int now = ++current;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
  }
  void leave() { --current; }
};

double unit_random(std::uint64_t seed, const std::string& path, std::uint64_t attempt) {
  std::uint64_t z = content_key(seed, path) + attempt * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) / 9007199254740992.0;
}

}  // namespace

struct SimFleet::Shared {
  std::shared_ptr<OffsetClock> clock;
  TimePoint started{};
  Counter global;
};

struct SimFleet::Node {
  SimNodeConfig config;
  std::shared_ptr<Shared> shared;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::optional<TokenBucket> bucket;
  std::size_t chunk = 0;
  Counter inflight;
  std::atomic<std::uint64_t> bytes_served{0};

  mutable std::mutex mu;
  std::vector<FaultSpec> faults;
  std::map<std::string, std::uint64_t> gets;
  std::map<std::string, std::uint64_t> sizes;
  mutable std::map<std::string, std::string> digests;

  std::string node_id() const { return config.listen_host + ":" + std::to_string(port); }
  std::string base_url() const { return "http://" + node_id(); }

  std::vector<FaultSpec> faults_for(const std::string& path) const {
    std::lock_guard lock(mu);
    std::vector<FaultSpec> out;
    for (const auto& f : faults) {
      if (glob_match(f.match, path)) out.push_back(f);
    }
    return out;
  }

  std::string clean_digest(const std::string& path) const {
    std::lock_guard lock(mu);
    auto it = digests.find(path);
    if (it != digests.end()) return it->second;
    const auto size = sizes.at(path);
    auto d = content_digest(config.content_seed, path, size, config.checksum_type);
    digests.emplace(path, d);
    return d;
  }

  void serve(const httplib::Request& req, httplib::Response& res);
  void install_routes();
};

void SimFleet::Node::serve(const httplib::Request& req, httplib::Response& res) {
  const std::string path = req.matches[1];
  if (config.latency_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(config.latency_ms));
  }
  const auto now = shared->clock->now();
  const auto faults = faults_for(path);

  for (const auto& f : faults) {
    if (f.kind != FaultSpec::Kind::gone_after) continue;
    const auto deadline =
        shared->started + std::chrono::milliseconds(static_cast<std::int64_t>(f.t_s * 1000));
    if (now >= deadline) {
      res.status = 410;
      if (f.relocation_url) res.set_header(kRelocatedHeader, *f.relocation_url + path);
      res.set_content("gone\n", "text/plain");
      return;
    }
  }
  const bool reject_all = std::any_of(faults.begin(), faults.end(), [](const FaultSpec& f) {
    return f.kind == FaultSpec::Kind::reject_all_tokens;
  });
  const auto claims = parse_token_header(req.get_header_value(kTokenHeader));
  if (reject_all || !claims || claims->expires_unix_s < to_unix_seconds(now)) {
    res.status = 401;
    res.set_content("credential rejected\n", "text/plain");
    return;
  }

  std::uint64_t size = 0;
  if (path.starts_with(kProbePrefix)) {
    const auto n = std::string_view(path).substr(kProbePrefix.size());
    auto [ptr, ec] = std::from_chars(n.data(), n.data() + n.size(), size);
    if (ec != std::errc() || ptr != n.data() + n.size()) {
      res.status = 404;
      return;
    }
  } else {
    std::lock_guard lock(mu);
    auto it = sizes.find(path);
    if (it == sizes.end()) {
      res.status = 404;
      res.set_content("not found\n", "text/plain");
      return;
    }
    size = it->second;
  }

  if (req.method == "HEAD") {
    res.set_header("Content-Length", std::to_string(size));
    return;
  }

  std::uint64_t attempt = 0;
  {
    std::lock_guard lock(mu);
    attempt = ++gets[path];
  }
  bool corrupt = false;
  bool drop = false;
  for (const auto& f : faults) {
    if (f.kind == FaultSpec::Kind::corrupt_first_n && attempt <= static_cast<std::uint64_t>(f.n)) {
      corrupt = true;
    }
    if (f.kind == FaultSpec::Kind::drop_connection &&
        unit_random(config.content_seed, path, attempt) < f.p) {
      drop = true;
    }
  }
  if (size == 0) {
    res.set_content("", "application/octet-stream");
    return;
  }

  struct Flight {
    Node* node;
    bool open = true;
    void close() {
      if (open) {
        open = false;
        node->inflight.leave();
        node->shared->global.leave();
      }
    }
  };
  inflight.enter();
  shared->global.enter();
  auto flight = std::make_shared<Flight>(Flight{this});
  const auto key = content_key(config.content_seed, path);
  const auto flip_at = size / 2;

  res.set_content_provider(
      static_cast<std::size_t>(size), "application/octet-stream",
      [this, flight, key, size, flip_at, corrupt, drop](std::size_t offset, std::size_t length,
                                                         httplib::DataSink& sink) {
        if (drop && offset >= size / 2) return false;
        const auto n = std::min(length, chunk);
        std::vector<std::byte> buf(n);
        generate_content(key, offset, buf);
        if (corrupt && flip_at >= offset && flip_at < offset + n) {
          buf[flip_at - offset] ^= std::byte{0xff};
        }
        if (bucket) bucket->consume(n);
        // Leave before the last byte reaches the client so a follow-up
        // request can never observe this transfer as still running.
        if (offset + n == size) flight->close();
        bytes_served += n;
        return sink.write(reinterpret_cast<const char*>(buf.data()), n);
      },
      [flight](bool) { flight->close(); });
}

void SimFleet::Node::install_routes() {
  server.Get("/admin/inflight", [this](const httplib::Request&, httplib::Response& res) {
    json j{{"node", node_id()},
           {"inflight", inflight.current.load()},
           {"peak", inflight.peak.load()},
           {"global_inflight", shared->global.current.load()},
           {"global_peak", shared->global.peak.load()}};
    res.set_content(j.dump(), "application/json");
  });
  server.Post("/admin/inflight/reset", [this](const httplib::Request&, httplib::Response& res) {
    inflight.peak = inflight.current.load();
    shared->global.peak = shared->global.current.load();
    res.set_content("{}", "application/json");
  });
  server.Post("/admin/fault", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      auto f = fault_from_json(json::parse(req.body));
      std::lock_guard lock(mu);
      faults.push_back(std::move(f));
      res.set_content("{}", "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
  server.Post("/admin/fault/clear", [this](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mu);
    faults.clear();
    res.set_content("{}", "application/json");
  });
  server.Post("/admin/clock", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto j = json::parse(req.body);
      const double s = j.at("advance_s").get<double>();
      if (s < 0) throw std::invalid_argument("advance_s must be >= 0");
      shared->clock->advance(std::chrono::milliseconds(static_cast<std::int64_t>(s * 1000)));
      res.set_content(json{{"now", format_iso8601(shared->clock->now())}}.dump(),
                      "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
  server.Get("/admin/stats", [this](const httplib::Request&, httplib::Response& res) {
    json gets_json = json::object();
    {
      std::lock_guard lock(mu);
      for (const auto& [p, n] : gets) gets_json[p] = n;
    }
    res.set_content(json{{"gets", gets_json}, {"bytes_served", bytes_served.load()}}.dump(),
                    "application/json");
  });
  server.Get("/(.+)", [this](const httplib::Request& req, httplib::Response& res) {
    serve(req, res);
  });
}

std::unique_ptr<SimFleet> SimFleet::start(std::vector<SimNodeConfig> configs,
                                          std::shared_ptr<const Clock> clock) {
  std::unique_ptr<SimFleet> fleet(new SimFleet());
  fleet->shared_ = std::make_shared<Shared>();
  fleet->shared_->clock = std::make_shared<OffsetClock>(std::move(clock));
  fleet->shared_->started = fleet->shared_->clock->now();

  for (auto& cfg : configs) {
    cfg.validate();
    auto node = std::make_unique<Node>();
    node->config = std::move(cfg);
    node->shared = fleet->shared_;
    node->faults = node->config.faults;
    for (const auto& c : node->config.catalog) node->sizes[c.path] = c.size;
    node->chunk = throttle_chunk_bytes(node->config.bandwidth_bytes_per_sec);
    if (node->config.bandwidth_bytes_per_sec) {
      node->bucket.emplace(static_cast<double>(*node->config.bandwidth_bytes_per_sec),
                           static_cast<double>(node->chunk));
    }
    node->server.new_task_queue = [] { return new httplib::ThreadPool(12); };
    node->server.set_keep_alive_max_count(1);
    // SO_REUSEADDR only: the library default of SO_REUSEPORT would let a
    // second fleet silently share a port.
    node->server.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    node->install_routes();
    if (node->config.port == 0) {
      node->port = node->server.bind_to_any_port(node->config.listen_host);
    } else if (node->server.bind_to_port(node->config.listen_host, node->config.port)) {
      node->port = node->config.port;
    } else {
      node->port = -1;
    }
    if (node->port <= 0) {
      fleet->stop();
      throw Error(ErrorClass::Bind, "cannot bind " + node->config.listen_host + ":" +
                                        std::to_string(node->config.port));
    }
    auto* raw = node.get();
    node->thread = std::thread([raw] { raw->server.listen_after_bind(); });
    raw->server.wait_until_ready();
    fleet->nodes_.push_back(std::move(node));
  }
  return fleet;
}

SimFleet::~SimFleet() { stop(); }

void SimFleet::stop() {
  for (auto& n : nodes_) {
    n->server.stop();
    if (n->thread.joinable()) n->thread.join();
  }
}

std::size_t SimFleet::size() const { return nodes_.size(); }

const SimNodeConfig& SimFleet::config(std::size_t node) const { return nodes_.at(node)->config; }

std::string SimFleet::base_url(std::size_t node) const { return nodes_.at(node)->base_url(); }

std::string SimFleet::node_id(std::size_t node) const { return nodes_.at(node)->node_id(); }

std::string SimFleet::url_for(std::size_t node, std::string_view path) const {
  return base_url(node) + "/" + std::string(path);
}

std::string SimFleet::served_digest(std::size_t node, const std::string& path) const {
  const auto& n = *nodes_.at(node);
  {
    std::lock_guard lock(n.mu);
    if (!n.sizes.count(path)) throw Error(ErrorClass::UnknownPath, "not in catalog: " + path);
  }
  return n.clean_digest(path);
}

std::string SimFleet::publish_manifest(std::size_t node, std::span<const std::string> paths,
                                       const std::string& dataset_id) const {
  const auto& n = *nodes_.at(node);
  std::vector<std::string> chosen(paths.begin(), paths.end());
  if (chosen.empty()) {
    for (const auto& c : n.config.catalog) chosen.push_back(c.path);
  }
  Manifest m;
  m.dataset_id = dataset_id;
  for (const auto& path : chosen) {
    std::uint64_t size = 0;
    {
      std::lock_guard lock(n.mu);
      auto it = n.sizes.find(path);
      if (it == n.sizes.end()) throw Error(ErrorClass::UnknownPath, "not in catalog: " + path);
      size = it->second;
    }
    auto hex = n.clean_digest(path);
    for (const auto& f : n.faults_for(path)) {
      if (f.kind == FaultSpec::Kind::wrong_published_checksum) {
        const int nibble = hex[0] <= '9' ? hex[0] - '0' : hex[0] - 'a' + 10;
        hex[0] = "0123456789abcdef"[nibble ^ 0xf];
        break;
      }
    }
    m.entries.push_back({path, url_for(node, path), n.config.checksum_type, hex, size});
  }
  return serialize_manifest(m);
}

std::string SimFleet::publish_manifest(std::size_t node, const std::string& dataset_id) const {
  return publish_manifest(node, std::span<const std::string>(), dataset_id);
}

void SimFleet::add_fault(std::size_t node, FaultSpec fault) {
  validate_fault(fault);
  auto& n = *nodes_.at(node);
  std::lock_guard lock(n.mu);
  n.faults.push_back(std::move(fault));
}

void SimFleet::clear_faults(std::size_t node) {
  auto& n = *nodes_.at(node);
  std::lock_guard lock(n.mu);
  n.faults.clear();
}

void SimFleet::advance_clock(std::chrono::milliseconds d) { shared_->clock->advance(d); }

TimePoint SimFleet::now() const { return shared_->clock->now(); }

InflightStats SimFleet::inflight(std::size_t node) const {
  const auto& n = *nodes_.at(node);
  return {n.inflight.current.load(), n.inflight.peak.load()};
}

InflightStats SimFleet::global_inflight() const {
  return {shared_->global.current.load(), shared_->global.peak.load()};
}

void SimFleet::reset_peaks() {
  for (auto& n : nodes_) n->inflight.peak = n->inflight.current.load();
  shared_->global.peak = shared_->global.current.load();
}

std::uint64_t SimFleet::get_count(std::size_t node, const std::string& path) const {
  const auto& n = *nodes_.at(node);
  std::lock_guard lock(n.mu);
  auto it = n.gets.find(path);
  return it == n.gets.end() ? 0 : it->second;
}

std::uint64_t SimFleet::total_gets() const {
  std::uint64_t total = 0;
  for (const auto& n : nodes_) {
    std::lock_guard lock(n->mu);
    for (const auto& [p, c] : n->gets) total += c;
  }
  return total;
}

std::uint64_t SimFleet::bytes_served(std::size_t node) const {
  return nodes_.at(node)->bytes_served.load();
}

void SimFleet::reset_counters() {
  for (auto& n : nodes_) {
    std::lock_guard lock(n->mu);
    n->gets.clear();
    n->bytes_served = 0;
  }
}

std::string SimFleet::describe() const {
  std::string out;
  for (const auto& n : nodes_) out += "node " + n->config.name + " " + n->base_url() + "\n";
  return out;
}

}  // namespace stage
