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

#include "stage/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "stage/error.hpp"

namespace stage {

std::string_view to_string(ChecksumType type) {
  return type == ChecksumType::md5 ? "md5" : "sha256";
}

std::optional<ChecksumType> checksum_type_from_string(std::string_view name) {
  if (name == "md5") return ChecksumType::md5;
  if (name == "sha256") return ChecksumType::sha256;
  return std::nullopt;
}

std::size_t hex_length(ChecksumType type) { return type == ChecksumType::md5 ? 32 : 64; }

bool valid_relative_path(std::string_view path) {
  if (path.empty() || path.front() == '/' || path.find('\'') != std::string_view::npos) {
    return false;
  }
  if (path.find('\n') != std::string_view::npos || path.find('\r') != std::string_view::npos) {
    return false;
  }
  std::size_t start = 0;
  bool first = true;
  while (true) {
    const auto slash = path.find('/', start);
    const auto seg = path.substr(start, slash == std::string_view::npos ? slash : slash - start);
    if (seg.empty() || seg == "." || seg == "..") return false;
    if (first && seg == ".stage") return false;
    first = false;
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return true;
}

std::string node_id_of(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) return {};
  const auto rest = url.substr(scheme + 3);
  return std::string(rest.substr(0, rest.find('/')));
}

namespace {

bool valid_url(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos || scheme == 0) return false;
  const auto rest = url.substr(scheme + 3);
  const auto slash = rest.find('/');
  if (slash == std::string_view::npos || slash == 0) return false;
  return url.find_first_of(" \t'") == std::string_view::npos;
}

// Splits a file record body into quoted fields and an optional trailing
// unquoted token. Returns a reason on failure.
std::optional<std::string> split_fields(std::string_view body, std::vector<std::string>& quoted,
                                        std::optional<std::string>& trailing) {
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '\'') {
      const auto close = body.find('\'', i + 1);
      if (close == std::string_view::npos) return "bad quoting";
      quoted.emplace_back(body.substr(i + 1, close - i - 1));
      i = close + 1;
      if (i < body.size()) {
        if (body[i] != ' ') return "bad quoting";
        ++i;
        if (i == body.size()) return "trailing space";
      }
    } else {
      const auto token = body.substr(i);
      if (token.find_first_of(" '") != std::string_view::npos) return "bad quoting";
      trailing = std::string(token);
      break;
    }
  }
  return std::nullopt;
}

bool is_lower_hex(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

}  // namespace

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  bool have_header = false;
  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, std::pair<ChecksumType, std::string>> sums;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    if (line.starts_with("dataset ")) {
      if (have_header) throw ParseError(line_no, "duplicate dataset header");
      const auto id = line.substr(8);
      if (id.empty() || id.find_first_of(" \t'") != std::string_view::npos) {
        throw ParseError(line_no, "bad dataset id");
      }
      m.dataset_id = std::string(id);
      have_header = true;
      continue;
    }
    if (!line.starts_with("file ")) throw ParseError(line_no, "unknown record");
    if (!have_header) throw ParseError(line_no, "missing dataset header");

    std::vector<std::string> quoted;
    std::optional<std::string> trailing;
    if (auto err = split_fields(line.substr(5), quoted, trailing)) {
      throw ParseError(line_no, *err);
    }
    if (quoted.size() != 4) throw ParseError(line_no, "field count");

    FileEntry e;
    e.relative_path = quoted[0];
    e.url = quoted[1];
    if (!valid_relative_path(e.relative_path)) throw ParseError(line_no, "bad path");
    if (!valid_url(e.url)) throw ParseError(line_no, "bad url");
    const auto type = checksum_type_from_string(quoted[2]);
    if (!type) throw ParseError(line_no, "unknown checksum type");
    e.checksum_type = *type;
    e.checksum_hex = quoted[3];
    std::transform(e.checksum_hex.begin(), e.checksum_hex.end(), e.checksum_hex.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (e.checksum_hex.size() != hex_length(e.checksum_type)) {
      throw ParseError(line_no, "bad hex length");
    }
    if (!is_lower_hex(e.checksum_hex)) throw ParseError(line_no, "bad hex");
    if (trailing) {
      std::uint64_t size = 0;
      const auto* first = trailing->data();
      const auto* last = first + trailing->size();
      auto [ptr, ec] = std::from_chars(first, last, size);
      if (ec != std::errc() || ptr != last) throw ParseError(line_no, "bad size");
      e.size_bytes = size;
    }

    if (!seen.emplace(e.relative_path, e.url).second) {
      throw ParseError(line_no, "duplicate (path,url)");
    }
    auto [it, inserted] = sums.try_emplace(e.relative_path, e.checksum_type, e.checksum_hex);
    if (!inserted && it->second != std::make_pair(e.checksum_type, e.checksum_hex)) {
      throw ParseError(line_no, "checksum conflict on same path");
    }
    m.entries.push_back(std::move(e));
  }
  if (!have_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing dataset header");
  if (!m.entries.empty()) m.source_node = node_id_of(m.entries.front().url);
  return m;
}

Manifest load_manifest(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorClass::ReadError, "cannot read manifest " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

std::string serialize_manifest(const Manifest& manifest) {
  std::string out = "dataset " + manifest.dataset_id + "\n";
  for (const auto& e : manifest.entries) {
    out += "file '" + e.relative_path + "' '" + e.url + "' '" +
           std::string(to_string(e.checksum_type)) + "' '" + e.checksum_hex + "'";
    if (e.size_bytes) out += " " + std::to_string(*e.size_bytes);
    out += "\n";
  }
  return out;
}

namespace {

void add_dirs(const std::string& path, std::set<std::string>& dirs) {
  for (auto slash = path.find('/'); slash != std::string::npos; slash = path.find('/', slash + 1)) {
    dirs.insert(path.substr(0, slash));
  }
}

DatasetSummary summarize_with(std::span<const Manifest> manifests, SizeProber* prober) {
  DatasetSummary s;
  std::map<std::string, std::optional<std::uint64_t>> sizes;
  std::map<std::string, const FileEntry*> first_entry;
  std::set<std::string> dirs;
  for (const auto& m : manifests) {
    for (const auto& e : m.entries) {
      auto [it, inserted] = sizes.try_emplace(e.relative_path, e.size_bytes);
      if (inserted) {
        first_entry[e.relative_path] = &e;
        add_dirs(e.relative_path, dirs);
      } else if (!it->second && e.size_bytes) {
        it->second = e.size_bytes;
      }
    }
  }
  for (auto& [path, size] : sizes) {
    if (!size && prober) {
      // Try each replica until one answers.
      for (const auto& m : manifests) {
        for (const auto& e : m.entries) {
          if (size || e.relative_path != path) continue;
          auto probe = prober->probe_size(e);
          if (probe.size) {
            size = probe.size;
          } else {
            s.warnings.push_back("size probe failed for '" + path + "' via " + e.url + ": " +
                                 probe.error);
          }
        }
      }
    }
    if (size) {
      s.total_bytes += *size;
    } else {
      ++s.unknown_size_count;
    }
  }
  s.file_count = sizes.size();
  s.dir_count = dirs.size();
  s.lower_bound = s.unknown_size_count > 0;
  return s;
}

}  // namespace

DatasetSummary summarize(const Manifest& manifest) {
  return summarize_with(std::span(&manifest, 1), nullptr);
}

DatasetSummary summarize(std::span<const Manifest> manifests) {
  return summarize_with(manifests, nullptr);
}

DatasetSummary estimate_size(const Manifest& manifest, SizeProber& prober) {
  return summarize_with(std::span(&manifest, 1), &prober);
}

DatasetSummary estimate_size(std::span<const Manifest> manifests, SizeProber& prober) {
  return summarize_with(manifests, &prober);
}

std::vector<ReplicaSet> group_replicas(std::span<const Manifest> manifests) {
  std::vector<ReplicaSet> sets;
  std::map<std::string, std::size_t> index;
  std::map<std::string, std::vector<ReplicaConflict::Claim>> claims;
  std::set<std::string> conflicted;

  for (const auto& m : manifests) {
    for (const auto& e : m.entries) {
      claims[e.relative_path].emplace_back(e.url, std::string(to_string(e.checksum_type)) + ":" +
                                                      e.checksum_hex);
      auto [it, inserted] = index.try_emplace(e.relative_path, sets.size());
      if (inserted) {
        ReplicaSet rs;
        rs.relative_path = e.relative_path;
        rs.checksum_type = e.checksum_type;
        rs.checksum_hex = e.checksum_hex;
        rs.size_bytes = e.size_bytes;
        sets.push_back(std::move(rs));
      }
      auto& rs = sets[it->second];
      if (rs.checksum_type != e.checksum_type || rs.checksum_hex != e.checksum_hex) {
        conflicted.insert(e.relative_path);
      }
      if (!rs.size_bytes) rs.size_bytes = e.size_bytes;
      rs.locations.push_back({e.url, node_id_of(e.url)});
    }
  }
  if (!conflicted.empty()) {
    // Report the first conflicting path in manifest order.
    for (const auto& rs : sets) {
      if (conflicted.count(rs.relative_path)) {
        throw ReplicaConflict(rs.relative_path, claims[rs.relative_path]);
      }
    }
  }
  return sets;
}

std::string format_decimal_bytes(std::uint64_t bytes) {
  static constexpr std::pair<double, const char*> kUnits[] = {
      {1e15, "PB"}, {1e12, "TB"}, {1e9, "GB"}, {1e6, "MB"}, {1e3, "KB"}};
  const double b = static_cast<double>(bytes);
  char buf[64];
  for (const auto& [scale, unit] : kUnits) {
    if (b >= scale) {
      std::snprintf(buf, sizeof buf, "%.3f %s", b / scale, unit);
      return buf;
    }
  }
  return std::to_string(bytes) + " B";
}

std::string render_summary(const DatasetSummary& s) {
  std::ostringstream out;
  out << "files: " << s.file_count << "\n"
      << "directories: " << s.dir_count << "\n"
      << "total bytes: " << s.total_bytes << " (" << format_decimal_bytes(s.total_bytes)
      << ")" << (s.lower_bound ? " lower bound" : "") << "\n"
      << "unknown sizes: " << s.unknown_size_count << "\n";
  for (const auto& w : s.warnings) out << "warning: " << w << "\n";
  return out.str();
}

}  // namespace stage
