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

#include "stage/metrics.hpp"

#include <algorithm>
#include <cfenv>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stage/error.hpp"

namespace stage {

void MetricsRecorder::record(const ThroughputSample& sample) {
  std::lock_guard lock(mu_);
  samples_.push_back(sample);
}

namespace {

void accumulate(NodeAggregate& agg, const ThroughputSample& s) {
  agg.total_bytes += s.bytes;
  agg.total_transfer_seconds += s.transfer_seconds;
  ++agg.sample_count;
}

void finish(NodeAggregate& agg) {
  agg.mean_rate = agg.total_transfer_seconds > 0
                      ? static_cast<double>(agg.total_bytes) / agg.total_transfer_seconds
                      : 0.0;
}

}  // namespace

NodeAggregate MetricsRecorder::aggregate(const std::string& node_id) const {
  std::lock_guard lock(mu_);
  NodeAggregate agg;
  agg.node_id = node_id;
  for (const auto& s : samples_) {
    if (s.node_id == node_id) accumulate(agg, s);
  }
  if (agg.sample_count == 0) throw Error(ErrorClass::UnknownNode, "no samples for " + node_id);
  finish(agg);
  return agg;
}

std::vector<NodeAggregate> MetricsRecorder::aggregates() const {
  std::lock_guard lock(mu_);
  std::map<std::string, NodeAggregate> by_node;
  for (const auto& s : samples_) {
    auto& agg = by_node[s.node_id];
    agg.node_id = s.node_id;
    accumulate(agg, s);
  }
  std::vector<NodeAggregate> out;
  for (auto& [id, agg] : by_node) {
    finish(agg);
    out.push_back(agg);
  }
  return out;
}

std::vector<ThroughputSample> MetricsRecorder::samples() const {
  std::lock_guard lock(mu_);
  return samples_;
}

void MetricsRecorder::load_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) return;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.starts_with("node_id,")) continue;
    std::istringstream row(line);
    ThroughputSample s;
    std::string bytes, seconds, when;
    if (!std::getline(row, s.node_id, ',') || !std::getline(row, bytes, ',') ||
        !std::getline(row, seconds, ',') || !std::getline(row, when)) {
      throw ParseError(line_no, "bad sample row in " + file.string());
    }
    const auto t = parse_utc(when);
    if (!t) throw ParseError(line_no, "bad sample timestamp in " + file.string());
    try {
      s.bytes = std::stoull(bytes);
      s.transfer_seconds = std::stod(seconds);
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad sample number in " + file.string());
    }
    s.recorded_at = *t;
    record(s);
  }
}

void MetricsRecorder::append_csv(const std::filesystem::path& file,
                                 std::span<const ThroughputSample> samples) {
  std::error_code ec;
  std::filesystem::create_directories(file.parent_path(), ec);
  const bool fresh = !std::filesystem::exists(file);
  std::ofstream out(file, std::ios::app);
  if (!out) throw Error(ErrorClass::StorageFull, "cannot write " + file.string());
  if (fresh) out << "node_id,bytes,transfer_seconds,recorded_at\n";
  char seconds[64];
  for (const auto& s : samples) {
    std::snprintf(seconds, sizeof seconds, "%.6f", s.transfer_seconds);
    out << s.node_id << ',' << s.bytes << ',' << seconds << ',' << format_iso8601(s.recorded_at)
        << '\n';
  }
  if (!out) throw Error(ErrorClass::StorageFull, "write failed on " + file.string());
}

double mbits_per_sec(std::uint64_t bytes, TimePoint request_time, TimePoint completion_time) {
  if (completion_time <= request_time) {
    throw Error(ErrorClass::InvalidInterval, "completion time must follow request time");
  }
  const double elapsed =
      std::chrono::duration<double>(completion_time - request_time).count();
  return static_cast<double>(bytes) * 8.0 / 1e6 / elapsed;
}

double time_to_transfer(double target_bytes, double rate_bytes_per_sec) {
  if (!(rate_bytes_per_sec > 0)) throw Error(ErrorClass::ZeroRate, "rate must be positive");
  return target_bytes / rate_bytes_per_sec;
}

std::string format_days(double seconds) {
  std::int64_t tenths = 0;
  if (seconds >= 0 && seconds == std::floor(seconds) && seconds < 9e15) {
    // Exact path: tenths of a day = s / 8640, ties to even.
    const auto s = static_cast<std::int64_t>(seconds);
    tenths = s / 8640;
    const auto rem = s % 8640;
    if (2 * rem > 8640 || (2 * rem == 8640 && tenths % 2 != 0)) ++tenths;
  } else {
    const int saved = std::fegetround();
    std::fesetround(FE_TONEAREST);
    tenths = static_cast<std::int64_t>(std::nearbyint(static_cast<long double>(seconds) / 8640.0L));
    std::fesetround(saved);
  }
  const bool negative = tenths < 0;
  const auto mag = negative ? -tenths : tenths;
  return (negative ? "-" : "") + std::to_string(mag / 10) + "." + std::to_string(mag % 10);
}

std::string format_rate(double bytes_per_sec) {
  static constexpr std::pair<double, const char*> kUnits[] = {
      {1e9, "GB/s"}, {1e6, "MB/s"}, {1e3, "KB/s"}};
  char buf[64];
  for (const auto& [scale, unit] : kUnits) {
    if (bytes_per_sec >= scale) {
      std::snprintf(buf, sizeof buf, "%.1f %s", bytes_per_sec / scale, unit);
      return buf;
    }
  }
  std::snprintf(buf, sizeof buf, "%.1f B/s", bytes_per_sec);
  return buf;
}

std::string format_tb(std::uint64_t bytes) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f TB", static_cast<double>(bytes) / 1e12);
  return buf;
}

NodeReport render_node_report(std::span<const NodeAggregate> aggregates) {
  std::vector<NodeAggregate> rows(aggregates.begin(), aggregates.end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.total_bytes != b.total_bytes) return a.total_bytes > b.total_bytes;
    return a.node_id < b.node_id;
  });

  NodeReport report;
  std::ostringstream text;
  std::ostringstream csv;
  csv << kNodeReportCsvHeader << "\n";
  char line[512];
  std::snprintf(line, sizeof line, "%-32s %14s %14s %10s %12s %16s\n", "node", "data",
                "time (s)", "days", "mean rate", "time to 1TB (s)");
  text << line;
  for (const auto& a : rows) {
    const double per_tb = a.mean_rate > 0 ? time_to_transfer(1e12, a.mean_rate) : 0.0;
    const auto tb = format_tb(a.total_bytes);
    const auto days = format_days(a.total_transfer_seconds);
    const auto rate = format_rate(a.mean_rate);
    char seconds[64], per_tb_s[64], tb_plain[64], rate_plain[64];
    std::snprintf(seconds, sizeof seconds, "%.3f", a.total_transfer_seconds);
    std::snprintf(per_tb_s, sizeof per_tb_s, "%.0f", per_tb);
    std::snprintf(tb_plain, sizeof tb_plain, "%.3f", static_cast<double>(a.total_bytes) / 1e12);
    std::snprintf(rate_plain, sizeof rate_plain, "%.3f", a.mean_rate);
    std::snprintf(line, sizeof line, "%-32s %14s %14s %10s %12s %16s\n", a.node_id.c_str(),
                  tb.c_str(), seconds, (days + " days").c_str(), rate.c_str(), per_tb_s);
    text << line;
    csv << a.node_id << ',' << a.total_bytes << ',' << tb_plain << ',' << seconds << ',' << days
        << ',' << rate_plain << ',' << rate << ',' << per_tb_s << "\n";
  }
  report.text = text.str();
  report.csv = csv.str();
  return report;
}

RunSummary RunSummary::make(std::string task_id, TimePoint request_time,
                            TimePoint completion_time, std::uint64_t files, std::uint64_t dirs,
                            std::uint64_t bytes, std::uint64_t faults) {
  RunSummary s;
  s.task_id = std::move(task_id);
  s.request_time = std::chrono::floor<std::chrono::seconds>(request_time);
  s.completion_time = std::chrono::floor<std::chrono::seconds>(completion_time);
  if (s.completion_time < s.request_time) s.completion_time = s.request_time;
  s.files = files;
  s.dirs = dirs;
  s.total_tasks = files + dirs + 1;
  s.bytes_transferred = bytes;
  s.faults = faults;
  s.mbits_per_sec = s.completion_time > s.request_time
                        ? stage::mbits_per_sec(bytes, s.request_time, s.completion_time)
                        : 0.0;
  return s;
}

std::string format_bytes_sci(std::uint64_t bytes) {
  const std::string digits = std::to_string(bytes);
  const auto exponent = digits.size() - 1;
  std::string mantissa = digits.substr(1);
  while (!mantissa.empty() && mantissa.back() == '0') mantissa.pop_back();
  if (mantissa.size() < 5) mantissa.append(5 - mantissa.size(), '0');
  char exp[32];
  std::snprintf(exp, sizeof exp, "E+%02zu", exponent);
  return digits.substr(0, 1) + "." + mantissa + exp;
}

std::optional<std::uint64_t> parse_bytes_sci(std::string_view text) {
  const auto e = text.find_first_of("Ee");
  if (e == std::string_view::npos || e < 3 || text[1] != '.') return std::nullopt;
  const auto mant = text.substr(0, e);
  auto exp_text = text.substr(e + 1);
  if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
  if (exp_text.empty()) return std::nullopt;
  std::size_t exponent = 0;
  for (char c : exp_text) {
    if (c < '0' || c > '9') return std::nullopt;
    exponent = exponent * 10 + static_cast<std::size_t>(c - '0');
    if (exponent > 19) return std::nullopt;
  }
  std::string digits;
  digits.push_back(mant[0]);
  digits.append(mant.substr(2));
  for (char c : digits) {
    if (c < '0' || c > '9') return std::nullopt;
  }
  // Fractional digits beyond the exponent must be zero for an integer.
  while (digits.size() > exponent + 1) {
    if (digits.back() != '0') return std::nullopt;
    digits.pop_back();
  }
  digits.append(exponent + 1 - digits.size(), '0');
  try {
    std::size_t used = 0;
    const auto v = std::stoull(digits, &used);
    if (used != digits.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

namespace {

constexpr const char* kSummaryLabels[] = {
    "Task ID:",         "Request Time:", "Completion Time:", "Total Tasks:", "Files:",
    "Directories:",     "Bytes Transferred:", "MBits/sec:",  "Faults:"};

// Shortest fixed-point text that reparses to the same double, at least two
// decimals: 1374.43 -> "1374.43", 1328.722 -> "1328.722", 0 -> "0.00".
std::string format_mbits(double v) {
  char buf[128];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  std::string out(buf, ec == std::errc() ? end : buf);
  auto dot = out.find('.');
  if (dot == std::string::npos) {
    out += ".";
    dot = out.size() - 1;
  }
  while (out.size() - dot - 1 < 2) out += '0';
  return out;
}

}  // namespace

std::string render_run_summary(const RunSummary& s) {
  const std::string values[] = {s.task_id,
                                format_summary_time(s.request_time),
                                format_summary_time(s.completion_time),
                                std::to_string(s.total_tasks),
                                std::to_string(s.files),
                                std::to_string(s.dirs),
                                format_bytes_sci(s.bytes_transferred),
                                format_mbits(s.mbits_per_sec),
                                std::to_string(s.faults)};
  std::string out;
  for (std::size_t i = 0; i < std::size(kSummaryLabels); ++i) {
    out += kSummaryLabels[i];
    out += '\t';
    out += values[i];
    out += '\n';
  }
  return out;
}

RunSummary parse_run_summary(std::string_view text) {
  std::vector<std::string> values;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size() && values.size() < std::size(kSummaryLabels)) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    const std::string_view label = kSummaryLabels[values.size()];
    if (!line.starts_with(label) || line.size() <= label.size() || line[label.size()] != '\t') {
      throw ParseError(line_no, "expected '" + std::string(label) + "'");
    }
    values.emplace_back(line.substr(label.size() + 1));
  }
  if (values.size() != std::size(kSummaryLabels)) throw ParseError(line_no, "truncated summary");

  auto number = [&](std::size_t i) -> std::uint64_t {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(values[i], &used);
      if (used == values[i].size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError(static_cast<int>(i + 1), "bad number");
  };

  RunSummary s;
  s.task_id = values[0];
  const auto req = parse_utc(values[1]);
  const auto comp = parse_utc(values[2]);
  if (!req) throw ParseError(2, "bad request time");
  if (!comp || *comp < *req) throw ParseError(3, "bad completion time");
  s.request_time = *req;
  s.completion_time = *comp;
  s.total_tasks = number(3);
  s.files = number(4);
  s.dirs = number(5);
  const auto bytes = parse_bytes_sci(values[6]);
  if (!bytes) throw ParseError(7, "bad byte count");
  s.bytes_transferred = *bytes;
  s.faults = number(8);
  const auto& mbits = values[7];
  auto [end, ec] = std::from_chars(mbits.data(), mbits.data() + mbits.size(), s.mbits_per_sec);
  if (ec != std::errc() || end != mbits.data() + mbits.size() || s.mbits_per_sec < 0) {
    throw ParseError(8, "bad MBits/sec");
  }
  return s;
}

std::string probe_object_url(std::string_view node_base_url, std::uint64_t bytes) {
  std::string base(node_base_url);
  while (!base.empty() && base.back() == '/') base.pop_back();
  return base + "/__probe__/" + std::to_string(bytes);
}

std::vector<ProbeResult> probe(std::span<const std::string> node_base_urls,
                               std::uint64_t probe_bytes, const Credential& cred,
                               DataNodeConnection& conn, MetricsRecorder& metrics,
                               NodeProfiles& profiles, double ewma_alpha, const Clock& clock) {
  if (probe_bytes < kMinProbeBytes) {
    throw Error(ErrorClass::Usage, "probe_bytes must be at least " +
                                       std::to_string(kMinProbeBytes) +
                                       " (latency dominates smaller probes)");
  }
  std::vector<ProbeResult> results;
  const auto token = token_header_value(cred);
  for (const auto& base : node_base_urls) {
    ProbeResult r;
    r.url = probe_object_url(base, probe_bytes);
    r.node_id = node_id_of(r.url);
    std::uint64_t received = 0;
    const auto started = std::chrono::steady_clock::now();
    const auto fetched = conn.get(r.url, token, [&](std::span<const std::byte> chunk) {
      received += chunk.size();
      return true;
    });
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    r.bytes = received;
    if (fetched.status != FetchResult::Status::Ok) {
      r.error = fetched.detail.empty() ? "HTTP " + std::to_string(fetched.http_status)
                                       : fetched.detail;
    } else if (received != probe_bytes || r.seconds <= 0) {
      r.error = "short probe body (" + std::to_string(received) + " bytes)";
    } else {
      r.ok = true;
      r.rate = static_cast<double>(received) / r.seconds;
      metrics.record({r.node_id, received, r.seconds, clock.now()});
      profiles.observe(r.node_id, received, r.seconds, ewma_alpha);
      r.ewma = profiles.get(r.node_id).ewma_rate;
    }
    results.push_back(std::move(r));
  }
  return results;
}

std::string render_probe_csv(std::span<const ProbeResult> results) {
  std::string out(kProbeCsvHeader);
  out += "\n";
  char line[256];
  for (const auto& r : results) {
    if (!r.ok) continue;
    std::snprintf(line, sizeof line, "%s,%llu,%.6f,%.3f,%.3f\n", r.node_id.c_str(),
                  static_cast<unsigned long long>(r.bytes), r.seconds, r.rate,
                  r.ewma.value_or(r.rate));
    out += line;
  }
  return out;
}

}  // namespace stage
