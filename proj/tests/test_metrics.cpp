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

#include <cmath>
#include <algorithm>
#include <random>
#include <thread>

#include "doctest.h"
#include "stage/error.hpp"
#include "stage/metrics.hpp"
#include "stage/profiles.hpp"
#include "support.hpp"

using namespace stage;
using namespace std::chrono_literals;

namespace {

TimePoint utc(const char* text) { return *parse_utc(text); }

ErrorClass class_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.error_class();
  }
  FAIL("no error raised");
  return ErrorClass::Usage;
}

// Serves probe bodies instantly; one URL is unreachable.
class ProbeConnection : public DataNodeConnection {
 public:
  std::string dead_url;
  FetchResult get(const std::string& url, const std::string&, const ByteSink& sink) override {
    if (url.starts_with(dead_url)) return {FetchResult::Status::TransportError, 0, {}, "refused"};
    const auto n = std::stoull(url.substr(url.rfind('/') + 1));
    std::vector<std::byte> body(n);
    std::this_thread::sleep_for(2ms);
    sink(body);
    return {FetchResult::Status::Ok, 200, {}, ""};
  }
  HeadResult head(const std::string&, const std::string&) override { return {}; }
};

}  // namespace

TEST_CASE("aggregate sums per node") {
  MetricsRecorder m;
  m.record({"A", 1000000000, 1000, {}});
  CHECK(m.aggregate("A").mean_rate == doctest::Approx(1e6));

  MetricsRecorder two;
  two.record({"A", 2, 1, {}});
  two.record({"A", 3, 1, {}});
  const auto a = two.aggregate("A");
  CHECK(a.total_bytes == 5);
  CHECK(a.total_transfer_seconds == 2.0);
  CHECK(a.mean_rate == 2.5);
  CHECK(a.sample_count == 2);
  CHECK(class_of([&] { two.aggregate("B"); }) == ErrorClass::UnknownNode);
}

TEST_CASE("aggregates are independent of sample order") {
  std::vector<ThroughputSample> samples;
  std::mt19937_64 rng(77);
  for (int i = 0; i < 300; ++i) {
    samples.push_back({"n" + std::to_string(rng() % 4), rng() % 100000, (rng() % 1000) / 8.0, {}});
  }
  MetricsRecorder forward;
  for (const auto& s : samples) forward.record(s);
  std::shuffle(samples.begin(), samples.end(), rng);
  MetricsRecorder shuffled;
  for (const auto& s : samples) shuffled.record(s);
  const auto x = forward.aggregates();
  const auto y = shuffled.aggregates();
  REQUIRE(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(x[i].node_id == y[i].node_id);
    CHECK(x[i].total_bytes == y[i].total_bytes);
    // Sums of multiples of 1/8 are exact in double.
    CHECK(x[i].total_transfer_seconds == y[i].total_transfer_seconds);
  }
}

TEST_CASE("samples csv round-trip") {
  testing::TempDir dir;
  const auto file = dir / "sub/samples.csv";
  std::vector<ThroughputSample> batch = {{"h:1", 100, 0.5, utc("2020-01-01T00:00:00Z")},
                                         {"h:2", 7, 0.125, utc("2020-01-01T00:00:01Z")}};
  MetricsRecorder::append_csv(file, batch);
  MetricsRecorder::append_csv(file, std::span(batch).subspan(0, 1));
  MetricsRecorder loaded;
  loaded.load_csv(file);
  const auto s = loaded.samples();
  REQUIRE(s.size() == 3);
  CHECK(s[0] == batch[0]);
  CHECK(s[1] == batch[1]);
  CHECK(s[2] == batch[0]);
  CHECK(testing::read_file(file).starts_with("node_id,bytes,transfer_seconds,recorded_at\n"));
}

TEST_CASE("mbits_per_sec") {
  const double a1 = mbits_per_sec(29444200000000ULL, utc("2013-11-14T18:52:07Z"),
                                  utc("2013-11-16T18:28:31Z"));
  CHECK(std::abs(a1 - 1374.43) / 1374.43 <= 0.001);
  const double a2 = mbits_per_sec(26810800000000ULL, utc("2013-11-14T18:52:14Z"),
                                  utc("2013-11-16T15:42:37Z"));
  CHECK(std::abs(a2 - 1328.72) / 1328.72 <= 0.001);
  const auto t = utc("2020-01-01T00:00:00Z");
  CHECK(mbits_per_sec(1000000, t, t + 8s) == doctest::Approx(1.0));
  CHECK(class_of([&] { mbits_per_sec(1, t, t); }) == ErrorClass::InvalidInterval);
  CHECK(class_of([&] { mbits_per_sec(1, t + 1s, t); }) == ErrorClass::InvalidInterval);
}

TEST_CASE("time_to_transfer") {
  CHECK(time_to_transfer(1e12, 1e4) == doctest::Approx(1e8));
  CHECK(time_to_transfer(1e12, 1e12 / 3600) == doctest::Approx(3600));
  CHECK(time_to_transfer(0, 5) == 0);
  CHECK(class_of([] { time_to_transfer(1, 0); }) == ErrorClass::ZeroRate);
  CHECK(class_of([] { time_to_transfer(1, -1); }) == ErrorClass::ZeroRate);
}

TEST_CASE("days rendering") {
  CHECK(format_days(3097432) == "35.8");
  CHECK(format_days(3119685) == "36.1");
  CHECK(format_days(1260878) == "14.6");
  CHECK(format_days(2763209) == "32.0");
  CHECK(format_days(1605439) == "18.6");
  // Exact ties go to the even tenth.
  CHECK(format_days(4320) == "0.0");
  CHECK(format_days(12960) == "0.2");
  CHECK(format_days(0) == "0.0");
  CHECK(format_days(1e6) == "11.6");
}

TEST_CASE("rate and size units") {
  CHECK(format_rate(1e6) == "1.0 MB/s");
  CHECK(format_rate(1e4) == "10.0 KB/s");
  CHECK(format_rate(12) == "12.0 B/s");
  CHECK(format_tb(1000000000000ULL) == "1.000 TB");
}

TEST_CASE("node report") {
  CHECK(render_node_report({}).csv == std::string(kNodeReportCsvHeader) + "\n");

  MetricsRecorder m;
  m.record({"A", 1000000000000ULL, 1e6, {}});
  const auto one = render_node_report(m.aggregates());
  CHECK(one.text.find("1.000 TB") != std::string::npos);
  CHECK(one.text.find("11.6 days") != std::string::npos);
  CHECK(one.text.find("1.0 MB/s") != std::string::npos);
  CHECK(one.csv.find("\nA,1000000000000,1.000,1000000.000,11.6,1000000.000,1.0 MB/s,1000000\n") !=
        std::string::npos);

  MetricsRecorder tie;
  tie.record({"zeta", 10, 1, {}});
  tie.record({"alpha", 10, 2, {}});
  tie.record({"big", 20, 1, {}});
  const auto csv = render_node_report(tie.aggregates()).csv;
  CHECK(csv.find("big,") < csv.find("alpha,"));
  CHECK(csv.find("alpha,") < csv.find("zeta,"));
}

TEST_CASE("bytes in E-notation") {
  CHECK(format_bytes_sci(29444200000000ULL) == "2.94442E+13");
  CHECK(format_bytes_sci(26810800000000ULL) == "2.68108E+13");
  CHECK(format_bytes_sci(29444248373687ULL) == "2.9444248373687E+13");
  CHECK(format_bytes_sci(0) == "0.00000E+00");
  CHECK(format_bytes_sci(501000) == "5.01000E+05");
  CHECK(parse_bytes_sci("2.94442E+13") == 29444200000000ULL);
  CHECK(parse_bytes_sci("2.9444248373687E+13") == 29444248373687ULL);
  CHECK_FALSE(parse_bytes_sci("2.5E+00"));
  CHECK_FALSE(parse_bytes_sci("abc"));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng() >> (rng() % 64);
    CHECK(parse_bytes_sci(format_bytes_sci(v)) == v);
  }
}

TEST_CASE("run summary text layout") {
  RunSummary s;
  s.task_id = "dc40346a-4d5d-11e3-9a00-12313d2005b7";
  s.request_time = utc("2013-11-14 18:52:07Z");
  s.completion_time = utc("2013-11-16 18:28:31Z");
  s.total_tasks = 28067;
  s.files = 28000;
  s.dirs = 66;
  s.bytes_transferred = 29444200000000ULL;
  s.mbits_per_sec = 1374.43;
  s.faults = 0;
  const std::string expected =
      "Task ID:\tdc40346a-4d5d-11e3-9a00-12313d2005b7\n"
      "Request Time:\t2013-11-14 18:52:07Z\n"
      "Completion Time:\t2013-11-16 18:28:31Z\n"
      "Total Tasks:\t28067\n"
      "Files:\t28000\n"
      "Directories:\t66\n"
      "Bytes Transferred:\t2.94442E+13\n"
      "MBits/sec:\t1374.43\n"
      "Faults:\t0\n";
  CHECK(render_run_summary(s) == expected);
  CHECK(parse_run_summary(expected) == s);

  s.mbits_per_sec = 1328.722;
  CHECK(render_run_summary(s).find("MBits/sec:\t1328.722\n") != std::string::npos);
}

TEST_CASE("run summary construction") {
  const auto t = utc("2020-01-01T00:00:00Z");
  const auto empty = RunSummary::make("x", t, t + 10s, 0, 0, 0, 0);
  CHECK(empty.files == 0);
  CHECK(empty.total_tasks == 1);
  CHECK(empty.mbits_per_sec == 0.0);
  const auto s = RunSummary::make("x", t + 300ms, t + 8s + 900ms, 3, 2, 1000000, 4);
  CHECK(s.request_time == t);
  CHECK(s.completion_time == t + 8s);
  CHECK(s.total_tasks == 6);
  CHECK(s.mbits_per_sec == doctest::Approx(1.0));
  CHECK(s.faults == 4);
  CHECK(parse_run_summary(render_run_summary(s)) == s);
}

TEST_CASE("run summary parse errors") {
  CHECK_THROWS_AS(parse_run_summary(""), ParseError);
  CHECK_THROWS_AS(parse_run_summary("Task ID:\tx\nRequest Time:\tbad\n"), ParseError);
}

TEST_CASE("ewma") {
  CHECK(ewma_update(std::nullopt, 5, 0.3) == 5);
  CHECK(ewma_update(10.0, 20.0, 0.3) == doctest::Approx(13.0));
  NodeProfiles p;
  CHECK(p.effective_rate("x", 1e6) == 1e6);
  p.observe("x", 100, 1, 0.3);
  p.observe("x", 200, 1, 0.3);
  CHECK(*p.get("x").ewma_rate == doctest::Approx(130));
  CHECK(p.available("x"));
  p.mark_unavailable("x");
  CHECK_FALSE(p.available("x"));
}

TEST_CASE("probe records successes and isolates failures") {
  ProbeConnection conn;
  conn.dead_url = "http://dead:1";
  MetricsRecorder metrics;
  NodeProfiles profiles;
  ManualClock clock(utc("2020-01-01T00:00:00Z"));
  const Credential cred{"c", "t", clock.now(), clock.now() + 1h};
  const std::vector<std::string> nodes = {"http://live:1/", "http://dead:1"};
  CHECK(class_of([&] { probe(nodes, 99999, cred, conn, metrics, profiles, 0.3, clock); }) ==
        ErrorClass::Usage);

  auto results = probe(nodes, 100000, cred, conn, metrics, profiles, 0.3, clock);
  REQUIRE(results.size() == 2);
  CHECK(results[0].ok);
  CHECK(results[0].url == "http://live:1/__probe__/100000");
  CHECK(results[0].node_id == "live:1");
  CHECK_FALSE(results[1].ok);
  CHECK(metrics.samples().size() == 1);
  const double first = *results[0].ewma;

  results = probe(std::span(nodes).subspan(0, 1), 100000, cred, conn, metrics, profiles, 0.3,
                  clock);
  CHECK(*results[0].ewma == doctest::Approx(0.3 * results[0].rate + 0.7 * first));
  const auto csv = render_probe_csv(results);
  CHECK(csv.starts_with("node_id,bytes,seconds,rate_bytes_per_sec,ewma_rate\nlive:1,100000,"));
}
