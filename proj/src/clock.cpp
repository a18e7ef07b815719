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

#include "stage/clock.hpp"

#include <cstdio>

namespace stage {

using std::chrono::duration_cast;
using std::chrono::milliseconds;

TimePoint SystemClock::now() const {
  return std::chrono::time_point_cast<milliseconds>(std::chrono::system_clock::now());
}

ManualClock::ManualClock(TimePoint start) : ms_(start.time_since_epoch().count()) {}

TimePoint ManualClock::now() const { return TimePoint(milliseconds(ms_.load())); }

void ManualClock::advance(milliseconds d) { ms_.fetch_add(d.count()); }

void ManualClock::set(TimePoint t) { ms_.store(t.time_since_epoch().count()); }

ScaledClock::ScaledClock(TimePoint origin, double scale)
    : origin_(origin), scale_(scale), start_(std::chrono::steady_clock::now()) {}

TimePoint ScaledClock::now() const {
  const auto real = std::chrono::steady_clock::now() - start_;
  const double real_ms = std::chrono::duration<double, std::milli>(real).count();
  return origin_ + milliseconds(static_cast<std::int64_t>(real_ms * scale_));
}

OffsetClock::OffsetClock(std::shared_ptr<const Clock> base) : base_(std::move(base)) {}

TimePoint OffsetClock::now() const {
  return base_->now() + milliseconds(offset_ms_.load());
}

void OffsetClock::advance(milliseconds d) { offset_ms_.fetch_add(d.count()); }

std::shared_ptr<const Clock> system_clock() {
  static const auto clock = std::make_shared<SystemClock>();
  return clock;
}

std::int64_t to_unix_seconds(TimePoint t) {
  return std::chrono::floor<std::chrono::seconds>(t).time_since_epoch().count();
}

TimePoint from_unix_seconds(std::int64_t s) {
  return TimePoint(duration_cast<milliseconds>(std::chrono::seconds(s)));
}

namespace {

std::string format_with(TimePoint t, char sep) {
  const auto secs = std::chrono::floor<std::chrono::seconds>(t);
  const auto day = std::chrono::floor<std::chrono::days>(secs);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{secs - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u%c%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), sep,
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

}  // namespace

std::string format_iso8601(TimePoint t) { return format_with(t, 'T'); }

std::string format_summary_time(TimePoint t) { return format_with(t, ' '); }

std::optional<TimePoint> parse_utc(std::string_view text) {
  if (text.size() != 20 || text[19] != 'Z' || (text[10] != 'T' && text[10] != ' ')) {
    return std::nullopt;
  }
  int y = 0;
  unsigned mo = 0, d = 0;
  int h = 0, mi = 0, s = 0;
  const std::string s_text(text);
  char sep = 0;
  char z = 0;
  if (std::sscanf(s_text.c_str(), "%4d-%2u-%2u%c%2d:%2d:%2d%c", &y, &mo, &d, &sep, &h, &mi,
                  &s, &z) != 8) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(mo),
                                        std::chrono::day(d)};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
    return std::nullopt;
  }
  const auto day = std::chrono::sys_days(ymd);
  return TimePoint(duration_cast<milliseconds>(day.time_since_epoch() + std::chrono::hours(h) +
                                               std::chrono::minutes(mi) +
                                               std::chrono::seconds(s)));
}

}  // namespace stage
