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

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace stage {

using TimePoint = std::chrono::sys_time<std::chrono::milliseconds>;

// Every component that reasons about wall time (credential expiry, node
// clocks, journal timestamps) reads it through this interface.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimePoint now() const = 0;
};

class SystemClock final : public Clock {
 public:
  TimePoint now() const override;
};

class ManualClock final : public Clock {
 public:
  explicit ManualClock(TimePoint start);

  TimePoint now() const override;
  void advance(std::chrono::milliseconds d);
  void set(TimePoint t);

 private:
  std::atomic<std::int64_t> ms_;
};

// Simulated time running `scale` times faster than the steady clock,
// starting at `origin`.
class ScaledClock final : public Clock {
 public:
  ScaledClock(TimePoint origin, double scale);

  TimePoint now() const override;

 private:
  TimePoint origin_;
  double scale_;
  std::chrono::steady_clock::time_point start_;
};

// Base clock plus an adjustable forward offset (admin clock control).
class OffsetClock final : public Clock {
 public:
  explicit OffsetClock(std::shared_ptr<const Clock> base);

  TimePoint now() const override;
  void advance(std::chrono::milliseconds d);

 private:
  std::shared_ptr<const Clock> base_;
  std::atomic<std::int64_t> offset_ms_{0};
};

std::shared_ptr<const Clock> system_clock();

std::int64_t to_unix_seconds(TimePoint t);
TimePoint from_unix_seconds(std::int64_t s);

// 2013-11-14T18:52:07Z
std::string format_iso8601(TimePoint t);
// 2013-11-14 18:52:07Z
std::string format_summary_time(TimePoint t);
// Accepts either separator; seconds precision, trailing Z required.
std::optional<TimePoint> parse_utc(std::string_view text);

}  // namespace stage
