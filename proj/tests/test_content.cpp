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

#include <random>
#include <vector>

#include "doctest.h"
#include "stage/clock.hpp"
#include "stage/content.hpp"
#include "stage/digest.hpp"

using namespace stage;

namespace {

std::string hex_of(std::span<const std::byte> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (auto b : bytes) {
    const auto v = std::to_integer<unsigned>(b);
    out += digits[v >> 4];
    out += digits[v & 15];
  }
  return out;
}

std::string generated_hex(std::uint64_t seed, std::string_view path, std::uint64_t offset,
                          std::size_t n) {
  std::vector<std::byte> buf(n);
  generate_content(content_key(seed, path), offset, buf);
  return hex_of(buf);
}

}  // namespace

TEST_CASE("standard digest vectors") {
  CHECK(digest_hex(ChecksumType::md5, std::string_view{}) == "d41d8cd98f00b204e9800998ecf8427e");
  CHECK(digest_hex(ChecksumType::md5, "abc") == "900150983cd24fb0d6963f7d28e17f72");
  CHECK(digest_hex(ChecksumType::sha256, "abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("incremental digest equals one-shot digest") {
  std::string data(100003, '\0');
  std::mt19937 rng(5);
  for (auto& c : data) c = static_cast<char>(rng());
  for (auto type : {ChecksumType::md5, ChecksumType::sha256}) {
    Digest d(type);
    for (std::size_t off = 0; off < data.size(); off += 997) {
      d.update(std::string_view(data).substr(off, 997));
    }
    CHECK(d.finish_hex() == digest_hex(type, data));
  }
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("d/x1.nc") == 0x7a550a978ceab78cULL);
}

// Vectors from tools/content_oracle.py.
TEST_CASE("content generator matches the reference implementation") {
  CHECK(generated_hex(7, "d/x1.nc", 0, 16) == "f65e1d0f22437d5b6459c2091302630a");
  CHECK(generated_hex(7, "d/x1.nc", 5, 11) == "437d5b6459c2091302630a");
  CHECK(generated_hex(0, "a", 0, 8) == "27859bddaac2295f");
  CHECK(content_digest(7, "d/x1.nc", 300000, ChecksumType::md5) ==
        "1d9448fe1135c74a2dfac5d49b1f300b");
  CHECK(content_digest(7, "d/x1.nc", 300000, ChecksumType::sha256) ==
        "5c6154753544ec3a4bea9b4fa536a69a45da1df0473ac916cf3b4f9340655a29");
  CHECK(content_digest(42, "p/q.nc", 0, ChecksumType::md5) == "d41d8cd98f00b204e9800998ecf8427e");
  CHECK(content_digest(42, "p/q.nc", 100003, ChecksumType::md5) ==
        "6fe0d370fe4871b2a855457f8d3df09a");
}

TEST_CASE("content is randomly addressable") {
  std::vector<std::byte> whole(1000);
  const auto key = content_key(3, "z");
  generate_content(key, 0, whole);
  std::mt19937 rng(9);
  for (int i = 0; i < 200; ++i) {
    const std::size_t off = rng() % 990;
    const std::size_t n = 1 + rng() % (1000 - off - 1);
    std::vector<std::byte> part(n);
    generate_content(key, off, part);
    CHECK(std::equal(part.begin(), part.end(), whole.begin() + static_cast<long>(off)));
  }
}

TEST_CASE("utc formatting and parsing") {
  const auto t = from_unix_seconds(1384455127);
  CHECK(format_iso8601(t) == "2013-11-14T18:52:07Z");
  CHECK(format_summary_time(t) == "2013-11-14 18:52:07Z");
  CHECK(parse_utc("2013-11-14T18:52:07Z") == t);
  CHECK(parse_utc("2013-11-14 18:52:07Z") == t);
  CHECK_FALSE(parse_utc("2013-11-14 18:52:07"));
  CHECK_FALSE(parse_utc("2013-13-14 18:52:07Z"));
  CHECK(to_unix_seconds(t) == 1384455127);
}

TEST_CASE("manual and offset clocks") {
  auto base = std::make_shared<ManualClock>(from_unix_seconds(100));
  OffsetClock off(base);
  CHECK(off.now() == from_unix_seconds(100));
  off.advance(std::chrono::seconds(50));
  base->advance(std::chrono::seconds(1));
  CHECK(off.now() == from_unix_seconds(151));
}
