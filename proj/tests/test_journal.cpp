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

#include "doctest.h"
#include "stage/error.hpp"
#include "stage/journal.hpp"
#include "support.hpp"

using namespace stage;

namespace {

const std::string kHexA = "d41d8cd98f00b204e9800998ecf8427e";
const std::string kHexB = "900150983cd24fb0d6963f7d28e17f72";

JournalRecord rec(const std::string& path, const std::string& hex = kHexA,
                  TransferState state = TransferState::Done) {
  JournalRecord r;
  r.state = state;
  r.relative_path = path;
  r.checksum_hex = hex;
  r.bytes = path.size() * 1000;
  r.transfer_ms = 12;
  r.verify_ms = 3;
  r.completed_at = *parse_utc("2021-05-06T07:08:09Z");
  return r;
}

}  // namespace

TEST_CASE("record format") {
  CHECK(format_record(rec("a/b.nc")) ==
        "v1 Done 'a/b.nc' md5:d41d8cd98f00b204e9800998ecf8427e 6000 12 3 2021-05-06T07:08:09Z");
  CHECK(parse_record(format_record(rec("a/b.nc"))) == rec("a/b.nc"));
  const auto bad = rec("x", kHexB, TransferState::PersistentChecksumMismatch);
  CHECK(parse_record(format_record(bad)) == bad);
  CHECK_FALSE(parse_record("v1 Done 'a' md5:abc 1 1 1 2021-05-06T07:08:09Z"));
  CHECK_FALSE(parse_record("v2 Done 'a' md5:" + kHexA + " 1 1 1 2021-05-06T07:08:09Z"));
  CHECK_FALSE(parse_record("v1 Bogus 'a' md5:" + kHexA + " 1 1 1 2021-05-06T07:08:09Z"));
  CHECK_FALSE(parse_record("v1 Done 'a' md5:" + kHexA + " 1 1 1 2021-05-06T07:08:09Z extra"));
}

TEST_CASE("read your write across reopen") {
  testing::TempDir dir;
  const auto file = dir / ".stage/journal";
  {
    StatusJournal j(file);
    CHECK(j.snapshot().empty());
    j.record(rec("p"));
    CHECK(j.lookup("p")->state == TransferState::Done);
  }
  StatusJournal again(file);
  CHECK(again.lookup("p") == rec("p"));
  CHECK(testing::read_file(file).starts_with("stage-journal v1\n"));
}

TEST_CASE("only terminal states are journaled") {
  testing::TempDir dir;
  StatusJournal j(dir / "j");
  CHECK_THROWS_AS(j.record(rec("p", kHexA, TransferState::FailedTransport)), std::logic_error);
}

TEST_CASE("last complete record wins") {
  testing::TempDir dir;
  const auto file = dir / "j";
  {
    StatusJournal j(file);
    j.record(rec("p", kHexA, TransferState::PersistentChecksumMismatch));
    j.record(rec("p", kHexB));
  }
  StatusJournal j(file);
  CHECK(j.lookup("p")->checksum_hex == kHexB);
  CHECK(j.lookup("p")->state == TransferState::Done);
  CHECK(j.state_counts().at(TransferState::Done) == 1);
}

TEST_CASE("resume set follows the manifest checksum") {
  testing::TempDir dir;
  Manifest m;
  m.dataset_id = "d";
  for (const char* p : {"a", "b", "c"}) m.entries.push_back({p, std::string("http://h:1/") + p,
                                                            ChecksumType::md5, kHexA, 1});
  {
    StatusJournal absent(dir / "none");
    CHECK(load_resume(absent, m).size() == 3);
  }
  StatusJournal j(dir / "j");
  j.record(rec("b"));
  auto pending = load_resume(j, m);
  REQUIRE(pending.size() == 2);
  CHECK(pending[0].relative_path == "a");
  CHECK(pending[1].relative_path == "c");

  // Republished with a different checksum: fetch again.
  m.entries[1].checksum_hex = kHexB;
  CHECK(load_resume(j, m).size() == 3);
}

TEST_CASE("foreign file is refused, malformed lines are skipped") {
  testing::TempDir dir;
  testing::write_file(dir / "foreign", "something else\n");
  try {
    StatusJournal j(dir / "foreign");
    FAIL("expected JournalCorrupt");
  } catch (const Error& e) {
    CHECK(e.error_class() == ErrorClass::JournalCorrupt);
  }
  testing::write_file(dir / "mixed", "stage-journal v1\ngarbage\n" + format_record(rec("q")) + "\n");
  StatusJournal j(dir / "mixed");
  CHECK(j.discarded_lines() == 1);
  CHECK(j.lookup("q"));
}

TEST_CASE("truncation at every byte offset keeps exactly the complete records") {
  testing::TempDir dir;
  const auto full = dir / "full";
  std::vector<std::string> paths = {"d1/f1.nc", "d1/f2.nc", "d2/f3.nc", "f4.nc", "d3/x/f5.nc"};
  {
    StatusJournal j(full);
    for (const auto& p : paths) j.record(rec(p));
  }
  const auto data = testing::read_file(full);
  // End offset of each record line, after its LF.
  std::vector<std::size_t> ends;
  for (std::size_t i = 0, line = 0; i < data.size(); ++i) {
    if (data[i] == '\n') {
      if (line++ > 0) ends.push_back(i + 1);
    }
  }
  REQUIRE(ends.size() == paths.size());

  for (std::size_t cut = 0; cut <= data.size(); ++cut) {
    CAPTURE(cut);
    const auto file = dir / ("cut" + std::to_string(cut));
    testing::write_file(file, data.substr(0, cut));
    std::size_t expected = 0;
    while (expected < ends.size() && ends[expected] <= cut) ++expected;
    {
      StatusJournal j(file);
      CHECK(j.snapshot().size() == expected);
      for (std::size_t k = 0; k < paths.size(); ++k) {
        CHECK(j.lookup(paths[k]).has_value() == (k < expected));
      }
      CHECK(j.discarded_lines() == 0);
      // The next append lands on a clean boundary.
      j.record(rec("after"));
    }
    StatusJournal reopened(file);
    CHECK(reopened.snapshot().size() == expected + 1);
    CHECK(reopened.discarded_lines() == 0);
    std::filesystem::remove(file);
  }
}
