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

#include <cstddef>
#include <memory>
#include <span>
#include <string>

#include "stage/manifest.hpp"

namespace stage {

// Incremental md5/sha256 over a byte stream.
class Digest {
 public:
  explicit Digest(ChecksumType type);
  ~Digest();
  Digest(Digest&&) noexcept;
  Digest& operator=(Digest&&) noexcept;
  Digest(const Digest&) = delete;
  Digest& operator=(const Digest&) = delete;

  void update(std::span<const std::byte> data);
  void update(std::string_view data);
  // Lowercase hex; the digest cannot be updated afterwards.
  std::string finish_hex();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string digest_hex(ChecksumType type, std::span<const std::byte> data);
std::string digest_hex(ChecksumType type, std::string_view data);

}  // namespace stage
