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

#include "stage/content.hpp"

#include <array>
#include <vector>

#include "stage/digest.hpp"

namespace stage {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t content_key(std::uint64_t seed, std::string_view path) {
  return seed ^ fnv1a64(path);
}

namespace {

std::uint64_t word_at(std::uint64_t key, std::uint64_t k) {
  std::uint64_t z = key + (k + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

void generate_content(std::uint64_t key, std::uint64_t offset, std::span<std::byte> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    const std::uint64_t pos = offset + i;
    const std::uint64_t word = word_at(key, pos / 8);
    for (unsigned b = static_cast<unsigned>(pos % 8); b < 8 && i < out.size(); ++b, ++i) {
      out[i] = static_cast<std::byte>((word >> (8 * b)) & 0xff);
    }
  }
}

std::string content_digest(std::uint64_t seed, std::string_view path, std::uint64_t size,
                           ChecksumType type) {
  const auto key = content_key(seed, path);
  Digest d(type);
  std::vector<std::byte> buf(1 << 16);
  for (std::uint64_t off = 0; off < size; off += buf.size()) {
    const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(buf.size(), size - off));
    generate_content(key, off, std::span(buf.data(), n));
    d.update(std::span<const std::byte>(buf.data(), n));
  }
  return d.finish_hex();
}

}  // namespace stage
