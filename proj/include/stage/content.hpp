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
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "stage/manifest.hpp"

namespace stage {

// Deterministic payloads served by simulated data nodes.
//
// key  = content_seed XOR fnv1a64(path)
// word k of the stream = splitmix64 finalizer of (key + (k+1) * 0x9E3779B97F4A7C15)
// byte i = byte (i % 8) of word (i / 8), little-endian.
//
// Any offset is addressable without generating the prefix.
std::uint64_t fnv1a64(std::string_view data);
std::uint64_t content_key(std::uint64_t seed, std::string_view path);
void generate_content(std::uint64_t key, std::uint64_t offset, std::span<std::byte> out);

std::string content_digest(std::uint64_t seed, std::string_view path, std::uint64_t size,
                           ChecksumType type);

}  // namespace stage
