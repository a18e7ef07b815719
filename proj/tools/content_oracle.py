#!/usr/bin/env python3
# Copyright 2026 The stage authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Reference implementation of the simulated node content generator.

Used to freeze test vectors and to write manifests for a running fleet
without going through the C++ code.

  content_oracle.py bytes SEED PATH OFFSET COUNT      hex of COUNT bytes
  content_oracle.py digest SEED PATH SIZE [md5|sha256]
  content_oracle.py manifest DATASET SEED BASE_URL PATH:SIZE...
"""
import hashlib
import struct
import sys

MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for c in data:
        h ^= c
        h = (h * 0x100000001B3) & MASK
    return h


def word_at(key: int, k: int) -> int:
    z = (key + (k + 1) * 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def content(seed: int, path: str, offset: int, count: int) -> bytes:
    key = seed ^ fnv1a64(path.encode())
    first, last = offset // 8, (offset + count + 7) // 8
    raw = b"".join(struct.pack("<Q", word_at(key, k)) for k in range(first, last))
    start = offset - first * 8
    return raw[start:start + count]


def digest(seed: int, path: str, size: int, kind: str = "md5") -> str:
    h = hashlib.new(kind)
    step = 1 << 16
    for off in range(0, size, step):
        h.update(content(seed, path, off, min(step, size - off)))
    return h.hexdigest()


def main(argv):
    if len(argv) >= 5 and argv[0] == "bytes":
        print(content(int(argv[1]), argv[2], int(argv[3]), int(argv[4])).hex())
    elif len(argv) >= 4 and argv[0] == "digest":
        kind = argv[4] if len(argv) > 4 else "md5"
        print(digest(int(argv[1]), argv[2], int(argv[3]), kind))
    elif len(argv) >= 4 and argv[0] == "manifest":
        dataset, seed, base = argv[1], int(argv[2]), argv[3].rstrip("/")
        print(f"dataset {dataset}")
        for item in argv[4:]:
            path, size = item.rsplit(":", 1)
            hexd = digest(seed, path, int(size))
            print(f"file '{path}' '{base}/{path}' 'md5' '{hexd}' {size}")
    else:
        print(__doc__, file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
