/*
 * Copyright 2026 The collabcal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
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
#include <initializer_list>
#include <string_view>

namespace collabcal {

// Stable 64-bit hashing used to derive per-call randomness. std::hash is not
// stable across standard libraries, so the simulator and every seeded
// shuffle go through these instead.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xCBF29CE484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Hash of an ordered tuple of strings. Parts are length-prefixed so that
// ("ab","c") and ("a","bc") differ.
inline std::uint64_t hash_parts(std::uint64_t seed,
                                std::initializer_list<std::string_view> parts) {
  std::uint64_t h = splitmix64(seed);
  for (std::string_view p : parts) {
    std::uint64_t len = p.size();
    for (int i = 0; i < 8; ++i) {
      h ^= (len >> (8 * i)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
    h = fnv1a64(p, h);
  }
  return splitmix64(h);
}

// Maps a hash to [0, 1) using the top 53 bits.
constexpr double unit_interval(std::uint64_t h) {
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

// Small counter-based generator: deterministic stream rooted at one hash.
// Satisfies UniformRandomBitGenerator so it works with std::shuffle.
class HashStream {
 public:
  using result_type = std::uint64_t;
  explicit HashStream(std::uint64_t root) : root_(root) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return splitmix64(root_ + 0x632BE59BD9B4E019ULL * ++counter_); }
  double uniform() { return unit_interval((*this)()); }
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  std::uint64_t root_;
  std::uint64_t counter_ = 0;
};

}  // namespace collabcal
