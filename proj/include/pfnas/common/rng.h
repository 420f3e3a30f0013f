// Copyright 2026 The pfnas Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PFNAS_COMMON_RNG_H_
#define PFNAS_COMMON_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace pfnas {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a root seed and a path of tags, so
// that e.g. client 3 / round 7 always gets the same stream regardless of the
// order in which work is scheduled.
inline uint64_t derive_seed(uint64_t root, std::initializer_list<uint64_t> tags) {
  uint64_t s = mix64(root);
  for (uint64_t t : tags) s = mix64(s ^ mix64(t + 0x632be59bd9b4e019ULL));
  return s;
}

inline uint64_t tag(std::string_view name) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline Rng make_rng(uint64_t root, std::initializer_list<uint64_t> tags = {}) {
  return Rng(derive_seed(root, tags));
}

}  // namespace pfnas

#endif  // PFNAS_COMMON_RNG_H_
