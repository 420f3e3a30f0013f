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

#ifndef PFNAS_FED_WIRE_H_
#define PFNAS_FED_WIRE_H_

#include <cstdint>
#include <span>
#include <vector>

namespace pfnas::fed {

inline constexpr char kMagic[4] = {'D', 'P', 'F', 'N'};
inline constexpr uint16_t kWireVersion = 1;
// magic, version u16, client_id u32, n u32, d_rep u32, m_k u32
inline constexpr size_t kBatchHeaderBytes = 4 + 2 + 4 * 4;
inline constexpr size_t kHeadHeaderBytes = 4;
inline constexpr size_t kLabelBytes = 2;

// Per-sample representations uploaded by one client; z is row-major
// [n, d_rep].
struct RepresentationBatch {
  uint32_t client_id = 0;
  uint32_t d_rep = 0;
  uint32_t m_k = 0;
  std::vector<float> z;
  std::vector<uint16_t> y;

  size_t n() const { return y.size(); }
  void validate() const;
};

// Little-endian encodings. Decoding throws ParseError on any mismatch.
std::vector<uint8_t> serialize(const RepresentationBatch& b);
RepresentationBatch deserialize_batch(std::span<const uint8_t> bytes);
std::vector<uint8_t> serialize_head(std::span<const float> params);
std::vector<float> deserialize_head(std::span<const uint8_t> bytes);

// Payload bytes: n * d_rep * 4 + n * 2 up, param_count * 4 down. These are
// the figures reported per round.
size_t comm_bytes(const RepresentationBatch& b);
size_t comm_bytes_head(size_t param_count);

// Full serialized sizes, headers included.
size_t wire_bytes(const RepresentationBatch& b);
size_t wire_bytes_head(size_t param_count);

}  // namespace pfnas::fed

#endif  // PFNAS_FED_WIRE_H_
