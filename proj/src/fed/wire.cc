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

#include "pfnas/fed/wire.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "pfnas/common/error.h"

namespace pfnas::fed {
namespace {

static_assert(std::endian::native == std::endian::little,
              "wire encoding assumes a little-endian host");

template <typename T>
void put(std::vector<uint8_t>& out, T v) {
  const size_t at = out.size();
  out.resize(at + sizeof(T));
  std::memcpy(out.data() + at, &v, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size())
      throw ParseError("message truncated at byte offset " + std::to_string(pos_));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  size_t remaining() const { return bytes_.size() - pos_; }
  size_t pos() const { return pos_; }

 private:
  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
};

}  // namespace

void RepresentationBatch::validate() const {
  if (z.size() != n() * d_rep)
    throw ShapeError("client " + std::to_string(client_id) + ": " + std::to_string(z.size()) +
                     " representation values for n=" + std::to_string(n()) +
                     ", d_rep=" + std::to_string(d_rep));
  if (n() > m_k)
    throw InvalidArgument("client " + std::to_string(client_id) + ": n exceeds m_k");
  for (float v : z)
    if (!std::isfinite(v))
      throw NonFiniteError("client " + std::to_string(client_id) + ": non-finite representation");
}

std::vector<uint8_t> serialize(const RepresentationBatch& b) {
  b.validate();
  std::vector<uint8_t> out;
  out.reserve(wire_bytes(b));
  for (char c : kMagic) out.push_back(static_cast<uint8_t>(c));
  put<uint16_t>(out, kWireVersion);
  put<uint32_t>(out, b.client_id);
  put<uint32_t>(out, static_cast<uint32_t>(b.n()));
  put<uint32_t>(out, b.d_rep);
  put<uint32_t>(out, b.m_k);
  for (float v : b.z) put<float>(out, v);
  for (uint16_t y : b.y) put<uint16_t>(out, y);
  return out;
}

RepresentationBatch deserialize_batch(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  for (char c : kMagic)
    if (r.get<uint8_t>() != static_cast<uint8_t>(c)) throw ParseError("bad magic");
  if (const uint16_t v = r.get<uint16_t>(); v != kWireVersion)
    throw ParseError("unsupported wire version " + std::to_string(v));
  RepresentationBatch b;
  b.client_id = r.get<uint32_t>();
  const uint32_t n = r.get<uint32_t>();
  b.d_rep = r.get<uint32_t>();
  b.m_k = r.get<uint32_t>();
  const size_t expected = static_cast<size_t>(n) * b.d_rep * 4 + static_cast<size_t>(n) * 2;
  if (r.remaining() != expected)
    throw ParseError("payload of " + std::to_string(r.remaining()) + " bytes at offset " +
                     std::to_string(r.pos()) + ", expected " + std::to_string(expected));
  b.z.resize(static_cast<size_t>(n) * b.d_rep);
  for (float& v : b.z) v = r.get<float>();
  b.y.resize(n);
  for (uint16_t& y : b.y) y = r.get<uint16_t>();
  return b;
}

std::vector<uint8_t> serialize_head(std::span<const float> params) {
  std::vector<uint8_t> out;
  out.reserve(wire_bytes_head(params.size()));
  put<uint32_t>(out, static_cast<uint32_t>(params.size()));
  for (float v : params) put<float>(out, v);
  return out;
}

std::vector<float> deserialize_head(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  const uint32_t count = r.get<uint32_t>();
  if (r.remaining() != static_cast<size_t>(count) * 4)
    throw ParseError("head message holds " + std::to_string(r.remaining()) + " bytes for " +
                     std::to_string(count) + " parameters");
  std::vector<float> out(count);
  for (float& v : out) v = r.get<float>();
  return out;
}

size_t comm_bytes(const RepresentationBatch& b) {
  return b.n() * b.d_rep * 4 + b.n() * kLabelBytes;
}

size_t comm_bytes_head(size_t param_count) { return param_count * 4; }

size_t wire_bytes(const RepresentationBatch& b) { return kBatchHeaderBytes + comm_bytes(b); }

size_t wire_bytes_head(size_t param_count) {
  return kHeadHeaderBytes + comm_bytes_head(param_count);
}

}  // namespace pfnas::fed
