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

#ifndef PFNAS_SPACE_SEARCH_SPACE_H_
#define PFNAS_SPACE_SEARCH_SPACE_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfnas/common/rng.h"
#include "pfnas/nn/network.h"

namespace pfnas::space {

inline constexpr int kKernelChoices[] = {3, 5};
inline constexpr int kChannelChoices[] = {16, 32, 64};
inline constexpr nn::PoolType kPoolChoices[] = {nn::PoolType::kAvg, nn::PoolType::kMax};

// One searchable unit. A conv block is a residual depthwise-separable
// block (depthwise kxk, pointwise to out_channels, per-sample norm, ReLU);
// a pool block is a 2x2 stride-2 pooling layer.
struct BlockGene {
  enum class Kind { kConv, kPool };

  Kind kind = Kind::kConv;
  int kernel = 3;
  int out_channels = 16;
  nn::PoolType pool = nn::PoolType::kAvg;

  static BlockGene conv(int kernel, int out_channels) {
    return {Kind::kConv, kernel, out_channels, nn::PoolType::kAvg};
  }
  static BlockGene pooling(nn::PoolType type) { return {Kind::kPool, 0, 0, type}; }

  bool is_conv() const { return kind == Kind::kConv; }
  bool operator==(const BlockGene& o) const;
};

struct Genome {
  std::vector<BlockGene> blocks;

  size_t size() const { return blocks.size(); }
  int pool_count() const;
  bool operator==(const Genome&) const = default;
};

struct SpaceConfig {
  nn::Shape3 input{3, 32, 32};
  int d_rep = 128;
  int num_classes = 10;
  int min_len = 3;
  int max_len = 12;

  // floor(log2(min(H, W))).
  int pool_cap() const;
  void validate() const;
};

// Canonical compact text form, e.g. "C3x16-C5x32-Pavg-C3x64".
std::string encode(const Genome& g);
Genome decode(const std::string& text);
std::string encode(const BlockGene& b);

// FNV-1a over the canonical encoding; stable across processes.
uint64_t genome_hash(const Genome& g);

std::vector<std::string> validate_genome(const Genome& g, const SpaceConfig& space);

// Length uniform on [min_len, max_len]; each gene uniform over the kinds
// legal at its position (pool only while under the pool cap), attributes
// uniform over their choices.
Genome sample_random_genome(const SpaceConfig& space, Rng& rng);
BlockGene sample_gene(bool allow_pool, Rng& rng);

// Builds bottom = blocks + global-avg-pool + linear(d_rep) and
// head = linear(d_rep -> num_classes) with seeded fan-in scaled init.
nn::Model materialize(const Genome& g, const SpaceConfig& space, Rng& rng);

// Closed-form parameter count of materialize(g, space).
size_t param_count(const Genome& g, const SpaceConfig& space);

nlohmann::json to_json(const SpaceConfig& space);
SpaceConfig space_from_json(const nlohmann::json& j);

}  // namespace pfnas::space

#endif  // PFNAS_SPACE_SEARCH_SPACE_H_
