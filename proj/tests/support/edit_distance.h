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

#ifndef PFNAS_TESTS_SUPPORT_EDIT_DISTANCE_H_
#define PFNAS_TESTS_SUPPORT_EDIT_DISTANCE_H_

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "pfnas/space/search_space.h"

namespace pfnas::testing {

// Unit-cost Levenshtein distance over block genes.
inline size_t edit_distance(const space::Genome& a, const space::Genome& b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (a.blocks[i - 1] == b.blocks[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// 1 - d / max(len): 1 exactly at the target.
inline double edit_fitness(const space::Genome& g, const space::Genome& target) {
  return 1.0 - double(edit_distance(g, target)) / std::max(g.size(), target.size());
}

inline std::vector<space::BlockGene> all_genes() {
  std::vector<space::BlockGene> genes;
  for (int k : space::kKernelChoices)
    for (int c : space::kChannelChoices) genes.push_back(space::BlockGene::conv(k, c));
  for (nn::PoolType t : space::kPoolChoices) genes.push_back(space::BlockGene::pooling(t));
  return genes;
}

// Every valid genome of a space, by brute-force enumeration of sequences.
inline std::vector<space::Genome> enumerate_space(const space::SpaceConfig& sp) {
  const auto genes = all_genes();
  std::vector<space::Genome> out, frontier = {space::Genome{}};
  for (int len = 1; len <= sp.max_len; ++len) {
    std::vector<space::Genome> next;
    for (const auto& g : frontier)
      for (const auto& b : genes) {
        space::Genome h = g;
        h.blocks.push_back(b);
        next.push_back(h);
        if (len >= sp.min_len && space::validate_genome(h, sp).empty()) out.push_back(h);
      }
    frontier = std::move(next);
  }
  return out;
}

// Every valid genome one Add, Remove, Alter or Exchange away from g.
inline std::vector<space::Genome> operator_neighbours(const space::Genome& g,
                                                      const space::SpaceConfig& sp) {
  const auto genes = all_genes();
  std::vector<space::Genome> out;
  auto keep = [&](space::Genome h) {
    if (space::validate_genome(h, sp).empty()) out.push_back(std::move(h));
  };
  for (size_t at = 0; at <= g.size(); ++at)
    for (const auto& b : genes) {
      space::Genome h = g;
      h.blocks.insert(h.blocks.begin() + at, b);
      keep(h);
    }
  for (size_t at = 0; at < g.size(); ++at) {
    space::Genome h = g;
    h.blocks.erase(h.blocks.begin() + at);
    keep(h);
    for (const auto& b : genes) {
      if (b.kind != g.blocks[at].kind || b == g.blocks[at]) continue;
      space::Genome a = g;
      a.blocks[at] = b;
      keep(a);
    }
    for (size_t j = at + 1; j < g.size(); ++j) {
      space::Genome e = g;
      std::swap(e.blocks[at], e.blocks[j]);
      keep(e);
    }
  }
  return out;
}

// Breadth-first search over the operator graph; true when every valid
// genome can reach `target`.
inline bool target_reachable_from_everywhere(const space::SpaceConfig& sp,
                                             const space::Genome& target) {
  const auto all = enumerate_space(sp);
  std::set<std::string> all_codes;
  for (const auto& g : all) all_codes.insert(space::encode(g));
  // Operators are invertible (Add/Remove, Alter/Alter, Exchange/Exchange),
  // so reaching every genome from the target is equivalent.
  std::set<std::string> seen = {space::encode(target)};
  std::queue<space::Genome> q;
  q.push(target);
  while (!q.empty()) {
    const space::Genome g = q.front();
    q.pop();
    for (const auto& h : operator_neighbours(g, sp))
      if (seen.insert(space::encode(h)).second) q.push(h);
  }
  return seen == all_codes;
}

}  // namespace pfnas::testing

#endif  // PFNAS_TESTS_SUPPORT_EDIT_DISTANCE_H_
