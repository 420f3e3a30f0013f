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

#include "pfnas/space/search_space.h"

#include <algorithm>
#include <sstream>

#include "pfnas/common/error.h"

namespace pfnas::space {

bool BlockGene::operator==(const BlockGene& o) const {
  if (kind != o.kind) return false;
  return is_conv() ? kernel == o.kernel && out_channels == o.out_channels
                   : pool == o.pool;
}

int Genome::pool_count() const {
  return static_cast<int>(std::count_if(blocks.begin(), blocks.end(),
                                         [](const BlockGene& b) { return !b.is_conv(); }));
}

int SpaceConfig::pool_cap() const {
  int side = std::min(input.h, input.w), cap = 0;
  while (side >= 2) {
    side /= 2;
    ++cap;
  }
  return cap;
}

void SpaceConfig::validate() const {
  if (input.c < 1 || input.h < 1 || input.w < 1)
    throw InvalidArgument("space: input shape must be positive");
  if (d_rep < 1) throw InvalidArgument("space: d_rep must be >= 1");
  if (num_classes < 2) throw InvalidArgument("space: num_classes must be >= 2");
  if (min_len < 1) throw InvalidArgument("space: min_len must be >= 1");
  if (max_len < min_len) throw InvalidArgument("space: max_len must be >= min_len");
}

std::string encode(const BlockGene& b) {
  if (b.is_conv())
    return "C" + std::to_string(b.kernel) + "x" + std::to_string(b.out_channels);
  return b.pool == nn::PoolType::kAvg ? "Pavg" : "Pmax";
}

std::string encode(const Genome& g) {
  std::string out;
  for (size_t i = 0; i < g.blocks.size(); ++i) {
    if (i) out += '-';
    out += encode(g.blocks[i]);
  }
  return out;
}

namespace {

BlockGene decode_gene(const std::string& tok) {
  if (tok == "Pavg") return BlockGene::pooling(nn::PoolType::kAvg);
  if (tok == "Pmax") return BlockGene::pooling(nn::PoolType::kMax);
  if (tok.size() >= 4 && tok[0] == 'C') {
    const size_t x = tok.find('x');
    if (x != std::string::npos && x > 1 && x + 1 < tok.size()) {
      const std::string ks = tok.substr(1, x - 1), cs = tok.substr(x + 1);
      const bool digits = std::all_of(ks.begin(), ks.end(), ::isdigit) &&
                          std::all_of(cs.begin(), cs.end(), ::isdigit);
      if (digits && ks.size() < 4 && cs.size() < 6)
        return BlockGene::conv(std::stoi(ks), std::stoi(cs));
    }
  }
  throw ParseError("bad block token '" + tok + "'");
}

}  // namespace

Genome decode(const std::string& text) {
  Genome g;
  if (text.empty()) return g;
  std::string tok;
  std::istringstream is(text);
  while (std::getline(is, tok, '-')) g.blocks.push_back(decode_gene(tok));
  if (text.back() == '-') throw ParseError("trailing '-' in genome '" + text + "'");
  return g;
}

uint64_t genome_hash(const Genome& g) { return tag(encode(g)); }

std::vector<std::string> validate_genome(const Genome& g, const SpaceConfig& space) {
  std::vector<std::string> v;
  const int n = static_cast<int>(g.size());
  if (n < space.min_len)
    v.push_back("length below bound (" + std::to_string(n) + " < " +
                std::to_string(space.min_len) + ")");
  if (n > space.max_len)
    v.push_back("length above bound (" + std::to_string(n) + " > " +
                std::to_string(space.max_len) + ")");
  const int pools = g.pool_count();
  if (pools > space.pool_cap())
    v.push_back("pool cap exceeded (" + std::to_string(pools) + " > " +
                std::to_string(space.pool_cap()) + ")");
  int h = space.input.h, w = space.input.w;
  for (int i = 0; i < pools; ++i) h /= 2, w /= 2;
  if (h < 1 || w < 1)
    v.push_back("spatial collapse (" + std::to_string(pools) + " pools on " +
                std::to_string(space.input.h) + "x" + std::to_string(space.input.w) + ")");
  for (size_t i = 0; i < g.blocks.size(); ++i) {
    const BlockGene& b = g.blocks[i];
    if (!b.is_conv()) continue;
    if (std::find(std::begin(kKernelChoices), std::end(kKernelChoices), b.kernel) ==
        std::end(kKernelChoices))
      v.push_back("block " + std::to_string(i) + ": kernel " + std::to_string(b.kernel) +
                  " not in {3,5}");
    if (std::find(std::begin(kChannelChoices), std::end(kChannelChoices),
                  b.out_channels) == std::end(kChannelChoices))
      v.push_back("block " + std::to_string(i) + ": out_channels " +
                  std::to_string(b.out_channels) + " not in {16,32,64}");
  }
  return v;
}

BlockGene sample_gene(bool allow_pool, Rng& rng) {
  const bool pool = allow_pool && std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  if (pool) {
    return BlockGene::pooling(kPoolChoices[std::uniform_int_distribution<int>(0, 1)(rng)]);
  }
  const int k = kKernelChoices[std::uniform_int_distribution<int>(0, 1)(rng)];
  const int c = kChannelChoices[std::uniform_int_distribution<int>(0, 2)(rng)];
  return BlockGene::conv(k, c);
}

Genome sample_random_genome(const SpaceConfig& space, Rng& rng) {
  space.validate();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Genome g;
    const int len = std::uniform_int_distribution<int>(space.min_len, space.max_len)(rng);
    int pools = 0;
    for (int i = 0; i < len; ++i) {
      BlockGene b = sample_gene(pools < space.pool_cap(), rng);
      pools += !b.is_conv();
      g.blocks.push_back(b);
    }
    if (validate_genome(g, space).empty()) return g;
  }
  throw InfeasibleError("sample_random_genome: no valid genome after 1000 draws");
}

namespace {

void require_valid(const Genome& g, const SpaceConfig& space) {
  const std::vector<std::string> v = validate_genome(g, space);
  if (v.empty()) return;
  std::string msg = "invalid genome '" + encode(g) + "':";
  for (const std::string& s : v) msg += " " + s + ";";
  throw InvalidArgument(msg);
}

}  // namespace

nn::Model materialize(const Genome& g, const SpaceConfig& space, Rng& rng) {
  space.validate();
  require_valid(g, space);
  nn::Model m;
  m.d_rep = space.d_rep;
  m.num_classes = space.num_classes;
  m.bottom.input = space.input;
  int c = space.input.c;
  for (const BlockGene& b : g.blocks) {
    if (!b.is_conv()) {
      m.bottom.stages.push_back(nn::plain_stage(nn::make_pool(b.pool)));
      continue;
    }
    nn::Stage st;
    st.residual = true;
    st.body = {nn::make_depthwise_conv(c, b.kernel),
               nn::make_pointwise_conv(c, b.out_channels, true),
               nn::make_per_sample_norm(b.out_channels), nn::make_relu()};
    if (c != b.out_channels) st.projection = nn::make_pointwise_conv(c, b.out_channels, false);
    m.bottom.stages.push_back(std::move(st));
    c = b.out_channels;
  }
  m.bottom.stages.push_back(nn::plain_stage(nn::make_global_avg_pool()));
  m.bottom.stages.push_back(nn::plain_stage(nn::make_linear(c, space.d_rep)));
  m.head.input = {space.d_rep, 1, 1};
  m.head.stages.push_back(nn::plain_stage(nn::make_linear(space.d_rep, space.num_classes)));
  m.bottom.init_params(rng);
  m.head.init_params(rng);
  m.validate();
  return m;
}

size_t param_count(const Genome& g, const SpaceConfig& space) {
  space.validate();
  require_valid(g, space);
  size_t total = 0, c = space.input.c;
  for (const BlockGene& b : g.blocks) {
    if (!b.is_conv()) continue;
    const size_t k = b.kernel, out = b.out_channels;
    total += c * k * k;          // depthwise
    total += c * out + out;      // pointwise + bias
    total += 2 * out;            // norm affine
    if (c != out) total += c * out;  // shortcut projection
    c = out;
  }
  const size_t d = space.d_rep;
  total += c * d + d;
  total += d * space.num_classes + space.num_classes;
  return total;
}

nlohmann::json to_json(const SpaceConfig& s) {
  return {{"input", {s.input.c, s.input.h, s.input.w}},
          {"d_rep", s.d_rep},
          {"num_classes", s.num_classes},
          {"min_len", s.min_len},
          {"max_len", s.max_len}};
}

SpaceConfig space_from_json(const nlohmann::json& j) {
  SpaceConfig s;
  const auto& in = j.at("input");
  if (!in.is_array() || in.size() != 3) throw ParseError("space.input must be [C,H,W]");
  s.input = {in[0].get<int>(), in[1].get<int>(), in[2].get<int>()};
  s.d_rep = j.at("d_rep").get<int>();
  s.num_classes = j.at("num_classes").get<int>();
  s.min_len = j.at("min_len").get<int>();
  s.max_len = j.at("max_len").get<int>();
  s.validate();
  return s;
}

}  // namespace pfnas::space
