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
#ifndef PFNAS_ANALYSIS_ATTACK_H_
#define PFNAS_ANALYSIS_ATTACK_H_

#include <cstdint>
#include <string>
#include <vector>

#include "pfnas/common/rng.h"
#include "pfnas/nn/network.h"
#include "pfnas/nn/tensor.h"

namespace pfnas::analysis {

// Decoder z -> linear -> ReLU -> [hidden, H/2, W/2] -> 2x2 stride-2
// transposed conv -> sigmoid -> [C, H, W], trained with Adam on pixel MSE.
struct DecoderConfig {
  int hidden_channels = 8;
  int epochs = 30;
  double lr = 0.01;
  int batch = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
};

struct AttackReport {
  double eps = 0.0;  // label of the privacy setting that produced the bottom
  double mse = 0.0;  // mean over victim samples of the per-pixel MSE
  uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  DecoderConfig config;
  std::vector<double> per_sample_mse;
};

// The attacker knows the bottom model and holds auxiliary data drawn from
// the same distribution but disjoint from the victim shard (the caller's
// responsibility). It fits a decoder on (bottom(aux), aux) and reports how
// well it inverts the victim representations. A diverging decoder yields a
// report with failed = true instead of an exception.
AttackReport inversion_attack(const nn::Network& bottom, const nn::Tensor& aux,
                              const nn::Tensor& victim_z, const nn::Tensor& victim_x,
                              const DecoderConfig& cfg, Rng& rng);

// Same, computing the victim representations from victim_x.
AttackReport inversion_attack(const nn::Network& bottom, const nn::Tensor& aux,
                              const nn::Tensor& victim_x, const DecoderConfig& cfg, Rng& rng);

// Bottom forward pass over every row of x: [n, d_rep].
nn::Tensor representations(const nn::Network& bottom, const nn::Tensor& x);

// eps,mse,seed with eps written as "inf" for the non-private setting.
std::string attack_csv(const std::vector<AttackReport>& reports);

// Sorted from the weakest privacy (largest eps) to the strongest, the MSE
// never decreases. Needs at least two reports.
bool mse_ordering_holds(std::vector<AttackReport> one_seed);

}  // namespace pfnas::analysis

#endif  // PFNAS_ANALYSIS_ATTACK_H_
