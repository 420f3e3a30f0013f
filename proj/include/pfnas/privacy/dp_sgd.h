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

#ifndef PFNAS_PRIVACY_DP_SGD_H_
#define PFNAS_PRIVACY_DP_SGD_H_

#include <span>
#include <vector>

#include "pfnas/common/rng.h"
#include "pfnas/nn/network.h"
#include "pfnas/privacy/accountant.h"

namespace pfnas::privacy {

// g * min(1, C / |g|_2). The zero vector maps to itself.
std::vector<float> clip(std::span<const float> g, double C);
void clip_in_place(std::span<float> g, double C);

// (1/B) (sum_i clip(g_i, C) + N(0, sigma^2 C^2 I)), accumulated in double.
// Noise is drawn coordinate by coordinate in order from rng.
std::vector<float> privatize(const std::vector<std::vector<float>>& per_sample,
                             double C, double sigma, Rng& rng);

struct StepResult {
  double mean_loss = 0.0;
  size_t batch_size = 0;
};

// One DP-SGD step: params -= eta * privatize(per-sample grads). With a ledger
// the step is first charged to it, so an overspending step throws
// BudgetExhausted and leaves the model untouched. A non-finite update throws
// NonFiniteError; the model is likewise left untouched, but the ledger keeps
// the charge since noise was already drawn.
StepResult dp_sgd_step(nn::Model& model, const nn::Tensor& batch,
                       std::span<const int> labels, const DPConfig& dp, double eta,
                       Rng& rng, PrivacyLedger* ledger = nullptr,
                       nn::Loss loss = nn::Loss::kSoftmaxCrossEntropy);

// The same update on a bare network.
StepResult dp_sgd_step(nn::Network& net, const nn::Tensor& inputs,
                       std::span<const int> labels, const DPConfig& dp, double eta,
                       Rng& rng, PrivacyLedger* ledger, nn::Loss loss);

// Uniform sampling without replacement of round(q * n) indices (at least 1).
std::vector<size_t> sample_batch(size_t n, double q, Rng& rng);

}  // namespace pfnas::privacy

#endif  // PFNAS_PRIVACY_DP_SGD_H_
