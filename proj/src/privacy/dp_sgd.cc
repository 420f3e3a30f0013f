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

#include "pfnas/privacy/dp_sgd.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pfnas/common/error.h"

namespace pfnas::privacy {
namespace {

double l2(std::span<const float> g) {
  double s = 0;
  for (float v : g) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

template <typename Net>
StepResult step_impl(Net& net, const nn::Tensor& inputs, std::span<const int> labels,
                     const DPConfig& dp, double eta, Rng& rng, PrivacyLedger* ledger,
                     nn::Loss loss) {
  dp.validate();
  if (!(eta > 0) || !std::isfinite(eta)) throw InvalidArgument("learning rate must be > 0");
  if (ledger) ledger->record(1);
  nn::SampleGradients sg = nn::per_sample_gradients(net, inputs, labels, loss);
  const std::vector<float> update = privatize(sg.grads, dp.C, dp.sigma, rng);
  std::vector<float> params = net.params();
  for (size_t i = 0; i < params.size(); ++i) {
    const float next = params[i] - static_cast<float>(eta) * update[i];
    if (!std::isfinite(next))
      throw NonFiniteError("DP-SGD update produced a non-finite parameter at index " +
                           std::to_string(i));
    params[i] = next;
  }
  net.set_params(params);
  StepResult r;
  r.batch_size = sg.grads.size();
  r.mean_loss = std::accumulate(sg.losses.begin(), sg.losses.end(), 0.0) / r.batch_size;
  return r;
}

}  // namespace

void clip_in_place(std::span<float> g, double C) {
  if (!(C > 0)) throw InvalidArgument("clip threshold must be > 0");
  const double norm = l2(g);
  if (norm <= C) return;
  const double scale = C / norm;
  for (float& v : g) v = static_cast<float>(v * scale);
}

std::vector<float> clip(std::span<const float> g, double C) {
  std::vector<float> out(g.begin(), g.end());
  clip_in_place(out, C);
  return out;
}

std::vector<float> privatize(const std::vector<std::vector<float>>& per_sample, double C,
                             double sigma, Rng& rng) {
  if (per_sample.empty()) throw InvalidArgument("privatize: empty batch");
  if (!(C > 0)) throw InvalidArgument("clip threshold must be > 0");
  const size_t dim = per_sample[0].size();
  std::vector<double> sum(dim, 0.0);
  for (const auto& g : per_sample) {
    if (g.size() != dim) throw ShapeError("privatize: ragged per-sample gradients");
    const double norm = l2(g);
    const double scale = norm > C ? C / norm : 1.0;
    for (size_t i = 0; i < dim; ++i) sum[i] += scale * g[i];
  }
  if (sigma > 0) {
    std::normal_distribution<double> noise(0.0, sigma * C);
    for (double& s : sum) s += noise(rng);
  }
  std::vector<float> out(dim);
  const double inv_b = 1.0 / per_sample.size();
  for (size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(sum[i] * inv_b);
  return out;
}

StepResult dp_sgd_step(nn::Model& model, const nn::Tensor& batch, std::span<const int> labels,
                       const DPConfig& dp, double eta, Rng& rng, PrivacyLedger* ledger,
                       nn::Loss loss) {
  return step_impl(model, batch, labels, dp, eta, rng, ledger, loss);
}

StepResult dp_sgd_step(nn::Network& net, const nn::Tensor& inputs, std::span<const int> labels,
                       const DPConfig& dp, double eta, Rng& rng, PrivacyLedger* ledger,
                       nn::Loss loss) {
  return step_impl(net, inputs, labels, dp, eta, rng, ledger, loss);
}

std::vector<size_t> sample_batch(size_t n, double q, Rng& rng) {
  if (n == 0) throw InvalidArgument("sample_batch: empty shard");
  if (!(q > 0 && q <= 1)) throw InvalidArgument("sampling rate q must be in (0, 1]");
  const size_t b = std::clamp<size_t>(static_cast<size_t>(std::llround(q * n)), 1, n);
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first b entries are a uniform b-subset.
  for (size_t i = 0; i < b; ++i) {
    const size_t j = std::uniform_int_distribution<size_t>(i, n - 1)(rng);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(b);
  return idx;
}

}  // namespace pfnas::privacy
