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

#ifndef PFNAS_TESTS_SUPPORT_REFERENCE_NET_H_
#define PFNAS_TESTS_SUPPORT_REFERENCE_NET_H_

// Double-precision re-implementation of the network forward pass, written
// directly from the layer definitions (naive loops, no shared code with the
// library kernels). Used as the finite-difference oracle.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "pfnas/common/rng.h"
#include "pfnas/nn/network.h"

namespace pfnas::testing {

struct RefMap {
  int c, h, w;
  std::vector<double> v;
  double& at(int ci, int y, int x) { return v[(ci * h + y) * w + x]; }
  double at(int ci, int y, int x) const { return v[(ci * h + y) * w + x]; }
};

inline RefMap ref_layer(const nn::LayerInstance& l, const double* p, const RefMap& in) {
  using nn::LayerKind;
  RefMap out = in;
  switch (l.kind) {
    case LayerKind::kDepthwiseConv: {
      const int k = l.kernel, pad = k / 2;
      for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < in.h; ++y)
          for (int x = 0; x < in.w; ++x) {
            double s = 0;
            for (int a = 0; a < k; ++a)
              for (int b = 0; b < k; ++b) {
                const int yy = y + a - pad, xx = x + b - pad;
                if (yy < 0 || yy >= in.h || xx < 0 || xx >= in.w) continue;
                s += p[(c * k + a) * k + b] * in.at(c, yy, xx);
              }
            out.at(c, y, x) = s;
          }
      break;
    }
    case LayerKind::kPointwiseConv: {
      out = RefMap{l.out_channels, in.h, in.w,
                   std::vector<double>(static_cast<size_t>(l.out_channels) * in.h * in.w)};
      for (int o = 0; o < l.out_channels; ++o)
        for (int y = 0; y < in.h; ++y)
          for (int x = 0; x < in.w; ++x) {
            double s = l.bias ? p[l.out_channels * in.c + o] : 0.0;
            for (int i = 0; i < in.c; ++i) s += p[o * in.c + i] * in.at(i, y, x);
            out.at(o, y, x) = s;
          }
      break;
    }
    case LayerKind::kPerSampleNorm: {
      const int gs = std::min(8, in.c);
      for (int g0 = 0; g0 < in.c; g0 += gs) {
        const int g1 = std::min(in.c, g0 + gs);
        double mean = 0, var = 0, n = 0;
        for (int c = g0; c < g1; ++c)
          for (int y = 0; y < in.h; ++y)
            for (int x = 0; x < in.w; ++x) mean += in.at(c, y, x), n += 1;
        mean /= n;
        for (int c = g0; c < g1; ++c)
          for (int y = 0; y < in.h; ++y)
            for (int x = 0; x < in.w; ++x) var += std::pow(in.at(c, y, x) - mean, 2);
        var /= n;
        for (int c = g0; c < g1; ++c)
          for (int y = 0; y < in.h; ++y)
            for (int x = 0; x < in.w; ++x)
              out.at(c, y, x) = p[c] * (in.at(c, y, x) - mean) /
                                    std::sqrt(var + nn::kNormEpsilon) + p[in.c + c];
      }
      break;
    }
    case LayerKind::kRelu:
      for (double& v : out.v) v = std::max(0.0, v);
      break;
    case LayerKind::kAvgPool:
    case LayerKind::kMaxPool: {
      out = RefMap{in.c, in.h / 2, in.w / 2,
                   std::vector<double>(static_cast<size_t>(in.c) * (in.h / 2) * (in.w / 2))};
      for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < out.h; ++y)
          for (int x = 0; x < out.w; ++x) {
            const double a = in.at(c, 2 * y, 2 * x), b = in.at(c, 2 * y, 2 * x + 1),
                         d = in.at(c, 2 * y + 1, 2 * x), e = in.at(c, 2 * y + 1, 2 * x + 1);
            out.at(c, y, x) = l.kind == LayerKind::kAvgPool
                                  ? (a + b + d + e) / 4
                                  : std::max(std::max(a, b), std::max(d, e));
          }
      break;
    }
    case LayerKind::kGlobalAvgPool: {
      out = RefMap{in.c, 1, 1, std::vector<double>(in.c)};
      for (int c = 0; c < in.c; ++c) {
        double s = 0;
        for (int y = 0; y < in.h; ++y)
          for (int x = 0; x < in.w; ++x) s += in.at(c, y, x);
        out.v[c] = s / (in.h * in.w);
      }
      break;
    }
    case LayerKind::kLinear: {
      const int n = l.in_channels;
      out = RefMap{l.out_channels, 1, 1, std::vector<double>(l.out_channels)};
      for (int o = 0; o < l.out_channels; ++o) {
        double s = l.bias ? p[l.out_channels * n + o] : 0.0;
        for (int i = 0; i < n; ++i) s += p[o * n + i] * in.v[i];
        out.v[o] = s;
      }
      break;
    }
  }
  return out;
}

// Forward pass of `net` with parameters taken from `params` (flat order).
inline std::vector<double> ref_forward(const nn::Network& net, const double* params,
                                       std::vector<double> x) {
  RefMap cur{net.input.c, net.input.h, net.input.w, std::move(x)};
  size_t off = 0;
  for (const nn::Stage& st : net.stages) {
    const RefMap stage_in = cur;
    for (const nn::LayerInstance& l : st.body) {
      cur = ref_layer(l, params + off, cur);
      off += l.params.size();
    }
    if (st.residual) {
      RefMap sc = stage_in;
      if (st.projection) {
        sc = ref_layer(*st.projection, params + off, stage_in);
        off += st.projection->params.size();
      }
      for (size_t i = 0; i < cur.v.size(); ++i) cur.v[i] += sc.v[i];
    }
  }
  return cur.v;
}

inline double ref_loss(nn::Loss loss, const std::vector<double>& out, int label) {
  if (loss == nn::Loss::kSquaredError) return std::pow(out[0] - label, 2);
  double mx = *std::max_element(out.begin(), out.end()), z = 0;
  for (double v : out) z += std::exp(v - mx);
  return mx + std::log(z) - out[label];
}

inline double ref_model_loss(const nn::Model& m, const std::vector<double>& params,
                             std::span<const float> x, int label, nn::Loss loss) {
  std::vector<double> xin(x.begin(), x.end());
  const std::vector<double> z = ref_forward(m.bottom, params.data(), xin);
  const std::vector<double> y =
      ref_forward(m.head, params.data() + m.bottom.param_count(), z);
  return ref_loss(loss, y, label);
}

// Central differences of the double-precision reference loss.
inline std::vector<double> finite_difference_gradient(const nn::Model& m,
                                                      std::span<const float> x,
                                                      int label, nn::Loss loss,
                                                      double h = 1e-6) {
  const std::vector<float> pf = m.params();
  std::vector<double> p(pf.begin(), pf.end());
  std::vector<double> g(p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = ref_model_loss(m, p, x, label, loss);
    p[i] = keep - h;
    const double down = ref_model_loss(m, p, x, label, loss);
    p[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// Residual depthwise-separable block used by the tiny random models.
inline nn::Stage ref_block(int in_c, int out_c, int k) {
  nn::Stage st;
  st.residual = true;
  st.body = {nn::make_depthwise_conv(in_c, k), nn::make_pointwise_conv(in_c, out_c, true),
             nn::make_per_sample_norm(out_c), nn::make_relu()};
  if (in_c != out_c) st.projection = nn::make_pointwise_conv(in_c, out_c, false);
  return st;
}

// Random model with at most ~500 parameters exercising every layer kind.
inline nn::Model random_tiny_model(Rng& rng) {
  std::uniform_int_distribution<int> ch(1, 3), sp(4, 6), width(2, 4), cls(2, 3),
      coin(0, 1);
  nn::Model m;
  m.bottom.input = {ch(rng), sp(rng), sp(rng)};
  int c = m.bottom.input.c;
  const int blocks = 1 + coin(rng);
  for (int b = 0; b < blocks; ++b) {
    const int out_c = coin(rng) ? c : width(rng);
    m.bottom.stages.push_back(ref_block(c, out_c, coin(rng) ? 3 : 5));
    c = out_c;
    if (b == 0)
      m.bottom.stages.push_back(
          nn::plain_stage(nn::make_pool(coin(rng) ? nn::PoolType::kAvg : nn::PoolType::kMax)));
  }
  m.bottom.stages.push_back(nn::plain_stage(nn::make_global_avg_pool()));
  m.d_rep = width(rng);
  m.bottom.stages.push_back(nn::plain_stage(nn::make_linear(c, m.d_rep)));
  m.num_classes = cls(rng);
  m.head.input = {m.d_rep, 1, 1};
  m.head.stages.push_back(nn::plain_stage(nn::make_linear(m.d_rep, m.num_classes)));
  m.bottom.init_params(rng);
  m.head.init_params(rng);
  // Perturb norm affine parameters and biases away from their init values.
  std::vector<float> p = m.params();
  std::normal_distribution<float> jitter(0.0f, 0.1f);
  for (float& v : p) v += jitter(rng);
  m.set_params(p);
  return m;
}

inline nn::Tensor random_batch(const nn::Shape3& s, int n, Rng& rng) {
  nn::Tensor t({n, s.c, s.h, s.w});
  std::normal_distribution<float> d(0.0f, 1.0f);
  for (float& v : t.values()) v = d(rng);
  return t;
}

}  // namespace pfnas::testing

#endif  // PFNAS_TESTS_SUPPORT_REFERENCE_NET_H_
