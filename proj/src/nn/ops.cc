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

#include "pfnas/nn/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pfnas::nn {

void depthwise_conv_forward(std::span<const float> in, Shape3 s, int k,
                            std::span<const float> weights,
                            std::span<float> out) {
  const int pad = k / 2;
  std::fill(out.begin(), out.end(), 0.0f);
  for (int c = 0; c < s.c; ++c) {
    const float* src = in.data() + c * s.plane();
    float* dst = out.data() + c * s.plane();
    for (int ky = 0; ky < k; ++ky) {
      const int dy = ky - pad;
      const int y0 = std::max(0, -dy), y1 = std::min(s.h, s.h - dy);
      for (int kx = 0; kx < k; ++kx) {
        const int dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(s.w, s.w - dx);
        const float wv = weights[(c * k + ky) * k + kx];
        for (int y = y0; y < y1; ++y) {
          const float* srow = src + (y + dy) * s.w + dx;
          float* drow = dst + y * s.w;
          for (int x = x0; x < x1; ++x) drow[x] += wv * srow[x];
        }
      }
    }
  }
}

void depthwise_conv_backward(std::span<const float> in, Shape3 s, int k,
                             std::span<const float> weights,
                             std::span<const float> grad_out,
                             std::span<float> grad_in,
                             std::span<float> grad_weights) {
  const int pad = k / 2;
  std::fill(grad_in.begin(), grad_in.end(), 0.0f);
  for (int c = 0; c < s.c; ++c) {
    const float* src = in.data() + c * s.plane();
    const float* g = grad_out.data() + c * s.plane();
    float* gi = grad_in.data() + c * s.plane();
    for (int ky = 0; ky < k; ++ky) {
      const int dy = ky - pad;
      const int y0 = std::max(0, -dy), y1 = std::min(s.h, s.h - dy);
      for (int kx = 0; kx < k; ++kx) {
        const int dx = kx - pad;
        const int x0 = std::max(0, -dx), x1 = std::min(s.w, s.w - dx);
        const float wv = weights[(c * k + ky) * k + kx];
        double acc = 0.0;
        for (int y = y0; y < y1; ++y) {
          const float* srow = src + (y + dy) * s.w + dx;
          float* girow = gi + (y + dy) * s.w + dx;
          const float* grow = g + y * s.w;
          float row_acc = 0.0f;
          for (int x = x0; x < x1; ++x) {
            row_acc += grow[x] * srow[x];
            girow[x] += wv * grow[x];
          }
          acc += row_acc;
        }
        grad_weights[(c * k + ky) * k + kx] += static_cast<float>(acc);
      }
    }
  }
}

void pointwise_conv_forward(std::span<const float> in, Shape3 s, int c_out,
                            std::span<const float> weights,
                            std::span<const float> bias, std::span<float> out) {
  const size_t p = s.plane();
  for (int o = 0; o < c_out; ++o) {
    float* dst = out.data() + o * p;
    const float b = bias.empty() ? 0.0f : bias[o];
    std::fill(dst, dst + p, b);
    for (int i = 0; i < s.c; ++i) {
      const float wv = weights[o * s.c + i];
      const float* src = in.data() + i * p;
      for (size_t j = 0; j < p; ++j) dst[j] += wv * src[j];
    }
  }
}

void pointwise_conv_backward(std::span<const float> in, Shape3 s, int c_out,
                             std::span<const float> weights,
                             std::span<const float> grad_out,
                             std::span<float> grad_in,
                             std::span<float> grad_weights,
                             std::span<float> grad_bias) {
  const size_t p = s.plane();
  std::fill(grad_in.begin(), grad_in.end(), 0.0f);
  for (int o = 0; o < c_out; ++o) {
    const float* g = grad_out.data() + o * p;
    if (!grad_bias.empty()) {
      double acc = 0.0;
      for (size_t j = 0; j < p; ++j) acc += g[j];
      grad_bias[o] += static_cast<float>(acc);
    }
    for (int i = 0; i < s.c; ++i) {
      const float wv = weights[o * s.c + i];
      const float* src = in.data() + i * p;
      float* gi = grad_in.data() + i * p;
      float acc = 0.0f;
      for (size_t j = 0; j < p; ++j) {
        acc += g[j] * src[j];
        gi[j] += wv * g[j];
      }
      grad_weights[o * s.c + i] += acc;
    }
  }
}

int norm_group_size(int channels) { return std::min(8, channels); }

namespace {

struct GroupRange {
  int begin;
  int end;
};

GroupRange group_range(int g, int group_size, int channels) {
  return {g * group_size, std::min(channels, (g + 1) * group_size)};
}

int group_count(int channels, int group_size) {
  return (channels + group_size - 1) / group_size;
}

}  // namespace

void group_norm_forward(std::span<const float> in, Shape3 s, int group_size,
                        std::span<const float> gamma,
                        std::span<const float> beta, std::span<float> out,
                        NormCache* cache) {
  const size_t p = s.plane();
  const int groups = group_count(s.c, group_size);
  if (cache) {
    cache->xhat.resize(s.size());
    cache->rstd.resize(groups);
  }
  for (int g = 0; g < groups; ++g) {
    const auto [c0, c1] = group_range(g, group_size, s.c);
    const size_t begin = c0 * p, end = c1 * p;
    double sum = 0.0, sq = 0.0;
    for (size_t j = begin; j < end; ++j) sum += in[j];
    const double n = static_cast<double>(end - begin);
    const double mean = sum / n;
    for (size_t j = begin; j < end; ++j) {
      const double d = in[j] - mean;
      sq += d * d;
    }
    const float rstd = static_cast<float>(1.0 / std::sqrt(sq / n + kNormEpsilon));
    for (int c = c0; c < c1; ++c) {
      for (size_t j = c * p; j < (c + 1) * p; ++j) {
        const float xhat = static_cast<float>(in[j] - mean) * rstd;
        if (cache) cache->xhat[j] = xhat;
        out[j] = gamma[c] * xhat + beta[c];
      }
    }
    if (cache) cache->rstd[g] = rstd;
  }
}

void group_norm_backward(Shape3 s, int group_size, const NormCache& cache,
                         std::span<const float> gamma,
                         std::span<const float> grad_out,
                         std::span<float> grad_in, std::span<float> grad_gamma,
                         std::span<float> grad_beta) {
  const size_t p = s.plane();
  const int groups = group_count(s.c, group_size);
  for (int g = 0; g < groups; ++g) {
    const auto [c0, c1] = group_range(g, group_size, s.c);
    double sum_d = 0.0, sum_dx = 0.0;
    for (int c = c0; c < c1; ++c) {
      double gg = 0.0, gb = 0.0;
      for (size_t j = c * p; j < (c + 1) * p; ++j) {
        gg += grad_out[j] * cache.xhat[j];
        gb += grad_out[j];
        const double d = grad_out[j] * gamma[c];
        sum_d += d;
        sum_dx += d * cache.xhat[j];
      }
      grad_gamma[c] += static_cast<float>(gg);
      grad_beta[c] += static_cast<float>(gb);
    }
    const double n = static_cast<double>((c1 - c0) * p);
    const double rstd = cache.rstd[g];
    for (int c = c0; c < c1; ++c) {
      for (size_t j = c * p; j < (c + 1) * p; ++j) {
        const double d = grad_out[j] * gamma[c];
        grad_in[j] = static_cast<float>(
            rstd * (d - sum_d / n - cache.xhat[j] * sum_dx / n));
      }
    }
  }
}

void relu_forward(std::span<const float> in, std::span<float> out) {
  for (size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
}

void relu_backward(std::span<const float> in, std::span<const float> grad_out,
                   std::span<float> grad_in) {
  for (size_t i = 0; i < in.size(); ++i)
    grad_in[i] = in[i] > 0.0f ? grad_out[i] : 0.0f;
}

Shape3 pool_output_shape(Shape3 s) { return {s.c, s.h / 2, s.w / 2}; }

void pool_forward(PoolType type, std::span<const float> in, Shape3 s,
                  std::span<float> out, std::vector<int>* argmax) {
  const Shape3 o = pool_output_shape(s);
  if (argmax && type == PoolType::kMax) argmax->assign(o.size(), 0);
  for (int c = 0; c < s.c; ++c) {
    for (int y = 0; y < o.h; ++y) {
      for (int x = 0; x < o.w; ++x) {
        const size_t oi = (static_cast<size_t>(c) * o.h + y) * o.w + x;
        const size_t base = (static_cast<size_t>(c) * s.h + 2 * y) * s.w + 2 * x;
        const size_t idx[4] = {base, base + 1, base + s.w, base + s.w + 1};
        if (type == PoolType::kAvg) {
          out[oi] = 0.25f * (in[idx[0]] + in[idx[1]] + in[idx[2]] + in[idx[3]]);
        } else {
          size_t best = idx[0];
          for (size_t t = 1; t < 4; ++t)
            if (in[idx[t]] > in[best]) best = idx[t];
          out[oi] = in[best];
          if (argmax) (*argmax)[oi] = static_cast<int>(best);
        }
      }
    }
  }
}

void pool_backward(PoolType type, Shape3 s, const std::vector<int>& argmax,
                   std::span<const float> grad_out, std::span<float> grad_in) {
  const Shape3 o = pool_output_shape(s);
  std::fill(grad_in.begin(), grad_in.end(), 0.0f);
  for (int c = 0; c < s.c; ++c) {
    for (int y = 0; y < o.h; ++y) {
      for (int x = 0; x < o.w; ++x) {
        const size_t oi = (static_cast<size_t>(c) * o.h + y) * o.w + x;
        if (type == PoolType::kMax) {
          grad_in[argmax[oi]] += grad_out[oi];
        } else {
          const size_t base =
              (static_cast<size_t>(c) * s.h + 2 * y) * s.w + 2 * x;
          const float g = 0.25f * grad_out[oi];
          grad_in[base] += g;
          grad_in[base + 1] += g;
          grad_in[base + s.w] += g;
          grad_in[base + s.w + 1] += g;
        }
      }
    }
  }
}

void global_avg_pool_forward(std::span<const float> in, Shape3 s,
                             std::span<float> out) {
  const size_t p = s.plane();
  for (int c = 0; c < s.c; ++c) {
    double acc = 0.0;
    for (size_t j = 0; j < p; ++j) acc += in[c * p + j];
    out[c] = static_cast<float>(acc / static_cast<double>(p));
  }
}

void global_avg_pool_backward(Shape3 s, std::span<const float> grad_out,
                              std::span<float> grad_in) {
  const size_t p = s.plane();
  const float scale = 1.0f / static_cast<float>(p);
  for (int c = 0; c < s.c; ++c)
    std::fill_n(grad_in.begin() + c * p, p, grad_out[c] * scale);
}

void linear_forward(std::span<const float> in, int out_features,
                    std::span<const float> weights, std::span<const float> bias,
                    std::span<float> out) {
  const size_t n = in.size();
  for (int o = 0; o < out_features; ++o) {
    const float* row = weights.data() + o * n;
    float acc = bias.empty() ? 0.0f : bias[o];
    for (size_t i = 0; i < n; ++i) acc += row[i] * in[i];
    out[o] = acc;
  }
}

void linear_backward(std::span<const float> in, int out_features,
                     std::span<const float> weights,
                     std::span<const float> grad_out, std::span<float> grad_in,
                     std::span<float> grad_weights, std::span<float> grad_bias) {
  const size_t n = in.size();
  std::fill(grad_in.begin(), grad_in.end(), 0.0f);
  for (int o = 0; o < out_features; ++o) {
    const float g = grad_out[o];
    const float* row = weights.data() + o * n;
    float* grow = grad_weights.data() + o * n;
    for (size_t i = 0; i < n; ++i) {
      grow[i] += g * in[i];
      grad_in[i] += g * row[i];
    }
    if (!grad_bias.empty()) grad_bias[o] += g;
  }
}

double softmax_cross_entropy(std::span<const float> logits, int label,
                             std::span<float> grad_logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (float v : logits) mx = std::max(mx, static_cast<double>(v));
  double z = 0.0;
  for (float v : logits) z += std::exp(v - mx);
  const double log_z = mx + std::log(z);
  for (size_t i = 0; i < logits.size(); ++i) {
    const double p = std::exp(logits[i] - log_z);
    grad_logits[i] = static_cast<float>(p - (static_cast<int>(i) == label ? 1.0 : 0.0));
  }
  return log_z - logits[label];
}

}  // namespace pfnas::nn
