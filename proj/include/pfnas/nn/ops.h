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

#ifndef PFNAS_NN_OPS_H_
#define PFNAS_NN_OPS_H_

// Single-sample kernels over CHW feature maps. Every backward routine
// *accumulates* into its parameter-gradient output and *overwrites* its
// input-gradient output.

#include <cstddef>
#include <span>
#include <vector>

namespace pfnas::nn {

struct Shape3 {
  int c = 0;
  int h = 1;
  int w = 1;

  size_t size() const { return static_cast<size_t>(c) * h * w; }
  size_t plane() const { return static_cast<size_t>(h) * w; }
  bool operator==(const Shape3&) const = default;
};

enum class PoolType { kAvg, kMax };

// Depthwise k x k convolution, stride 1, zero padding k/2, no bias.
// weights: [c, k, k].
void depthwise_conv_forward(std::span<const float> in, Shape3 s, int k,
                            std::span<const float> weights,
                            std::span<float> out);
void depthwise_conv_backward(std::span<const float> in, Shape3 s, int k,
                             std::span<const float> weights,
                             std::span<const float> grad_out,
                             std::span<float> grad_in,
                             std::span<float> grad_weights);

// 1x1 convolution. weights: [c_out, c_in] followed by c_out biases when
// bias is non-empty.
void pointwise_conv_forward(std::span<const float> in, Shape3 s, int c_out,
                            std::span<const float> weights,
                            std::span<const float> bias, std::span<float> out);
void pointwise_conv_backward(std::span<const float> in, Shape3 s, int c_out,
                             std::span<const float> weights,
                             std::span<const float> grad_out,
                             std::span<float> grad_in,
                             std::span<float> grad_weights,
                             std::span<float> grad_bias);

// Per-sample group normalization with per-channel affine (gamma, beta).
// Statistics never mix samples.
struct NormCache {
  std::vector<float> xhat;
  std::vector<float> rstd;  // one per group
};
inline constexpr float kNormEpsilon = 1e-5f;
int norm_group_size(int channels);
void group_norm_forward(std::span<const float> in, Shape3 s, int group_size,
                        std::span<const float> gamma,
                        std::span<const float> beta, std::span<float> out,
                        NormCache* cache);
void group_norm_backward(Shape3 s, int group_size, const NormCache& cache,
                         std::span<const float> gamma,
                         std::span<const float> grad_out,
                         std::span<float> grad_in, std::span<float> grad_gamma,
                         std::span<float> grad_beta);

void relu_forward(std::span<const float> in, std::span<float> out);
void relu_backward(std::span<const float> in, std::span<const float> grad_out,
                   std::span<float> grad_in);

// 2x2 window, stride 2; odd trailing rows/columns are dropped.
Shape3 pool_output_shape(Shape3 s);
void pool_forward(PoolType type, std::span<const float> in, Shape3 s,
                  std::span<float> out, std::vector<int>* argmax);
void pool_backward(PoolType type, Shape3 s, const std::vector<int>& argmax,
                   std::span<const float> grad_out, std::span<float> grad_in);

void global_avg_pool_forward(std::span<const float> in, Shape3 s,
                             std::span<float> out);
void global_avg_pool_backward(Shape3 s, std::span<const float> grad_out,
                              std::span<float> grad_in);

// y = W x + b with W: [out, in] row-major; bias may be empty.
void linear_forward(std::span<const float> in, int out_features,
                    std::span<const float> weights, std::span<const float> bias,
                    std::span<float> out);
void linear_backward(std::span<const float> in, int out_features,
                     std::span<const float> weights,
                     std::span<const float> grad_out, std::span<float> grad_in,
                     std::span<float> grad_weights, std::span<float> grad_bias);

// Softmax cross-entropy for one sample; writes d loss / d logits.
double softmax_cross_entropy(std::span<const float> logits, int label,
                             std::span<float> grad_logits);

}  // namespace pfnas::nn

#endif  // PFNAS_NN_OPS_H_
