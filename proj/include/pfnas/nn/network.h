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

#ifndef PFNAS_NN_NETWORK_H_
#define PFNAS_NN_NETWORK_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pfnas/common/rng.h"
#include "pfnas/nn/ops.h"
#include "pfnas/nn/tensor.h"

namespace pfnas::nn {

enum class LayerKind {
  kDepthwiseConv,
  kPointwiseConv,
  kPerSampleNorm,
  kRelu,
  kAvgPool,
  kMaxPool,
  kGlobalAvgPool,
  kLinear,
};

std::string_view layer_kind_name(LayerKind kind);

// One primitive layer with its flat parameter vector. Which attributes are
// meaningful depends on the kind:
//   depthwise-conv   in_channels, kernel            params c*k*k
//   pointwise-conv   in_channels, out_channels, bias params out*in (+out)
//   per-sample-norm  in_channels                     params gamma[c], beta[c]
//   linear           in_channels=in features, out_channels=out features
struct LayerInstance {
  LayerKind kind = LayerKind::kRelu;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  bool bias = false;
  std::vector<float> params;

  size_t expected_param_count() const;
};

LayerInstance make_depthwise_conv(int channels, int kernel);
LayerInstance make_pointwise_conv(int in_channels, int out_channels, bool bias);
LayerInstance make_per_sample_norm(int channels);
LayerInstance make_relu();
LayerInstance make_pool(PoolType type);
LayerInstance make_global_avg_pool();
LayerInstance make_linear(int in_features, int out_features, bool bias = true);

// A run of layers, optionally wrapped in a residual connection. With
// `residual` set the stage computes body(x) + shortcut(x), where the
// shortcut is `projection` (a bias-free pointwise conv) when present and
// the identity otherwise.
struct Stage {
  std::vector<LayerInstance> body;
  bool residual = false;
  std::optional<LayerInstance> projection;
};

Stage plain_stage(LayerInstance layer);

struct LayerTrace {
  Shape3 in_shape;
  std::vector<float> input;
  NormCache norm;
  std::vector<int> argmax;
};

struct StageTrace {
  Shape3 in_shape;
  std::vector<float> input;
  std::vector<LayerTrace> layers;
  LayerTrace projection;
};

struct NetworkTrace {
  std::vector<StageTrace> stages;
};

// A feed-forward stack of stages acting on one sample at a time.
class Network {
 public:
  Shape3 input;
  std::vector<Stage> stages;

  // Propagates shapes through every layer. Throws ShapeError naming the
  // first offending layer.
  Shape3 output_shape() const;
  // Checks shapes and parameter lengths.
  void validate() const;

  size_t param_count() const;
  std::vector<float> params() const;
  void set_params(std::span<const float> flat);
  void init_params(Rng& rng);

  std::vector<float> forward_sample(std::span<const float> x,
                                    NetworkTrace* trace) const;
  // Accumulates d loss / d params into grad_params (length param_count())
  // and, when grad_input is non-null, stores d loss / d input.
  void backward_sample(const NetworkTrace& trace,
                       std::span<const float> grad_out,
                       std::span<float> grad_params,
                       std::vector<float>* grad_input) const;
};

// Client model F = H(theta) o phi(v): `bottom` maps an input image to a
// d_rep representation, `head` maps representations to class logits. The
// flat parameter order is bottom first, then head.
struct Model {
  Network bottom;
  Network head;
  int d_rep = 0;
  int num_classes = 0;

  void validate() const;
  size_t param_count() const { return bottom.param_count() + head.param_count(); }
  std::vector<float> params() const;
  void set_params(std::span<const float> flat);
};

enum class Loss {
  kSoftmaxCrossEntropy,
  // Single-output regression against the label value: (y_hat - y)^2.
  kSquaredError,
};

// Loss for one sample; writes d loss / d output into grad.
double sample_loss(Loss loss, std::span<const float> output, int label,
                   std::span<float> grad);

struct ForwardResult {
  Tensor representations;  // [n, d_rep]
  Tensor logits;           // [n, num_classes]
};

ForwardResult forward(const Model& model, const Tensor& batch);

struct SampleGradients {
  std::vector<std::vector<float>> grads;
  std::vector<double> losses;
};

SampleGradients per_sample_gradients(
    const Model& model, const Tensor& batch, std::span<const int> labels,
    Loss loss = Loss::kSoftmaxCrossEntropy);

struct BatchGradient {
  std::vector<float> grad;
  double mean_loss = 0.0;
};

// Mean gradient over the batch, accumulated in a single buffer.
BatchGradient batch_gradient(const Model& model, const Tensor& batch,
                             std::span<const int> labels,
                             Loss loss = Loss::kSoftmaxCrossEntropy);

// Same as above for a bare network whose rows of `inputs` are flat samples.
SampleGradients per_sample_gradients(const Network& net, const Tensor& inputs,
                                     std::span<const int> labels, Loss loss);
BatchGradient batch_gradient(const Network& net, const Tensor& inputs,
                             std::span<const int> labels, Loss loss);
double mean_loss(const Network& net, const Tensor& inputs,
                 std::span<const int> labels, Loss loss);

std::vector<int> predict(const Model& model, const Tensor& batch);
double accuracy(const Model& model, const Tensor& batch,
                std::span<const int> labels);

// Copies rows `indices` of a [n, ...] tensor.
Tensor gather_rows(const Tensor& t, std::span<const size_t> indices);

}  // namespace pfnas::nn

#endif  // PFNAS_NN_NETWORK_H_
