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

#include "pfnas/nn/network.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pfnas/common/error.h"

namespace pfnas::nn {

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDepthwiseConv: return "depthwise-conv";
    case LayerKind::kPointwiseConv: return "pointwise-conv";
    case LayerKind::kPerSampleNorm: return "per-sample-norm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kAvgPool: return "avg-pool";
    case LayerKind::kMaxPool: return "max-pool";
    case LayerKind::kGlobalAvgPool: return "global-avg-pool";
    case LayerKind::kLinear: return "linear";
  }
  return "unknown";
}

size_t LayerInstance::expected_param_count() const {
  const size_t in = in_channels, out = out_channels, k = kernel;
  switch (kind) {
    case LayerKind::kDepthwiseConv: return in * k * k;
    case LayerKind::kPointwiseConv:
    case LayerKind::kLinear: return out * in + (bias ? out : 0);
    case LayerKind::kPerSampleNorm: return 2 * in;
    default: return 0;
  }
}

namespace {

LayerInstance sized(LayerInstance layer) {
  layer.params.assign(layer.expected_param_count(), 0.0f);
  return layer;
}

}  // namespace

LayerInstance make_depthwise_conv(int channels, int kernel) {
  return sized({.kind = LayerKind::kDepthwiseConv, .in_channels = channels,
                .out_channels = channels, .kernel = kernel});
}

LayerInstance make_pointwise_conv(int in_channels, int out_channels, bool bias) {
  return sized({.kind = LayerKind::kPointwiseConv, .in_channels = in_channels,
                .out_channels = out_channels, .bias = bias});
}

LayerInstance make_per_sample_norm(int channels) {
  LayerInstance l = sized({.kind = LayerKind::kPerSampleNorm,
                           .in_channels = channels, .out_channels = channels});
  std::fill_n(l.params.begin(), channels, 1.0f);
  return l;
}

LayerInstance make_relu() { return {.kind = LayerKind::kRelu}; }

LayerInstance make_pool(PoolType type) {
  return {.kind = type == PoolType::kAvg ? LayerKind::kAvgPool : LayerKind::kMaxPool};
}

LayerInstance make_global_avg_pool() { return {.kind = LayerKind::kGlobalAvgPool}; }

LayerInstance make_linear(int in_features, int out_features, bool bias) {
  return sized({.kind = LayerKind::kLinear, .in_channels = in_features,
                .out_channels = out_features, .bias = bias});
}

Stage plain_stage(LayerInstance layer) {
  Stage s;
  s.body.push_back(std::move(layer));
  return s;
}

namespace {

std::string where(size_t stage, std::optional<size_t> layer, LayerKind kind) {
  std::ostringstream os;
  os << "stage " << stage;
  if (layer) {
    os << " layer " << *layer;
  } else {
    os << " shortcut";
  }
  os << " (" << layer_kind_name(kind) << ")";
  return os.str();
}

std::string shape_str(Shape3 s) {
  std::ostringstream os;
  os << '[' << s.c << ", " << s.h << ", " << s.w << ']';
  return os.str();
}

Shape3 layer_output_shape(const LayerInstance& l, Shape3 in,
                          const std::string& at) {
  auto require_channels = [&](int expected) {
    if (in.c != expected) {
      throw ShapeError(at + ": expected " + std::to_string(expected) +
                       " input channels, got input " + shape_str(in));
    }
  };
  switch (l.kind) {
    case LayerKind::kDepthwiseConv:
      if (l.kernel != 3 && l.kernel != 5)
        throw ShapeError(at + ": depthwise kernel must be 3 or 5");
      require_channels(l.in_channels);
      return in;
    case LayerKind::kPointwiseConv:
      require_channels(l.in_channels);
      return {l.out_channels, in.h, in.w};
    case LayerKind::kPerSampleNorm:
      require_channels(l.in_channels);
      return in;
    case LayerKind::kRelu:
      return in;
    case LayerKind::kAvgPool:
    case LayerKind::kMaxPool:
      if (in.h < 2 || in.w < 2)
        throw ShapeError(at + ": cannot pool spatial map " + shape_str(in));
      return pool_output_shape(in);
    case LayerKind::kGlobalAvgPool:
      return {in.c, 1, 1};
    case LayerKind::kLinear:
      if (in.size() != static_cast<size_t>(l.in_channels)) {
        throw ShapeError(at + ": expected " + std::to_string(l.in_channels) +
                         " input features, got input " + shape_str(in));
      }
      return {l.out_channels, 1, 1};
  }
  return in;
}

// Splits the parameter vector of a weight+bias layer.
struct WeightBias {
  std::span<const float> w;
  std::span<const float> b;
};

WeightBias split(const LayerInstance& l) {
  const size_t nw = static_cast<size_t>(l.in_channels) * l.out_channels;
  std::span<const float> p(l.params);
  return {p.first(nw), l.bias ? p.subspan(nw) : std::span<const float>()};
}

struct GradSplit {
  std::span<float> w;
  std::span<float> b;
};

GradSplit split_grad(const LayerInstance& l, std::span<float> g) {
  const size_t nw = static_cast<size_t>(l.in_channels) * l.out_channels;
  return {g.first(nw), l.bias ? g.subspan(nw, l.out_channels) : std::span<float>()};
}

std::vector<float> layer_forward(const LayerInstance& l,
                                 std::span<const float> in, Shape3 s,
                                 Shape3 out_shape, LayerTrace* trace) {
  std::vector<float> out(out_shape.size());
  if (trace) {
    trace->in_shape = s;
    trace->input.assign(in.begin(), in.end());
  }
  switch (l.kind) {
    case LayerKind::kDepthwiseConv:
      depthwise_conv_forward(in, s, l.kernel, l.params, out);
      break;
    case LayerKind::kPointwiseConv: {
      const auto [w, b] = split(l);
      pointwise_conv_forward(in, s, l.out_channels, w, b, out);
      break;
    }
    case LayerKind::kPerSampleNorm: {
      std::span<const float> p(l.params);
      group_norm_forward(in, s, norm_group_size(s.c), p.first(s.c),
                         p.subspan(s.c), out, trace ? &trace->norm : nullptr);
      break;
    }
    case LayerKind::kRelu:
      relu_forward(in, out);
      break;
    case LayerKind::kAvgPool:
      pool_forward(PoolType::kAvg, in, s, out, nullptr);
      break;
    case LayerKind::kMaxPool: {
      std::vector<int> scratch;
      pool_forward(PoolType::kMax, in, s, out, trace ? &trace->argmax : &scratch);
      break;
    }
    case LayerKind::kGlobalAvgPool:
      global_avg_pool_forward(in, s, out);
      break;
    case LayerKind::kLinear: {
      const auto [w, b] = split(l);
      linear_forward(in, l.out_channels, w, b, out);
      break;
    }
  }
  return out;
}

std::vector<float> layer_backward(const LayerInstance& l, const LayerTrace& t,
                                  std::span<const float> grad_out,
                                  std::span<float> grad_params) {
  const Shape3 s = t.in_shape;
  std::vector<float> gin(s.size());
  switch (l.kind) {
    case LayerKind::kDepthwiseConv:
      depthwise_conv_backward(t.input, s, l.kernel, l.params, grad_out, gin,
                              grad_params);
      break;
    case LayerKind::kPointwiseConv: {
      const auto [w, b] = split(l);
      const auto [gw, gb] = split_grad(l, grad_params);
      pointwise_conv_backward(t.input, s, l.out_channels, w, grad_out, gin, gw, gb);
      break;
    }
    case LayerKind::kPerSampleNorm: {
      std::span<const float> p(l.params);
      group_norm_backward(s, norm_group_size(s.c), t.norm, p.first(s.c), grad_out,
                          gin, grad_params.first(s.c), grad_params.subspan(s.c));
      break;
    }
    case LayerKind::kRelu:
      relu_backward(t.input, grad_out, gin);
      break;
    case LayerKind::kAvgPool:
      pool_backward(PoolType::kAvg, s, t.argmax, grad_out, gin);
      break;
    case LayerKind::kMaxPool:
      pool_backward(PoolType::kMax, s, t.argmax, grad_out, gin);
      break;
    case LayerKind::kGlobalAvgPool:
      global_avg_pool_backward(s, grad_out, gin);
      break;
    case LayerKind::kLinear: {
      const auto [w, b] = split(l);
      const auto [gw, gb] = split_grad(l, grad_params);
      linear_backward(t.input, l.out_channels, w, grad_out, gin, gw, gb);
      break;
    }
  }
  return gin;
}

bool all_finite(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

template <typename Fn>
void for_each_layer(const Network& net, Fn&& fn) {
  for (const Stage& st : net.stages) {
    for (const LayerInstance& l : st.body) fn(l);
    if (st.projection) fn(*st.projection);
  }
}

template <typename Fn>
void for_each_layer(Network& net, Fn&& fn) {
  for (Stage& st : net.stages) {
    for (LayerInstance& l : st.body) fn(l);
    if (st.projection) fn(*st.projection);
  }
}

}  // namespace

Shape3 Network::output_shape() const {
  Shape3 s = input;
  for (size_t si = 0; si < stages.size(); ++si) {
    const Stage& st = stages[si];
    const Shape3 stage_in = s;
    for (size_t li = 0; li < st.body.size(); ++li) {
      s = layer_output_shape(st.body[li], s, where(si, li, st.body[li].kind));
    }
    if (st.residual) {
      Shape3 sc = stage_in;
      if (st.projection) {
        if (st.projection->kind != LayerKind::kPointwiseConv)
          throw ShapeError(where(si, std::nullopt, st.projection->kind) +
                           ": shortcut projection must be a pointwise conv");
        sc = layer_output_shape(*st.projection, stage_in,
                                where(si, std::nullopt, st.projection->kind));
      }
      if (!(sc == s)) {
        throw ShapeError("stage " + std::to_string(si) + ": shortcut shape " +
                         shape_str(sc) + " does not match body output " +
                         shape_str(s));
      }
    }
  }
  return s;
}

void Network::validate() const {
  output_shape();
  for (size_t si = 0; si < stages.size(); ++si) {
    const Stage& st = stages[si];
    for (size_t li = 0; li <= st.body.size(); ++li) {
      const LayerInstance* l =
          li < st.body.size() ? &st.body[li] : (st.projection ? &*st.projection : nullptr);
      if (!l) continue;
      if (l->params.size() != l->expected_param_count()) {
        throw ShapeError(
            where(si, li < st.body.size() ? std::optional<size_t>(li) : std::nullopt,
                  l->kind) +
            ": parameter vector has " + std::to_string(l->params.size()) +
            " entries, expected " + std::to_string(l->expected_param_count()));
      }
    }
  }
}

size_t Network::param_count() const {
  size_t n = 0;
  for_each_layer(*this, [&](const LayerInstance& l) { n += l.params.size(); });
  return n;
}

std::vector<float> Network::params() const {
  std::vector<float> flat;
  flat.reserve(param_count());
  for_each_layer(*this, [&](const LayerInstance& l) {
    flat.insert(flat.end(), l.params.begin(), l.params.end());
  });
  return flat;
}

void Network::set_params(std::span<const float> flat) {
  if (flat.size() != param_count())
    throw ShapeError("set_params: expected " + std::to_string(param_count()) +
                     " values, got " + std::to_string(flat.size()));
  size_t off = 0;
  for_each_layer(*this, [&](LayerInstance& l) {
    std::copy_n(flat.begin() + off, l.params.size(), l.params.begin());
    off += l.params.size();
  });
}

void Network::init_params(Rng& rng) {
  auto fill_uniform = [&rng](std::span<float> w, size_t fan_in) {
    const float bound = std::sqrt(3.0f / static_cast<float>(std::max<size_t>(1, fan_in)));
    std::uniform_real_distribution<float> dist(-bound, bound);
    for (float& v : w) v = dist(rng);
  };
  for_each_layer(*this, [&](LayerInstance& l) {
    switch (l.kind) {
      case LayerKind::kDepthwiseConv:
        fill_uniform(l.params, static_cast<size_t>(l.kernel) * l.kernel);
        break;
      case LayerKind::kPointwiseConv:
      case LayerKind::kLinear: {
        const size_t nw = static_cast<size_t>(l.in_channels) * l.out_channels;
        fill_uniform(std::span<float>(l.params).first(nw), l.in_channels);
        std::fill(l.params.begin() + nw, l.params.end(), 0.0f);
        break;
      }
      case LayerKind::kPerSampleNorm:
        std::fill_n(l.params.begin(), l.in_channels, 1.0f);
        std::fill(l.params.begin() + l.in_channels, l.params.end(), 0.0f);
        break;
      default:
        break;
    }
  });
}

std::vector<float> Network::forward_sample(std::span<const float> x,
                                           NetworkTrace* trace) const {
  if (x.size() != input.size()) {
    throw ShapeError("network input has " + std::to_string(x.size()) +
                     " values, expected " + shape_str(input));
  }
  std::vector<float> cur(x.begin(), x.end());
  Shape3 s = input;
  if (trace) trace->stages.assign(stages.size(), StageTrace{});
  for (size_t si = 0; si < stages.size(); ++si) {
    const Stage& st = stages[si];
    StageTrace* stt = trace ? &trace->stages[si] : nullptr;
    if (stt) stt->layers.resize(st.body.size());
    std::vector<float> stage_in;
    const Shape3 stage_shape = s;
    if (st.residual) stage_in = cur;
    for (size_t li = 0; li < st.body.size(); ++li) {
      const LayerInstance& l = st.body[li];
      const Shape3 out_shape = layer_output_shape(l, s, where(si, li, l.kind));
      cur = layer_forward(l, cur, s, out_shape, stt ? &stt->layers[li] : nullptr);
      s = out_shape;
      if (!all_finite(cur))
        throw NonFiniteError("non-finite activation after " + where(si, li, l.kind));
    }
    if (st.residual) {
      std::vector<float> sc;
      if (st.projection) {
        const LayerInstance& p = *st.projection;
        const Shape3 ps = layer_output_shape(p, stage_shape, where(si, std::nullopt, p.kind));
        sc = layer_forward(p, stage_in, stage_shape, ps, stt ? &stt->projection : nullptr);
      } else {
        sc = std::move(stage_in);
      }
      if (sc.size() != cur.size())
        throw ShapeError("stage " + std::to_string(si) + ": shortcut shape mismatch");
      for (size_t i = 0; i < cur.size(); ++i) cur[i] += sc[i];
      if (stt) stt->in_shape = stage_shape;
    }
  }
  return cur;
}

void Network::backward_sample(const NetworkTrace& trace,
                              std::span<const float> grad_out,
                              std::span<float> grad_params,
                              std::vector<float>* grad_input) const {
  // Parameter offsets in flat order: body layers, then projection, per stage.
  std::vector<size_t> offsets;
  size_t off = 0;
  for (const Stage& st : stages) {
    for (const LayerInstance& l : st.body) {
      offsets.push_back(off);
      off += l.params.size();
    }
    offsets.push_back(off);
    if (st.projection) off += st.projection->params.size();
  }

  std::vector<float> g(grad_out.begin(), grad_out.end());
  size_t cursor = offsets.size();
  for (size_t si = stages.size(); si-- > 0;) {
    const Stage& st = stages[si];
    const StageTrace& stt = trace.stages[si];
    const size_t proj_off = offsets[--cursor];
    std::vector<float> g_stage_out;
    if (st.residual) g_stage_out = g;
    for (size_t li = st.body.size(); li-- > 0;) {
      const LayerInstance& l = st.body[li];
      const size_t lo = offsets[--cursor];
      g = layer_backward(l, stt.layers[li], g, grad_params.subspan(lo, l.params.size()));
    }
    if (st.residual) {
      if (st.projection) {
        const LayerInstance& p = *st.projection;
        const std::vector<float> gsc = layer_backward(
            p, stt.projection, g_stage_out, grad_params.subspan(proj_off, p.params.size()));
        for (size_t i = 0; i < g.size(); ++i) g[i] += gsc[i];
      } else {
        for (size_t i = 0; i < g.size(); ++i) g[i] += g_stage_out[i];
      }
    }
  }
  if (grad_input) *grad_input = std::move(g);
}

void Model::validate() const {
  bottom.validate();
  head.validate();
  const Shape3 rep = bottom.output_shape();
  if (rep.size() != static_cast<size_t>(d_rep))
    throw ShapeError("bottom output " + shape_str(rep) + " does not match d_rep " +
                     std::to_string(d_rep));
  if (!(head.input == Shape3{d_rep, 1, 1}))
    throw ShapeError("head input " + shape_str(head.input) + " does not match d_rep " +
                     std::to_string(d_rep));
  if (head.output_shape().size() != static_cast<size_t>(num_classes))
    throw ShapeError("head output does not match num_classes " +
                     std::to_string(num_classes));
}

std::vector<float> Model::params() const {
  std::vector<float> flat = bottom.params();
  const std::vector<float> h = head.params();
  flat.insert(flat.end(), h.begin(), h.end());
  return flat;
}

void Model::set_params(std::span<const float> flat) {
  const size_t nb = bottom.param_count();
  if (flat.size() != nb + head.param_count())
    throw ShapeError("Model::set_params: wrong parameter count");
  bottom.set_params(flat.first(nb));
  head.set_params(flat.subspan(nb));
}

double sample_loss(Loss loss, std::span<const float> output, int label,
                   std::span<float> grad) {
  double value = 0.0;
  if (loss == Loss::kSoftmaxCrossEntropy) {
    if (label < 0 || static_cast<size_t>(label) >= output.size())
      throw InvalidArgument("label " + std::to_string(label) + " out of range");
    value = softmax_cross_entropy(output, label, grad);
  } else {
    if (output.size() != 1)
      throw InvalidArgument("squared-error loss expects a single output");
    const double r = static_cast<double>(output[0]) - label;
    grad[0] = static_cast<float>(2.0 * r);
    value = r * r;
  }
  if (!std::isfinite(value)) throw NonFiniteError("non-finite loss");
  return value;
}

namespace {

void check_batch(const Shape3& in, const Tensor& batch, size_t labels) {
  if (batch.rank() < 2 || batch.dim(0) < 1 || batch.row_size() != in.size()) {
    throw ShapeError("batch " + batch.shape_string() + " does not match input " +
                     shape_str(in));
  }
  if (batch.rank() == 4 &&
      !(Shape3{batch.dim(1), batch.dim(2), batch.dim(3)} == in)) {
    throw ShapeError("batch " + batch.shape_string() + " does not match input " +
                     shape_str(in));
  }
  if (labels != static_cast<size_t>(-1) && labels != static_cast<size_t>(batch.dim(0)))
    throw ShapeError("label count does not match batch size");
}

// Accumulates the gradient of one sample into grad (bottom | head layout).
double accumulate_model_sample(const Model& m, std::span<const float> x, int label,
                               Loss loss, std::span<float> grad) {
  NetworkTrace bt, ht;
  const std::vector<float> z = m.bottom.forward_sample(x, &bt);
  const std::vector<float> out = m.head.forward_sample(z, &ht);
  std::vector<float> gout(out.size());
  const double l = sample_loss(loss, out, label, gout);
  const size_t nb = m.bottom.param_count();
  std::vector<float> gz;
  m.head.backward_sample(ht, gout, grad.subspan(nb), &gz);
  m.bottom.backward_sample(bt, gz, grad.first(nb), nullptr);
  return l;
}

double accumulate_network_sample(const Network& net, std::span<const float> x,
                                 int label, Loss loss, std::span<float> grad) {
  NetworkTrace t;
  const std::vector<float> out = net.forward_sample(x, &t);
  std::vector<float> gout(out.size());
  const double l = sample_loss(loss, out, label, gout);
  net.backward_sample(t, gout, grad, nullptr);
  return l;
}

}  // namespace

ForwardResult forward(const Model& model, const Tensor& batch) {
  check_batch(model.bottom.input, batch, static_cast<size_t>(-1));
  const int n = batch.dim(0);
  ForwardResult r{Tensor({n, model.d_rep}), Tensor({n, model.num_classes})};
  for (int i = 0; i < n; ++i) {
    const std::vector<float> z = model.bottom.forward_sample(batch.row(i), nullptr);
    if (z.size() != static_cast<size_t>(model.d_rep))
      throw ShapeError("bottom output width does not match d_rep");
    const std::vector<float> y = model.head.forward_sample(z, nullptr);
    if (y.size() != static_cast<size_t>(model.num_classes))
      throw ShapeError("head output width does not match num_classes");
    std::copy(z.begin(), z.end(), r.representations.row(i).begin());
    std::copy(y.begin(), y.end(), r.logits.row(i).begin());
  }
  return r;
}

SampleGradients per_sample_gradients(const Model& model, const Tensor& batch,
                                     std::span<const int> labels, Loss loss) {
  check_batch(model.bottom.input, batch, labels.size());
  SampleGradients r;
  const size_t np = model.param_count();
  for (int i = 0; i < batch.dim(0); ++i) {
    std::vector<float> g(np, 0.0f);
    r.losses.push_back(accumulate_model_sample(model, batch.row(i), labels[i], loss, g));
    r.grads.push_back(std::move(g));
  }
  return r;
}

BatchGradient batch_gradient(const Model& model, const Tensor& batch,
                             std::span<const int> labels, Loss loss) {
  check_batch(model.bottom.input, batch, labels.size());
  BatchGradient r;
  r.grad.assign(model.param_count(), 0.0f);
  const int n = batch.dim(0);
  for (int i = 0; i < n; ++i)
    r.mean_loss += accumulate_model_sample(model, batch.row(i), labels[i], loss, r.grad);
  for (float& v : r.grad) v /= static_cast<float>(n);
  r.mean_loss /= n;
  return r;
}

SampleGradients per_sample_gradients(const Network& net, const Tensor& inputs,
                                     std::span<const int> labels, Loss loss) {
  check_batch(net.input, inputs, labels.size());
  SampleGradients r;
  for (int i = 0; i < inputs.dim(0); ++i) {
    std::vector<float> g(net.param_count(), 0.0f);
    r.losses.push_back(accumulate_network_sample(net, inputs.row(i), labels[i], loss, g));
    r.grads.push_back(std::move(g));
  }
  return r;
}

BatchGradient batch_gradient(const Network& net, const Tensor& inputs,
                             std::span<const int> labels, Loss loss) {
  check_batch(net.input, inputs, labels.size());
  BatchGradient r;
  r.grad.assign(net.param_count(), 0.0f);
  const int n = inputs.dim(0);
  for (int i = 0; i < n; ++i)
    r.mean_loss += accumulate_network_sample(net, inputs.row(i), labels[i], loss, r.grad);
  for (float& v : r.grad) v /= static_cast<float>(n);
  r.mean_loss /= n;
  return r;
}

double mean_loss(const Network& net, const Tensor& inputs,
                 std::span<const int> labels, Loss loss) {
  check_batch(net.input, inputs, labels.size());
  double total = 0.0;
  for (int i = 0; i < inputs.dim(0); ++i) {
    const std::vector<float> out = net.forward_sample(inputs.row(i), nullptr);
    std::vector<float> g(out.size());
    total += sample_loss(loss, out, labels[i], g);
  }
  return total / inputs.dim(0);
}

std::vector<int> predict(const Model& model, const Tensor& batch) {
  const ForwardResult r = forward(model, batch);
  std::vector<int> out(batch.dim(0));
  for (int i = 0; i < batch.dim(0); ++i) {
    const auto row = r.logits.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(const Model& model, const Tensor& batch,
                std::span<const int> labels) {
  if (batch.size() == 0 || labels.empty()) return 0.0;
  const std::vector<int> p = predict(model, batch);
  size_t hit = 0;
  for (size_t i = 0; i < p.size(); ++i) hit += p[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(p.size());
}

Tensor gather_rows(const Tensor& t, std::span<const size_t> indices) {
  std::vector<int> shape = t.shape();
  shape[0] = static_cast<int>(indices.size());
  Tensor out(shape);
  const size_t n = t.row_size();
  for (size_t i = 0; i < indices.size(); ++i) {
    const auto src = t.row(indices[i]);
    std::copy(src.begin(), src.end(), out.values().begin() + i * n);
  }
  return out;
}

}  // namespace pfnas::nn
