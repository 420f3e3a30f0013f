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
#include "pfnas/analysis/attack.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "pfnas/common/error.h"

namespace pfnas::analysis {
namespace {

// Flat parameter vector with views; Adam state mirrors the layout.
struct Decoder {
  int d = 0, hc = 0, c = 0, h2 = 0, w2 = 0;
  size_t n_hidden = 0;
  std::vector<double> params;  // W1 [n_hidden x d], b1 [n_hidden], W2 [hc][c][2][2], b2 [c]

  size_t w1() const { return 0; }
  size_t b1() const { return n_hidden * d; }
  size_t w2_at() const { return b1() + n_hidden; }
  size_t b2() const { return w2_at() + static_cast<size_t>(hc) * c * 4; }
  size_t size() const { return b2() + c; }
  size_t out_size() const { return static_cast<size_t>(c) * 4 * h2 * w2; }

  // Writes the reconstruction to `out`; keeps the pre-ReLU hidden layer for
  // the backward pass.
  void forward(std::span<const float> z, std::vector<double>& pre, std::vector<double>& out) const {
    pre.assign(n_hidden, 0.0);
    for (size_t i = 0; i < n_hidden; ++i) {
      double s = params[b1() + i];
      const double* row = &params[w1() + i * d];
      for (int k = 0; k < d; ++k) s += row[k] * z[k];
      pre[i] = s;
    }
    const int H = 2 * h2, W = 2 * w2;
    out.assign(out_size(), 0.0);
    for (int co = 0; co < c; ++co)
      for (size_t p = 0; p < static_cast<size_t>(H) * W; ++p) out[co * H * W + p] = params[b2() + co];
    for (int ci = 0; ci < hc; ++ci)
      for (int i = 0; i < h2; ++i)
        for (int j = 0; j < w2; ++j) {
          const double hv = std::max(0.0, pre[(ci * h2 + i) * w2 + j]);
          if (hv == 0) continue;
          for (int co = 0; co < c; ++co)
            for (int a = 0; a < 2; ++a)
              for (int b = 0; b < 2; ++b)
                out[(co * H + 2 * i + a) * W + 2 * j + b] +=
                    hv * params[w2_at() + ((ci * c + co) * 2 + a) * 2 + b];
        }
    for (double& v : out) v = 1.0 / (1.0 + std::exp(-v));
  }

  // Accumulates d(per-pixel MSE)/d(params) into grad; returns the loss.
  double backward(std::span<const float> z, std::span<const float> x, std::vector<double>& grad,
                  std::vector<double>& pre, std::vector<double>& out) const {
    forward(z, pre, out);
    const int H = 2 * h2, W = 2 * w2;
    const double P = static_cast<double>(out.size());
    double loss = 0;
    std::vector<double> ds(out.size());
    for (size_t k = 0; k < out.size(); ++k) {
      const double e = out[k] - x[k];
      loss += e * e / P;
      ds[k] = 2 * e / P * out[k] * (1 - out[k]);
    }
    for (int co = 0; co < c; ++co)
      for (size_t p = 0; p < static_cast<size_t>(H) * W; ++p) grad[b2() + co] += ds[co * H * W + p];
    std::vector<double> dh(n_hidden, 0.0);
    for (int ci = 0; ci < hc; ++ci)
      for (int i = 0; i < h2; ++i)
        for (int j = 0; j < w2; ++j) {
          const size_t hi = (ci * h2 + i) * w2 + j;
          if (pre[hi] <= 0) continue;
          const double hv = pre[hi];
          double acc = 0;
          for (int co = 0; co < c; ++co)
            for (int a = 0; a < 2; ++a)
              for (int b = 0; b < 2; ++b) {
                const size_t wi = w2_at() + ((ci * c + co) * 2 + a) * 2 + b;
                const double g = ds[(co * H + 2 * i + a) * W + 2 * j + b];
                grad[wi] += hv * g;
                acc += params[wi] * g;
              }
          dh[hi] = acc;
        }
    for (size_t i = 0; i < n_hidden; ++i) {
      if (dh[i] == 0) continue;
      grad[b1() + i] += dh[i];
      double* row = &grad[w1() + i * d];
      for (int k = 0; k < d; ++k) row[k] += dh[i] * z[k];
    }
    return loss;
  }
};

Decoder make_decoder(int d, const nn::Shape3& img, const DecoderConfig& cfg, Rng& rng) {
  if (img.h % 2 || img.w % 2)
    throw InvalidArgument("inversion decoder needs even image sides, got " +
                          std::to_string(img.h) + "x" + std::to_string(img.w));
  Decoder dec;
  dec.d = d;
  dec.hc = cfg.hidden_channels;
  dec.c = img.c;
  dec.h2 = img.h / 2;
  dec.w2 = img.w / 2;
  dec.n_hidden = static_cast<size_t>(dec.hc) * dec.h2 * dec.w2;
  dec.params.assign(dec.size(), 0.0);
  std::normal_distribution<double> n1(0.0, std::sqrt(2.0 / d));
  for (size_t i = dec.w1(); i < dec.b1(); ++i) dec.params[i] = n1(rng);
  std::normal_distribution<double> n2(0.0, std::sqrt(1.0 / dec.hc));
  for (size_t i = dec.w2_at(); i < dec.b2(); ++i) dec.params[i] = n2(rng);
  return dec;
}

std::string fmt_eps(double eps) {
  if (std::isinf(eps)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

}  // namespace

nn::Tensor representations(const nn::Network& bottom, const nn::Tensor& x) {
  const int n = x.dim(0);
  const int d = bottom.output_shape().c;
  nn::Tensor z({n, d});
  for (int i = 0; i < n; ++i) {
    const std::vector<float> zi = bottom.forward_sample(x.row(i), nullptr);
    std::copy(zi.begin(), zi.end(), z.row(i).begin());
  }
  return z;
}

AttackReport inversion_attack(const nn::Network& bottom, const nn::Tensor& aux,
                              const nn::Tensor& victim_z, const nn::Tensor& victim_x,
                              const DecoderConfig& cfg, Rng& rng) {
  if (aux.rank() != 4 || victim_x.rank() != 4 || aux.row_size() != victim_x.row_size())
    throw ShapeError("aux " + aux.shape_string() + " and victim " + victim_x.shape_string() +
                     " must be image batches of the same shape");
  if (victim_z.rank() != 2 || victim_z.dim(0) != victim_x.dim(0))
    throw ShapeError("victim representations " + victim_z.shape_string() +
                     " do not match victim inputs " + victim_x.shape_string());
  if (aux.dim(0) == 0 || victim_x.dim(0) == 0) throw InvalidArgument("empty attack data");
  for (float v : victim_z.values())
    if (!std::isfinite(v)) throw NonFiniteError("non-finite victim representation");
  if (cfg.epochs < 0 || cfg.batch < 1 || !(cfg.lr > 0))
    throw InvalidArgument("invalid decoder configuration");
  const nn::Shape3 img{aux.dim(1), aux.dim(2), aux.dim(3)};
  const int d = victim_z.dim(1);

  AttackReport rep;
  rep.config = cfg;
  Decoder dec = make_decoder(d, img, cfg, rng);
  const nn::Tensor aux_z = representations(bottom, aux);
  if (aux_z.dim(1) != d) throw ShapeError("bottom d_rep differs from victim representations");

  std::vector<double> m(dec.size(), 0.0), v(dec.size(), 0.0), grad(dec.size());
  std::vector<double> pre, out;
  const size_t n = static_cast<size_t>(aux.dim(0));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  int64_t t = 0;
  for (int e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < n; start += cfg.batch) {
      const size_t end = std::min(n, start + cfg.batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0;
      for (size_t k = start; k < end; ++k)
        loss += dec.backward(aux_z.row(order[k]), aux.row(order[k]), grad, pre, out);
      if (!std::isfinite(loss)) {
        rep.failed = true;
        rep.failure = "decoder diverged in epoch " + std::to_string(e);
        rep.mse = std::nan("");
        return rep;
      }
      ++t;
      const double scale = 1.0 / static_cast<double>(end - start);
      const double c1 = 1 - std::pow(cfg.beta1, static_cast<double>(t));
      const double c2 = 1 - std::pow(cfg.beta2, static_cast<double>(t));
      for (size_t i = 0; i < dec.size(); ++i) {
        const double g = grad[i] * scale;
        m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g * g;
        dec.params[i] -= cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + 1e-8);
      }
    }
  }

  double total = 0;
  for (int i = 0; i < victim_x.dim(0); ++i) {
    dec.forward(victim_z.row(i), pre, out);
    const auto x = victim_x.row(i);
    double s = 0;
    for (size_t k = 0; k < out.size(); ++k) s += (out[k] - x[k]) * (out[k] - x[k]);
    rep.per_sample_mse.push_back(s / static_cast<double>(out.size()));
    total += rep.per_sample_mse.back();
  }
  rep.mse = total / victim_x.dim(0);
  if (!std::isfinite(rep.mse)) {
    rep.failed = true;
    rep.failure = "non-finite reconstruction";
  }
  return rep;
}

AttackReport inversion_attack(const nn::Network& bottom, const nn::Tensor& aux,
                              const nn::Tensor& victim_x, const DecoderConfig& cfg, Rng& rng) {
  return inversion_attack(bottom, aux, representations(bottom, victim_x), victim_x, cfg, rng);
}

std::string attack_csv(const std::vector<AttackReport>& reports) {
  std::ostringstream out;
  out << "eps,mse,seed\n";
  char buf[32];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%.6f", r.mse);
    out << fmt_eps(r.eps) << ',' << (r.failed ? "nan" : buf) << ',' << r.seed << '\n';
  }
  return out.str();
}

bool mse_ordering_holds(std::vector<AttackReport> one_seed) {
  if (one_seed.size() < 2) throw InvalidArgument("ordering needs at least two privacy settings");
  std::sort(one_seed.begin(), one_seed.end(),
            [](const AttackReport& a, const AttackReport& b) { return a.eps > b.eps; });
  for (size_t i = 1; i < one_seed.size(); ++i)
    if (one_seed[i].failed || one_seed[i - 1].failed || one_seed[i].mse < one_seed[i - 1].mse)
      return false;
  return true;
}

}  // namespace pfnas::analysis
