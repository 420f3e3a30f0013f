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

#ifndef PFNAS_TESTS_SUPPORT_BOUND_ORACLE_H_
#define PFNAS_TESTS_SUPPORT_BOUND_ORACLE_H_

#include <cmath>
#include <random>

#include "pfnas/analysis/bounds.h"
#include "pfnas/common/rng.h"

namespace pfnas::testing {

using analysis::ConvergenceConstants;

// Second transcription of the bounds, term by term from the printed
// formulas, in long double and without sharing any helper with the library.
struct Oracle {
  long double B, L, s2, dl, C, d, E, ew, et, al, p, Dl, G, T;
  explicit Oracle(const ConvergenceConstants& c)
      : B(c.B_grad), L(c.L), s2(c.var_sigma2), dl(c.noise_delta), C(c.C), d(c.d), E(c.E),
        ew(c.eta_w), et(c.eta_theta), al(c.alpha_dev), p(c.p), Dl(c.Delta), G(c.G), T(c.T) {}

  long double theorem1(long double loss0, long double S) const {
    const long double noise = s2 + d * dl * dl * C * C;
    return loss0 - ew * p * S + L * ew * ew * S / 2 + E * L * ew * ew * noise / 2;
  }
  long double corollary1(long double loss0, long double S) const {
    return theorem1(loss0, S) + ew * E * B * B + et * B + L * al * al / 2;
  }
  long double corollary2() const {
    const long double noise = s2 + d * dl * dl * C * C;
    return (Dl / T + E * L * ew * ew * noise / 2 + ew * E * B * B + et * B + L * al * al / 2) /
           (ew * p - L * ew * ew / 2);
  }
  long double max_eta_theta() const { return (al - ew * E * B) / B; }
  long double eta_w_rhs() const {
    const long double X = G + E * (s2 + d * dl * dl * C * C);
    const long double den = L * X * B;
    const long double a = p * G - E * B * B;
    return a / den + std::sqrt(a * a + 2 * L * X) / den + (et * B + L / 2 * al * al) / den;
  }
};

inline ConvergenceConstants random_constants(Rng& rng) {
  auto lu = [&](double lo, double hi) {
    return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
  };
  ConvergenceConstants c;
  c.B_grad = lu(0.1, 10);
  c.L = lu(0.1, 10);
  c.var_sigma2 = lu(1e-3, 10);
  c.noise_delta = lu(1e-3, 5);
  c.C = lu(0.1, 10);
  c.d = std::floor(lu(1, 1e6));
  c.E = std::floor(lu(1, 30));
  c.p = lu(0.05, 1);
  // Keep eta_w p - L eta_w^2 / 2 > 0, i.e. eta_w < 2p / L.
  c.eta_w = lu(1e-4, 1) * 2 * c.p / c.L * 0.99;
  c.eta_theta = lu(1e-4, 1);
  c.alpha_dev = lu(1e-3, 10);
  c.Delta = lu(0.01, 100);
  c.G = lu(0.01, 100);
  c.T = std::floor(lu(1, 1000));
  return c;
}

}  // namespace pfnas::testing

#endif  // PFNAS_TESTS_SUPPORT_BOUND_ORACLE_H_
