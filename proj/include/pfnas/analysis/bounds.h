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
#ifndef PFNAS_ANALYSIS_BOUNDS_H_
#define PFNAS_ANALYSIS_BOUNDS_H_

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pfnas::analysis {

// Constants of the convergence analysis. noise_delta is the noise magnitude
// of the bound and has nothing to do with the DP delta in privacy::DPConfig;
// var_sigma2 is the gradient-variance bound, not the DP noise multiplier.
// p, Delta and G have no operational definition in the analysis; callers
// supply them (candidates: p = min(1, C / B_grad), Delta = initial loss minus
// best observed loss, G = a measured gradient-energy scale).
struct ConvergenceConstants {
  double B_grad = 1.0;
  double L = 1.0;
  double var_sigma2 = 1.0;
  double noise_delta = 1.0;
  double C = 1.0;
  double d = 1.0;
  double E = 1.0;
  double eta_w = 0.01;
  double eta_theta = 0.0;
  double alpha_dev = 0.0;
  double p = 1.0;
  double Delta = 1.0;
  double G = 1.0;
  double T = 1.0;

  // Rejects negative or non-finite values.
  void validate() const;
};

// Field names in declaration order; the JSON schema of the constants file.
const std::vector<std::string>& constant_names();

// Strict: every name must be present and numeric, and nothing else is
// allowed. Throws InvalidArgument listing missing or unknown names.
ConvergenceConstants constants_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ConvergenceConstants& c);

// sigma^2 + d * delta^2 * C^2.
double noise_term(const ConvergenceConstants& c);

// Per-round local loss bound:
//   loss0 - (eta p - L eta^2 / 2) * S + (E L eta^2 / 2) * noise_term
// with eta = eta_w and S the caller's sum of squared gradient norms.
double theorem1_rhs(const ConvergenceConstants& c, double loss0, double grad_norm_sq_sum);

// theorem1_rhs + eta_w E B^2 + eta_theta B + (L / 2) alpha^2.
double corollary1_rhs(const ConvergenceConstants& c, double loss0, double grad_norm_sq_sum);

// eta_w p - L eta_w^2 / 2.
double descent_coefficient(const ConvergenceConstants& c);

// [Delta / T + (E L eta_w^2 / 2) noise_term + eta_w E B^2 + eta_theta B
//  + (L / 2) alpha^2] / descent_coefficient. Throws InfeasibleError when the
// descent coefficient is not positive.
double corollary2_avg_grad_bound(const ConvergenceConstants& c);

struct EtaThetaBound {
  double value = 0.0;  // 0 when infeasible
  bool feasible = false;
};

// (alpha - eta_w E B) / B; infeasible unless alpha > eta_w E B.
EtaThetaBound max_eta_theta(const ConvergenceConstants& c);

// The local learning-rate constraint, evaluated as printed:
//   eta_w <= [a + sqrt(a^2 + 2 L X) + (eta_theta B + L alpha^2 / 2)] / (L X B)
// with a = p G - E B^2 and X = G + E * noise_term. Each of the three
// fractions is reported separately. A negative radicand or a zero
// denominator is reported in `error` with feasible = false.
struct EtaWCheck {
  bool feasible = false;
  double rhs = 0.0;
  std::array<double, 3> terms{};
  double radicand = 0.0;
  double denominator = 0.0;
  std::string error;
};

EtaWCheck check_eta_w(const ConvergenceConstants& c);

// All calculators in one document. corollary2 is reported as null with
// "corollary2_feasible": false when the descent coefficient is not positive.
nlohmann::json bound_report(const ConvergenceConstants& c, double loss0,
                            double grad_norm_sq_sum);

// T,bound rows for each requested T; infeasible constants throw.
std::string t_sweep_csv(ConvergenceConstants c, const std::vector<double>& ts);

}  // namespace pfnas::analysis

#endif  // PFNAS_ANALYSIS_BOUNDS_H_
