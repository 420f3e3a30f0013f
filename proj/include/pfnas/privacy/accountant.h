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

#ifndef PFNAS_PRIVACY_ACCOUNTANT_H_
#define PFNAS_PRIVACY_ACCOUNTANT_H_

#include <cstdint>
#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

namespace pfnas::privacy {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Returned by max_steps_within_budget when the budget never binds.
inline constexpr int64_t kStepCap = int64_t{1} << 40;

struct DPConfig {
  double C = 1.0;        // per-sample l2 clip threshold
  double sigma = 1.0;    // noise multiplier; noise std on the sum is sigma * C
  double q = 1.0;        // sampling rate in (0, 1]
  double delta = 1e-5;

  void validate() const;
  nlohmann::json to_json() const;
};

// 1.25..4 by 0.25, 4.5..10 by 0.5, 11..64 by 1.
const std::vector<double>& rdp_orders();

// Renyi divergence of one subsampled-Gaussian step at order alpha > 1.
// Integer orders use the exact binomial expansion, fractional orders the
// two-sided series; q = 1 reduces to alpha / (2 sigma^2).
double rdp_step(double q, double sigma, double alpha);

// rdp_step over rdp_orders().
std::vector<double> rdp_step_vector(double q, double sigma);

// min over alpha of steps * rdp(alpha) + ln(1/delta) / (alpha - 1). The grid
// minimum is polished by a golden-section search on the bracketing orders;
// the smaller of the two is returned, so the result is still a valid bound.
double epsilon_from_rdp(double q, double sigma, int64_t steps, double delta);

// (epsilon, delta) spent by `steps` DP-SGD steps. sigma = 0 is infinite
// unless steps = 0.
double privacy_cost(const DPConfig& dp, int64_t steps);

// privacy_cost(dp, steps) <= eps_budget, skipping the order refinement when
// the grid bound already fits.
bool within_budget(const DPConfig& dp, int64_t steps, double eps_budget);

// Largest n with privacy_cost(dp, n) <= budget; 0 if one step is already too
// expensive and kStepCap if the budget is infinite or never binds.
int64_t max_steps_within_budget(const DPConfig& dp, double eps_budget);

// Smallest noise multiplier (to ~1e-4 relative) for which `steps` steps at
// dp.q fit in the budget. Throws InfeasibleError above sigma = 1e3.
double calibrate_sigma(const DPConfig& dp, int64_t steps, double eps_budget);

// Running account of one client's spend. Single writer.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(DPConfig config, double budget = kInfinity);

  const DPConfig& config() const { return config_; }
  double budget() const { return budget_; }
  int64_t steps() const { return steps_; }
  // Composed RDP per order; exactly steps * rdp_step_vector.
  std::vector<double> rdp() const;
  double eps_spent() const { return eps_spent_; }

  // Whether `more` further steps keep the spend within budget.
  bool can_take(int64_t more = 1) const;
  // Throws BudgetExhausted, leaving the ledger unchanged, if the steps would
  // overspend.
  void record(int64_t n = 1);

  // {steps, sigma, q, C, delta, eps_spent}
  nlohmann::json to_json() const;

 private:
  DPConfig config_;
  double budget_;
  int64_t steps_ = 0;
  double eps_spent_ = 0.0;
  std::vector<double> step_rdp_;
};

}  // namespace pfnas::privacy

#endif  // PFNAS_PRIVACY_ACCOUNTANT_H_
