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

#include "pfnas/privacy/accountant.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "pfnas/common/error.h"

namespace pfnas::privacy {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log(exp(a) - exp(b)) for a >= b.
double log_sub(double a, double b) {
  if (b == kNegInf) return a;
  if (a <= b) return kNegInf;
  return a + std::log1p(-std::exp(b - a));
}

double log_erfc(double x) {
  if (x < 25.0) return std::log(std::erfc(x));
  // Asymptotic expansion; erfc underflows long before this is inaccurate.
  const double x2 = x * x;
  return -x2 - std::log(x) - 0.5 * std::log(M_PI) +
         std::log1p(-0.5 / x2 + 0.75 / (x2 * x2) - 1.875 / (x2 * x2 * x2));
}

double log_a_int(double q, double sigma, int alpha) {
  double log_a = kNegInf;
  const double lq = std::log(q), l1q = std::log1p(-q);
  for (int i = 0; i <= alpha; ++i) {
    const double log_binom =
        std::lgamma(alpha + 1.0) - std::lgamma(i + 1.0) - std::lgamma(alpha - i + 1.0);
    const double s = log_binom + i * lq + (alpha - i) * l1q +
                     (static_cast<double>(i) * i - i) / (2 * sigma * sigma);
    log_a = log_add(log_a, s);
  }
  return log_a;
}

double log_a_frac(double q, double sigma, double alpha) {
  double log_a0 = kNegInf, log_a1 = kNegInf;
  const double z0 = sigma * sigma * std::log(1 / q - 1) + 0.5;
  const double lq = std::log(q), l1q = std::log1p(-q);
  // Generalized binomial coefficient tracked as log-magnitude and sign.
  double log_coef = 0.0;
  int sign = 1;
  for (int i = 0; i < 100000; ++i) {
    if (i > 0) {
      const double factor = (alpha - (i - 1)) / i;
      if (factor == 0.0) break;
      log_coef += std::log(std::abs(factor));
      if (factor < 0) sign = -sign;
    }
    const double j = alpha - i;
    const double log_t0 = log_coef + i * lq + j * l1q;
    const double log_t1 = log_coef + j * lq + i * l1q;
    const double log_e0 = std::log(0.5) + log_erfc((i - z0) / (M_SQRT2 * sigma));
    const double log_e1 = std::log(0.5) + log_erfc((z0 - j) / (M_SQRT2 * sigma));
    const double log_s0 = log_t0 + (static_cast<double>(i) * i - i) / (2 * sigma * sigma) + log_e0;
    const double log_s1 = log_t1 + (j * j - j) / (2 * sigma * sigma) + log_e1;
    if (sign > 0) {
      log_a0 = log_add(log_a0, log_s0);
      log_a1 = log_add(log_a1, log_s1);
    } else {
      log_a0 = log_sub(log_a0, log_s0);
      log_a1 = log_sub(log_a1, log_s1);
    }
    if (std::max(log_s0, log_s1) < -30) break;
  }
  return log_add(log_a0, log_a1);
}

double eps_at(double rdp_total, double alpha, double delta) {
  return rdp_total + std::log(1 / delta) / (alpha - 1);
}

void check_domain(double q, double sigma) {
  if (!(q > 0 && q <= 1)) throw InvalidArgument("sampling rate q must be in (0, 1]");
  if (!(sigma >= 0) || !std::isfinite(sigma))
    throw InvalidArgument("noise multiplier sigma must be finite and >= 0");
}

}  // namespace

void DPConfig::validate() const {
  if (!(C > 0) || !std::isfinite(C)) throw InvalidArgument("clip threshold C must be > 0");
  check_domain(q, sigma);
  if (!(delta > 0 && delta < 1)) throw InvalidArgument("delta must be in (0, 1)");
}

nlohmann::json DPConfig::to_json() const {
  return {{"C", C}, {"sigma", sigma}, {"q", q}, {"delta", delta}};
}

const std::vector<double>& rdp_orders() {
  static const std::vector<double> orders = [] {
    std::vector<double> o;
    for (int i = 5; i <= 16; ++i) o.push_back(i * 0.25);
    for (int i = 9; i <= 20; ++i) o.push_back(i * 0.5);
    for (int i = 11; i <= 64; ++i) o.push_back(i);
    return o;
  }();
  return orders;
}

double rdp_step(double q, double sigma, double alpha) {
  check_domain(q, sigma);
  if (!(alpha > 1)) throw InvalidArgument("RDP order must be > 1");
  if (sigma == 0) return kInfinity;
  if (q == 1.0) return alpha / (2 * sigma * sigma);
  const double log_a = alpha == std::floor(alpha) ? log_a_int(q, sigma, static_cast<int>(alpha))
                                                  : log_a_frac(q, sigma, alpha);
  return std::max(0.0, log_a / (alpha - 1));
}

std::vector<double> rdp_step_vector(double q, double sigma) {
  std::vector<double> out;
  for (double a : rdp_orders()) out.push_back(rdp_step(q, sigma, a));
  return out;
}

namespace {

double epsilon_from_vector(const std::vector<double>& step_rdp, double q, double sigma,
                           int64_t steps, double delta) {
  if (steps == 0) return 0.0;
  if (sigma == 0) return kInfinity;
  const auto& orders = rdp_orders();
  const double n = static_cast<double>(steps);
  size_t best = 0;
  double best_eps = kInfinity;
  for (size_t i = 0; i < orders.size(); ++i) {
    const double e = eps_at(n * step_rdp[i], orders[i], delta);
    if (e < best_eps) best_eps = e, best = i;
  }
  // The objective is convex in alpha, so the continuous minimum lies
  // between the grid neighbours of the best grid order.
  double lo = orders[best == 0 ? 0 : best - 1];
  double hi = orders[std::min(best + 1, orders.size() - 1)];
  if (best == 0) lo = 1.0 + 1e-3;
  auto f = [&](double a) { return eps_at(n * rdp_step(q, sigma, a), a, delta); };
  const double g = 0.5 * (std::sqrt(5.0) - 1);
  double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
  double fa = f(a), fb = f(b);
  for (int it = 0; it < 60 && hi - lo > 1e-7; ++it) {
    if (fa < fb) {
      hi = b, b = a, fb = fa;
      a = hi - g * (hi - lo), fa = f(a);
    } else {
      lo = a, a = b, fa = fb;
      b = lo + g * (hi - lo), fb = f(b);
    }
  }
  return std::max(0.0, std::min({best_eps, fa, fb}));
}

}  // namespace

double epsilon_from_rdp(double q, double sigma, int64_t steps, double delta) {
  check_domain(q, sigma);
  if (steps < 0) throw InvalidArgument("steps must be >= 0");
  if (!(delta > 0 && delta < 1)) throw InvalidArgument("delta must be in (0, 1)");
  if (steps == 0) return 0.0;
  if (sigma == 0) return kInfinity;
  return epsilon_from_vector(rdp_step_vector(q, sigma), q, sigma, steps, delta);
}

double privacy_cost(const DPConfig& dp, int64_t steps) {
  return epsilon_from_rdp(dp.q, dp.sigma, steps, dp.delta);
}

bool within_budget(const DPConfig& dp, int64_t steps, double eps_budget) {
  check_domain(dp.q, dp.sigma);
  if (steps <= 0 || eps_budget == kInfinity) return true;
  if (dp.sigma == 0) return false;
  const auto step_rdp = rdp_step_vector(dp.q, dp.sigma);
  const auto& orders = rdp_orders();
  for (size_t i = 0; i < orders.size(); ++i)
    if (eps_at(static_cast<double>(steps) * step_rdp[i], orders[i], dp.delta) <= eps_budget)
      return true;
  return epsilon_from_vector(step_rdp, dp.q, dp.sigma, steps, dp.delta) <= eps_budget;
}

int64_t max_steps_within_budget(const DPConfig& dp, double eps_budget) {
  check_domain(dp.q, dp.sigma);
  if (!(eps_budget > 0)) throw InvalidArgument("privacy budget must be > 0");
  if (eps_budget == kInfinity) return kStepCap;
  if (dp.sigma == 0) return 0;
  const auto step_rdp = rdp_step_vector(dp.q, dp.sigma);
  auto cost = [&](int64_t n) {
    return epsilon_from_vector(step_rdp, dp.q, dp.sigma, n, dp.delta);
  };
  if (cost(1) > eps_budget) return 0;
  int64_t lo = 1, hi = 2;
  while (cost(hi) <= eps_budget) {
    lo = hi;
    if (hi >= kStepCap / 2) return kStepCap;
    hi *= 2;
  }
  // cost(lo) <= budget < cost(hi)
  while (hi - lo > 1) {
    const int64_t mid = lo + (hi - lo) / 2;
    (cost(mid) <= eps_budget ? lo : hi) = mid;
  }
  return lo;
}

double calibrate_sigma(const DPConfig& dp, int64_t steps, double eps_budget) {
  if (!(eps_budget > 0)) throw InvalidArgument("privacy budget must be > 0");
  if (steps == 0 || eps_budget == kInfinity) return 0.0;
  auto cost = [&](double s) { return epsilon_from_rdp(dp.q, s, steps, dp.delta); };
  double hi = 1.0;
  while (cost(hi) > eps_budget) {
    hi *= 2;
    if (hi > 1e3)
      throw InfeasibleError("no noise multiplier up to 1e3 meets epsilon " +
                            std::to_string(eps_budget));
  }
  double lo = hi / 2;
  if (hi == 1.0) {
    lo = 1e-3;
    if (cost(lo) <= eps_budget) return lo;
  }
  while (hi / lo > 1 + 1e-4) {
    const double mid = std::sqrt(lo * hi);
    (cost(mid) <= eps_budget ? hi : lo) = mid;
  }
  return hi;
}

PrivacyLedger::PrivacyLedger(DPConfig config, double budget)
    : config_(config), budget_(budget) {
  config_.validate();
  if (!(budget > 0)) throw InvalidArgument("privacy budget must be > 0");
  step_rdp_ = rdp_step_vector(config_.q, config_.sigma);
}

std::vector<double> PrivacyLedger::rdp() const {
  std::vector<double> out(step_rdp_);
  for (double& r : out) r = steps_ == 0 ? 0.0 : r * static_cast<double>(steps_);
  return out;
}

bool PrivacyLedger::can_take(int64_t more) const {
  return epsilon_from_vector(step_rdp_, config_.q, config_.sigma, steps_ + more,
                             config_.delta) <= budget_;
}

void PrivacyLedger::record(int64_t n) {
  if (n < 0) throw InvalidArgument("cannot record a negative step count");
  const double eps = epsilon_from_vector(step_rdp_, config_.q, config_.sigma, steps_ + n,
                                         config_.delta);
  if (eps > budget_)
    throw BudgetExhausted("step " + std::to_string(steps_ + n) + " would spend epsilon " +
                          std::to_string(eps) + " over budget " + std::to_string(budget_));
  steps_ += n;
  eps_spent_ = eps;
}

nlohmann::json PrivacyLedger::to_json() const {
  return {{"steps", steps_},        {"sigma", config_.sigma}, {"q", config_.q},
          {"C", config_.C},         {"delta", config_.delta},
          {"eps_spent", std::isfinite(eps_spent_) ? nlohmann::json(eps_spent_)
                                                  : nlohmann::json("inf")}};
}

}  // namespace pfnas::privacy
