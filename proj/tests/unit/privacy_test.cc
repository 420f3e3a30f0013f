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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "pfnas/common/error.h"
#include "pfnas/privacy/accountant.h"
#include "pfnas/privacy/dp_sgd.h"
#include "support/reference_net.h"

namespace pfnas::privacy {
namespace {

double norm(const std::vector<float>& g) {
  double s = 0;
  for (float v : g) s += double(v) * v;
  return std::sqrt(s);
}

TEST(ClipTest, Examples) {
  const std::vector<float> g = {1.0f, 2.0f, 2.0f};  // norm 3
  EXPECT_EQ(clip(g, 5.0), g);
  const auto c = clip(std::vector<float>{3.0f, 4.0f}, 1.0);
  EXPECT_FLOAT_EQ(c[0], 0.6f);
  EXPECT_FLOAT_EQ(c[1], 0.8f);
  const std::vector<float> zero(4, 0.0f);
  EXPECT_EQ(clip(zero, 1.0), zero);
  EXPECT_THROW(clip(g, 0.0), InvalidArgument);
}

TEST(ClipTest, NormBoundAndDirection) {
  Rng rng(1);
  std::normal_distribution<float> n(0, 10);
  for (int t = 0; t < 1000; ++t) {
    std::vector<float> g(1 + t % 17);
    for (float& v : g) v = n(rng);
    const double C = 0.1 + (t % 13);
    const auto c = clip(g, C);
    EXPECT_LE(norm(c), C * (1 + 1e-6));
    const double dot = std::inner_product(g.begin(), g.end(), c.begin(), 0.0);
    EXPECT_NEAR(dot, norm(g) * norm(c), 1e-4 * norm(g) * norm(c) + 1e-12);
  }
}

TEST(DpSgdTest, DegeneratesToPlainSgd) {
  Rng init(3);
  nn::Model dp_model = testing::random_tiny_model(init);
  nn::Model sgd_model = dp_model;
  Rng data(4), noise(5);
  const double eta = 0.05;
  DPConfig dp{.C = 1e9, .sigma = 0.0, .q = 1.0};
  for (int step = 0; step < 50; ++step) {
    const nn::Tensor x = testing::random_batch(dp_model.bottom.input, 4, data);
    std::vector<int> y(4);
    for (int& v : y) v = std::uniform_int_distribution<int>(0, dp_model.num_classes - 1)(data);
    dp_sgd_step(dp_model, x, y, dp, eta, noise);
    const nn::BatchGradient g = nn::batch_gradient(sgd_model, x, y);
    std::vector<float> p = sgd_model.params();
    for (size_t i = 0; i < p.size(); ++i) p[i] -= static_cast<float>(eta) * g.grad[i];
    sgd_model.set_params(p);
  }
  const auto a = dp_model.params(), b = sgd_model.params();
  for (size_t i = 0; i < a.size(); ++i)
    EXPECT_NEAR(a[i], b[i], 1e-5 * std::max(1.0f, std::abs(b[i])));
}

TEST(DpSgdTest, FixedSeedIsBitIdentical) {
  Rng init(6);
  const nn::Model base = testing::random_tiny_model(init);
  const nn::Tensor x = testing::random_batch(base.bottom.input, 3, init);
  const std::vector<int> y = {0, 1, 0};
  DPConfig dp{.C = 0.5, .sigma = 1.3, .q = 0.5};
  nn::Model a = base, b = base;
  Rng ra(42), rb(42);
  dp_sgd_step(a, x, y, dp, 0.1, ra);
  dp_sgd_step(b, x, y, dp, 0.1, rb);
  EXPECT_EQ(a.params(), b.params());
  EXPECT_NE(a.params(), base.params());
}

TEST(DpSgdTest, NoiseStdMatchesSigmaCOverB) {
  const double sigma = 1.5, C = 2.0;
  const size_t B = 4;
  const std::vector<std::vector<float>> zeros(B, std::vector<float>(1, 0.0f));
  Rng rng(7);
  const int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = privatize(zeros, C, sigma, rng)[0];
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double sd = std::sqrt(s2 / n - mean * mean);
  const double expected = sigma * C / B;
  // Standard error of a Gaussian sample std is sd / sqrt(2n).
  EXPECT_NEAR(sd, expected, 3 * expected / std::sqrt(2.0 * n));
}

TEST(DpSgdTest, LedgerChargesEachStep) {
  Rng init(8);
  nn::Model m = testing::random_tiny_model(init);
  const nn::Tensor x = testing::random_batch(m.bottom.input, 2, init);
  const std::vector<int> y = {0, 1};
  DPConfig dp{.C = 1.0, .sigma = 1.0, .q = 1.0};
  PrivacyLedger ledger(dp, privacy_cost(dp, 2));
  Rng rng(1);
  dp_sgd_step(m, x, y, dp, 0.01, rng, &ledger);
  dp_sgd_step(m, x, y, dp, 0.01, rng, &ledger);
  const auto before = m.params();
  EXPECT_THROW(dp_sgd_step(m, x, y, dp, 0.01, rng, &ledger), BudgetExhausted);
  EXPECT_EQ(ledger.steps(), 2);
  EXPECT_EQ(m.params(), before);
}

TEST(DpSgdTest, NonFiniteUpdateIsRejected) {
  Rng init(9);
  nn::Model m = testing::random_tiny_model(init);
  const nn::Tensor x = testing::random_batch(m.bottom.input, 2, init);
  const std::vector<int> y = {0, 1};
  const auto before = m.params();
  DPConfig dp{.C = 1e30, .sigma = 1e30, .q = 1.0};
  Rng rng(1);
  EXPECT_THROW(dp_sgd_step(m, x, y, dp, 1.0, rng), NonFiniteError);
  EXPECT_EQ(m.params(), before);
}

TEST(SampleBatchTest, SizeAndUniqueness) {
  Rng rng(2);
  const auto b = sample_batch(100, 0.25, rng);
  EXPECT_EQ(b.size(), 25u);
  EXPECT_EQ(std::set<size_t>(b.begin(), b.end()).size(), 25u);
  EXPECT_EQ(sample_batch(10, 0.001, rng).size(), 1u);
  EXPECT_EQ(sample_batch(10, 1.0, rng).size(), 10u);
}

TEST(AccountantTest, GaussianClosedForm) {
  // q = 1: RDP is alpha / (2 sigma^2), so eps(alpha) = alpha / 2 + ln(1/delta)
  // / (alpha - 1), minimized at alpha* = 1 + sqrt(2 ln(1/delta)).
  const double L = std::log(1e5);
  const double a = 1 + std::sqrt(2 * L);
  const double oracle = a / 2 + L / (a - 1);
  EXPECT_NEAR(privacy_cost(DPConfig{.C = 1, .sigma = 1, .q = 1, .delta = 1e-5}, 1), oracle, 1e-6);
  EXPECT_NEAR(oracle, 5.2985, 1e-4);
}

TEST(AccountantTest, Sentinels) {
  DPConfig dp{.C = 1, .sigma = 1, .q = 0.1};
  EXPECT_EQ(privacy_cost(dp, 0), 0.0);
  dp.sigma = 0;
  EXPECT_EQ(privacy_cost(dp, 1), kInfinity);
  EXPECT_EQ(privacy_cost(dp, 0), 0.0);
  dp.q = 0;
  EXPECT_THROW(privacy_cost(dp, 1), InvalidArgument);
  dp.q = 0.5;
  dp.delta = 1.0;
  EXPECT_THROW(privacy_cost(dp, 1), InvalidArgument);
}

// log E_{z ~ N(0, s^2)} [((1 - q) + q exp((2z - 1) / (2 s^2)))^alpha] by
// Simpson's rule; the subsampled-Gaussian RDP is this divided by alpha - 1.
double quadrature_rdp(double q, double s, double alpha) {
  const double lo = -12 * s - 2, hi = 12 * s + 2 + alpha;
  const int n = 200000;
  const double h = (hi - lo) / n;
  double acc = 0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + i * h;
    const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    const double pdf = std::exp(-z * z / (2 * s * s)) / (s * std::sqrt(2 * M_PI));
    const double ratio = (1 - q) + q * std::exp((2 * z - 1) / (2 * s * s));
    acc += w * pdf * std::pow(ratio, alpha);
  }
  return std::log(acc * h / 3) / (alpha - 1);
}

TEST(AccountantTest, SubsampledMatchesQuadrature) {
  for (double q : {0.01, 0.1, 0.5}) {
    for (double s : {0.8, 1.5, 4.0}) {
      for (double alpha : {1.5, 2.0, 3.25, 8.0, 20.0}) {
        const double oracle = quadrature_rdp(q, s, alpha);
        if (!std::isfinite(oracle) || oracle > 50) continue;
        EXPECT_NEAR(rdp_step(q, s, alpha), oracle, 1e-6 * std::max(1.0, oracle) + 1e-9)
            << "q " << q << " sigma " << s << " alpha " << alpha;
      }
    }
  }
}

TEST(AccountantTest, MonotoneOverRandomGrid) {
  Rng rng(11);
  std::uniform_real_distribution<double> lq(std::log(0.01), 0.0), ls(std::log(0.5),
                                                                     std::log(5.0));
  std::uniform_int_distribution<int> st(1, 500);
  for (int t = 0; t < 1000; ++t) {
    const DPConfig dp{.C = 1, .sigma = std::exp(ls(rng)), .q = std::exp(lq(rng))};
    const int64_t n = st(rng);
    const double base = privacy_cost(dp, n);
    ASSERT_LE(base, privacy_cost(dp, n + 1)) << t;
    ASSERT_LE(base, privacy_cost(dp, 2 * n)) << t;
    DPConfig more_q = dp;
    more_q.q = std::min(1.0, dp.q * 1.5);
    ASSERT_LE(base, privacy_cost(more_q, n) + 1e-12) << t;
    DPConfig more_sigma = dp;
    more_sigma.sigma = dp.sigma * 1.5;
    ASSERT_GE(base, privacy_cost(more_sigma, n) - 1e-12) << t;
  }
  const DPConfig dp{.C = 1, .sigma = 1, .q = 0.3};
  DPConfig doubled = dp;
  doubled.sigma = 2;
  EXPECT_LT(privacy_cost(doubled, 10), privacy_cost(dp, 10));
}

TEST(AccountantTest, MaxStepsMatchesLinearScan) {
  Rng rng(12);
  std::uniform_real_distribution<double> q(0.05, 1.0), s(0.7, 3.0), e(0.5, 8.0);
  for (int t = 0; t < 20; ++t) {
    const DPConfig dp{.C = 1, .sigma = s(rng), .q = q(rng)};
    const double budget = e(rng);
    int64_t scan = 0;
    while (scan < 2000 && privacy_cost(dp, scan + 1) <= budget) ++scan;
    if (scan == 2000) continue;
    const int64_t got = max_steps_within_budget(dp, budget);
    EXPECT_EQ(got, scan) << "trial " << t;
    EXPECT_LE(privacy_cost(dp, got), budget);
    EXPECT_GT(privacy_cost(dp, got + 1), budget);
  }
  const DPConfig dp{.C = 1, .sigma = 1, .q = 1};
  EXPECT_EQ(max_steps_within_budget(dp, kInfinity), kStepCap);
  EXPECT_EQ(max_steps_within_budget(dp, 0.5 * privacy_cost(dp, 1)), 0);
}

TEST(AccountantTest, CalibrateSigma) {
  DPConfig dp{.C = 1, .sigma = 0, .q = 0.2};
  for (double eps : {0.5, 5.0, 50.0}) {
    const double s = calibrate_sigma(dp, 30, eps);
    dp.sigma = s;
    EXPECT_LE(privacy_cost(dp, 30), eps);
    dp.sigma = s * (1 - 1e-3);
    EXPECT_GT(privacy_cost(dp, 30), eps);
  }
  EXPECT_EQ(calibrate_sigma(dp, 30, kInfinity), 0.0);
}

TEST(AccountantTest, ReferenceConfigFitsThreeEpochPlan) {
  const DPConfig dp{.C = 0.5, .sigma = 1.92, .q = 1.0, .delta = 1e-5};
  EXPECT_LE(privacy_cost(dp, 3), 5.0);
  EXPECT_GT(privacy_cost(dp, 5), 5.0);
}

TEST(LedgerTest, LinearRdpAndJson) {
  const DPConfig dp{.C = 0.5, .sigma = 1.1, .q = 0.05};
  PrivacyLedger ledger(dp);
  const auto step = rdp_step_vector(dp.q, dp.sigma);
  ledger.record(7);
  const auto r = ledger.rdp();
  for (size_t i = 0; i < r.size(); ++i) {
    EXPECT_GE(r[i], 0.0);
    EXPECT_DOUBLE_EQ(r[i], 7 * step[i]);
  }
  const double e7 = ledger.eps_spent();
  EXPECT_DOUBLE_EQ(e7, privacy_cost(dp, 7));
  ledger.record();
  EXPECT_GE(ledger.eps_spent(), e7);
  const auto j = ledger.to_json();
  for (const char* k : {"steps", "sigma", "q", "C", "delta", "eps_spent"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["steps"], 8);
}

TEST(LedgerTest, OverspendLeavesLedgerUnchanged) {
  const DPConfig dp{.C = 1, .sigma = 1, .q = 1};
  PrivacyLedger ledger(dp, 6.0);
  EXPECT_TRUE(ledger.can_take(1));
  EXPECT_FALSE(ledger.can_take(2));
  ledger.record();
  EXPECT_THROW(ledger.record(), BudgetExhausted);
  EXPECT_EQ(ledger.steps(), 1);
}

}  // namespace
}  // namespace pfnas::privacy
