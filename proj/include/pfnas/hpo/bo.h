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

#ifndef PFNAS_HPO_BO_H_
#define PFNAS_HPO_BO_H_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "pfnas/common/rng.h"
#include "pfnas/privacy/accountant.h"

namespace pfnas::hpo {

inline constexpr int kDims = 4;
using Point = std::array<double, kDims>;  // normalized (eta, q, C, sigma) in [0,1]^4

struct HyperConfig {
  double eta = 0.01;
  int B = 1;
  double C = 1.0;
  double sigma = 1.0;

  void validate() const;
  bool operator==(const HyperConfig&) const = default;
};

// eta, q and C are searched on log scales, sigma linearly. B is derived as
// round(q * shard_size), clamped to [1, shard_size].
struct SearchDomain {
  double eta_lo = 1e-4, eta_hi = 1e-1;
  double q_lo = 0.01, q_hi = 1.0;
  double C_lo = 0.1, C_hi = 10.0;
  double sigma_lo = 0.5, sigma_hi = 5.0;
  size_t shard_size = 500;

  void validate() const;
  HyperConfig denormalize(const Point& u) const;
  Point normalize(const HyperConfig& h) const;
  // Sampling rate actually used by a config: B / shard_size.
  double q_of(const HyperConfig& h) const;
};

// Number of DP-SGD steps a trial of config h will take: epochs passes of
// ceil(N / B) steps over an N-sample shard.
struct TrialPlan {
  int epochs = 5;
  size_t shard_size = 500;

  int64_t steps(const HyperConfig& h) const;
};

privacy::DPConfig to_dp(const HyperConfig& h, const SearchDomain& domain, double delta);

// Planned (epsilon, delta) spend of one trial.
double planned_cost(const HyperConfig& h, const SearchDomain& domain, const TrialPlan& plan,
                    double delta);

std::vector<HyperConfig> init_candidates(int k, const SearchDomain& domain, Rng& rng);

// ---- Gaussian-process surrogate ------------------------------------------

struct GPHyper {
  Point lengthscales{1.0, 1.0, 1.0, 1.0};
  double signal_variance = 1.0;
  double prior_mean = 0.0;
};

// Matern-5/2 with ARD lengthscales.
double matern52(const Point& a, const Point& b, const GPHyper& h);

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

class Surrogate {
 public:
  // Fixed hyperparameters; noiseless apart from jitter.
  static Surrogate with_hyper(std::vector<Point> x, std::vector<double> y, GPHyper hyper);

  // Maximizes the log marginal likelihood by coordinate ascent over
  // lengthscale and variance grids from 5 seeded starts; the prior mean is
  // the sample mean of y.
  static Surrogate fit(std::vector<Point> x, std::vector<double> y, uint64_t seed);

  Posterior posterior(const Point& u) const;
  double log_marginal_likelihood() const { return lml_; }
  const GPHyper& hyper() const { return hyper_; }
  double jitter() const { return jitter_; }
  const std::vector<Point>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }
  double best_observed() const;

 private:
  Surrogate() = default;
  // Factorizes K + jitter I, escalating jitter from 1e-6 to 1e-4; false if
  // the matrix is still not positive definite.
  bool factorize();

  std::vector<Point> x_;
  std::vector<double> y_;
  GPHyper hyper_;
  double jitter_ = 1e-6;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
};

inline constexpr double kDefaultXi = 0.01;

// (mu - y* - xi) Phi(u) + s phi(u) with u = (mu - y* - xi) / s;
// max(0, mu - y* - xi) when s = 0.
double expected_improvement(double mean, double stddev, double incumbent,
                            double xi = kDefaultXi);
double expected_improvement(const Surrogate& s, const Point& u, double incumbent,
                            double xi = kDefaultXi);

// Halton points in bases 2, 3, 5, 7 with a seeded Cranley-Patterson shift.
std::vector<Point> candidate_pool(int n, Rng& rng);

// Feasible argmax of EI over candidate_pool(n_candidates). Throws
// InfeasibleError when no candidate fits the budget.
HyperConfig propose_next(const Surrogate& s, const SearchDomain& domain, double eps_budget,
                         const TrialPlan& plan, double delta, Rng& rng,
                         int n_candidates = 1024, double xi = kDefaultXi);

// ---- BO loop ---------------------------------------------------------------

// Validation accuracy of one trial. Must be deterministic in its arguments.
using Objective = std::function<double(const HyperConfig&, uint64_t trial_seed)>;

struct BOConfig {
  int k_init = 5;
  int iterations = 30;
  double eps_budget = 5.0;
  double delta = 1e-5;
  double xi = kDefaultXi;
  int n_candidates = 1024;
  // Random draws allowed while collecting the k_init feasible initial points.
  int max_init_draws = 1000;
  TrialPlan plan;

  void validate() const;
};

struct BORecord {
  int iter = 0;
  HyperConfig config;
  double eps_planned = 0.0;
  bool feasible = false;
  bool trained = false;
  double val_acc = 0.0;
};

struct BOResult {
  // Evaluated config with the highest posterior mean (ties to the higher
  // observation).
  HyperConfig best;
  double best_predicted = 0.0;
  HyperConfig best_observed;
  double best_observed_acc = 0.0;
  std::vector<BORecord> trace;
  GPHyper final_hyper;
};

BOResult run_bo(const BOConfig& cfg, const SearchDomain& domain, const Objective& objective,
                Rng& rng);

// iter,eta,B,C,sigma,eps_planned,val_acc,feasible
std::string trace_csv(const std::vector<BORecord>& trace);

nlohmann::json to_json(const HyperConfig& h);

}  // namespace pfnas::hpo

#endif  // PFNAS_HPO_BO_H_
