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

#include "pfnas/hpo/bo.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "pfnas/common/error.h"

namespace pfnas::hpo {
namespace {

constexpr double kJitter = 1e-6;
constexpr double kMaxJitter = 1e-4;
constexpr int kFitStarts = 5;

const std::vector<double>& lengthscale_grid() {
  static const std::vector<double> g = {0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.5, 4.0};
  return g;
}

const std::vector<double>& variance_grid() {
  static const std::vector<double> g = {1e-4, 3e-4, 1e-3, 3e-3, 0.01, 0.03, 0.1, 0.3, 1.0};
  return g;
}

double lerp_log(double lo, double hi, double u) {
  return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
}

double unlerp_log(double lo, double hi, double v) {
  if (hi == lo) return 0.0;
  return (std::log(v) - std::log(lo)) / (std::log(hi) - std::log(lo));
}

double radical_inverse(uint64_t i, uint64_t base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * (i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

std::string num(double v, const char* fmt) {
  if (std::isinf(v)) return "inf";
  char buf[48];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

void HyperConfig::validate() const {
  if (!(eta > 0) || !std::isfinite(eta)) throw InvalidArgument("eta must be > 0");
  if (B < 1) throw InvalidArgument("batch size must be >= 1");
  if (!(C > 0) || !std::isfinite(C)) throw InvalidArgument("C must be > 0");
  if (!(sigma >= 0) || !std::isfinite(sigma)) throw InvalidArgument("sigma must be >= 0");
}

void SearchDomain::validate() const {
  auto range = [](double lo, double hi, const char* name, bool positive) {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi) || (positive && !(lo > 0)))
      throw InvalidArgument(std::string("search range for ") + name + " is empty or invalid");
  };
  range(eta_lo, eta_hi, "eta", true);
  range(q_lo, q_hi, "q", true);
  range(C_lo, C_hi, "C", true);
  range(sigma_lo, sigma_hi, "sigma", false);
  if (q_hi > 1) throw InvalidArgument("q range must lie in (0, 1]");
  if (sigma_lo < 0) throw InvalidArgument("sigma range must be >= 0");
  if (shard_size < 1) throw InvalidArgument("shard_size must be >= 1");
}

HyperConfig SearchDomain::denormalize(const Point& u) const {
  HyperConfig h;
  h.eta = lerp_log(eta_lo, eta_hi, u[0]);
  const double q = lerp_log(q_lo, q_hi, u[1]);
  h.B = static_cast<int>(std::clamp<long long>(std::llround(q * shard_size), 1,
                                               static_cast<long long>(shard_size)));
  h.C = lerp_log(C_lo, C_hi, u[2]);
  h.sigma = sigma_lo + u[3] * (sigma_hi - sigma_lo);
  return h;
}

Point SearchDomain::normalize(const HyperConfig& h) const {
  Point u;
  u[0] = unlerp_log(eta_lo, eta_hi, h.eta);
  u[1] = unlerp_log(q_lo, q_hi, q_of(h));
  u[2] = unlerp_log(C_lo, C_hi, h.C);
  u[3] = sigma_hi == sigma_lo ? 0.0 : (h.sigma - sigma_lo) / (sigma_hi - sigma_lo);
  return u;
}

double SearchDomain::q_of(const HyperConfig& h) const {
  return std::min(1.0, static_cast<double>(h.B) / static_cast<double>(shard_size));
}

int64_t TrialPlan::steps(const HyperConfig& h) const {
  const int64_t per_epoch = (static_cast<int64_t>(shard_size) + h.B - 1) / h.B;
  return static_cast<int64_t>(epochs) * per_epoch;
}

privacy::DPConfig to_dp(const HyperConfig& h, const SearchDomain& domain, double delta) {
  return {.C = h.C, .sigma = h.sigma, .q = domain.q_of(h), .delta = delta};
}

double planned_cost(const HyperConfig& h, const SearchDomain& domain, const TrialPlan& plan,
                    double delta) {
  return privacy::privacy_cost(to_dp(h, domain, delta), plan.steps(h));
}

std::vector<HyperConfig> init_candidates(int k, const SearchDomain& domain, Rng& rng) {
  domain.validate();
  if (k < 1) throw InvalidArgument("init_candidates needs k >= 1");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<HyperConfig> out;
  for (int i = 0; i < k; ++i) {
    Point p;
    for (double& v : p) v = u(rng);
    out.push_back(domain.denormalize(p));
  }
  return out;
}

double matern52(const Point& a, const Point& b, const GPHyper& h) {
  double r2 = 0;
  for (int d = 0; d < kDims; ++d) {
    const double z = (a[d] - b[d]) / h.lengthscales[d];
    r2 += z * z;
  }
  const double r = std::sqrt(5.0 * r2);
  return h.signal_variance * (1.0 + r + r * r / 3.0) * std::exp(-r);
}

bool Surrogate::factorize() {
  const size_t n = x_.size();
  Eigen::MatrixXd K(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j <= i; ++j) K(i, j) = K(j, i) = matern52(x_[i], x_[j], hyper_);
  Eigen::VectorXd r(n);
  for (size_t i = 0; i < n; ++i) r(i) = y_[i] - hyper_.prior_mean;
  for (jitter_ = kJitter; jitter_ <= kMaxJitter * (1 + 1e-9); jitter_ *= 10) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter_;
    llt_.compute(Kj);
    if (llt_.info() != Eigen::Success) continue;
    // LLT does not reject matrices with tiny negative pivots reliably.
    const auto diag = llt_.matrixLLT().diagonal();
    if (!(diag.array() > 0).all() || !diag.allFinite()) continue;
    alpha_ = llt_.solve(r);
    lml_ = -0.5 * r.dot(alpha_) - diag.array().log().sum() -
           0.5 * static_cast<double>(n) * std::log(2 * M_PI);
    return true;
  }
  jitter_ = kMaxJitter;
  return false;
}

Surrogate Surrogate::with_hyper(std::vector<Point> x, std::vector<double> y, GPHyper hyper) {
  if (x.size() != y.size() || x.empty())
    throw InvalidArgument("surrogate needs matching, non-empty observations");
  for (double v : y)
    if (!std::isfinite(v)) throw NonFiniteError("non-finite observation");
  for (double l : hyper.lengthscales)
    if (!(l > 0)) throw InvalidArgument("lengthscales must be > 0");
  if (!(hyper.signal_variance > 0)) throw InvalidArgument("signal variance must be > 0");
  Surrogate s;
  s.x_ = std::move(x);
  s.y_ = std::move(y);
  s.hyper_ = hyper;
  if (!s.factorize())
    throw Error("kernel matrix is singular even with jitter " + std::to_string(kMaxJitter));
  return s;
}

Surrogate Surrogate::fit(std::vector<Point> x, std::vector<double> y, uint64_t seed) {
  if (x.size() < 2) throw InvalidArgument("gp_fit needs at least 2 observations");
  if (x.size() != y.size()) throw InvalidArgument("gp_fit: x and y sizes differ");
  double mean = 0;
  for (double v : y) mean += v;
  mean /= y.size();

  const auto& ls = lengthscale_grid();
  const auto& vs = variance_grid();
  // Coordinates 0..3 index lengthscales, 4 indexes the variance.
  using Idx = std::array<size_t, kDims + 1>;
  auto lml_at = [&](const Idx& idx) {
    Surrogate s;
    s.x_ = x;
    s.y_ = y;
    for (int d = 0; d < kDims; ++d) s.hyper_.lengthscales[d] = ls[idx[d]];
    s.hyper_.signal_variance = vs[idx[kDims]];
    s.hyper_.prior_mean = mean;
    return s.factorize() ? s.lml_ : -std::numeric_limits<double>::infinity();
  };

  Rng rng(seed);
  Idx best_idx{};
  double best = -std::numeric_limits<double>::infinity();
  for (int start = 0; start < kFitStarts; ++start) {
    Idx idx;
    if (start == 0) {
      for (int d = 0; d < kDims; ++d) idx[d] = ls.size() / 2;
      idx[kDims] = vs.size() / 2;
    } else {
      for (int d = 0; d < kDims; ++d)
        idx[d] = std::uniform_int_distribution<size_t>(0, ls.size() - 1)(rng);
      idx[kDims] = std::uniform_int_distribution<size_t>(0, vs.size() - 1)(rng);
    }
    double cur = lml_at(idx);
    for (int sweep = 0; sweep < 20; ++sweep) {
      bool moved = false;
      for (int c = 0; c <= kDims; ++c) {
        const size_t options = c < kDims ? ls.size() : vs.size();
        for (size_t v = 0; v < options; ++v) {
          if (v == idx[c]) continue;
          Idx trial = idx;
          trial[c] = v;
          const double l = lml_at(trial);
          if (l > cur + 1e-12) {
            cur = l;
            idx = trial;
            moved = true;
          }
        }
      }
      if (!moved) break;
    }
    if (cur > best) {
      best = cur;
      best_idx = idx;
    }
  }
  if (!std::isfinite(best))
    throw Error("kernel matrix is singular for every hyperparameter setting");
  GPHyper h;
  for (int d = 0; d < kDims; ++d) h.lengthscales[d] = ls[best_idx[d]];
  h.signal_variance = vs[best_idx[kDims]];
  h.prior_mean = mean;
  return with_hyper(std::move(x), std::move(y), h);
}

Posterior Surrogate::posterior(const Point& u) const {
  const size_t n = x_.size();
  Eigen::VectorXd k(n);
  for (size_t i = 0; i < n; ++i) k(i) = matern52(x_[i], u, hyper_);
  Posterior p;
  p.mean = hyper_.prior_mean + k.dot(alpha_);
  const Eigen::VectorXd v = llt_.matrixL().solve(k);
  p.variance = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
  return p;
}

double Surrogate::best_observed() const { return *std::max_element(y_.begin(), y_.end()); }

double expected_improvement(double mean, double stddev, double incumbent, double xi) {
  const double d = mean - incumbent - xi;
  if (!(stddev > 0)) return std::max(0.0, d);
  const double u = d / stddev;
  const double cdf = 0.5 * std::erfc(-u / M_SQRT2);
  const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2 * M_PI);
  return std::max(0.0, d * cdf + stddev * pdf);
}

double expected_improvement(const Surrogate& s, const Point& u, double incumbent, double xi) {
  const Posterior p = s.posterior(u);
  return expected_improvement(p.mean, std::sqrt(p.variance), incumbent, xi);
}

std::vector<Point> candidate_pool(int n, Rng& rng) {
  static constexpr uint64_t kBases[kDims] = {2, 3, 5, 7};
  Point shift;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& s : shift) s = u(rng);
  std::vector<Point> out(n);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < kDims; ++d) {
      const double v = radical_inverse(i + 1, kBases[d]) + shift[d];
      out[i][d] = v - std::floor(v);
    }
  return out;
}

HyperConfig propose_next(const Surrogate& s, const SearchDomain& domain, double eps_budget,
                         const TrialPlan& plan, double delta, Rng& rng, int n_candidates,
                         double xi) {
  const double incumbent = s.best_observed();
  double best_ei = -1;
  HyperConfig best;
  bool any = false;
  for (const Point& u : candidate_pool(n_candidates, rng)) {
    const HyperConfig h = domain.denormalize(u);
    if (!privacy::within_budget(to_dp(h, domain, delta), plan.steps(h), eps_budget)) continue;
    any = true;
    const double ei = expected_improvement(s, domain.normalize(h), incumbent, xi);
    if (ei > best_ei) {
      best_ei = ei;
      best = h;
    }
  }
  if (!any)
    throw InfeasibleError("no feasible candidate among " + std::to_string(n_candidates) +
                          " for epsilon " + std::to_string(eps_budget) +
                          "; widen the sigma range upward or raise the budget");
  return best;
}

void BOConfig::validate() const {
  if (k_init < 2) throw InvalidArgument("k_init must be >= 2");
  if (iterations < 0) throw InvalidArgument("iterations must be >= 0");
  if (!(eps_budget > 0)) throw InvalidArgument("eps_budget must be > 0");
  if (!(delta > 0 && delta < 1)) throw InvalidArgument("delta must be in (0, 1)");
  if (n_candidates < 1) throw InvalidArgument("n_candidates must be >= 1");
  if (plan.epochs < 0) throw InvalidArgument("trial epochs must be >= 0");
}

BOResult run_bo(const BOConfig& cfg, const SearchDomain& domain, const Objective& objective,
                Rng& rng) {
  cfg.validate();
  domain.validate();
  const uint64_t root = rng();
  BOResult result;
  std::vector<Point> xs;
  std::vector<double> ys;
  std::vector<HyperConfig> evaluated;

  auto train = [&](const HyperConfig& h, double eps) {
    BORecord r;
    r.iter = static_cast<int>(result.trace.size());
    r.config = h;
    r.eps_planned = eps;
    r.feasible = true;
    r.trained = true;
    r.val_acc = objective(h, derive_seed(root, {static_cast<uint64_t>(r.iter)}));
    result.trace.push_back(r);
    xs.push_back(domain.normalize(h));
    ys.push_back(r.val_acc);
    evaluated.push_back(h);
  };

  for (int draws = 0; static_cast<int>(evaluated.size()) < cfg.k_init &&
                      draws < cfg.max_init_draws;
       ++draws) {
    const HyperConfig h = init_candidates(1, domain, rng)[0];
    const double eps = planned_cost(h, domain, cfg.plan, cfg.delta);
    if (eps <= cfg.eps_budget) {
      train(h, eps);
    } else {
      BORecord r;
      r.iter = static_cast<int>(result.trace.size());
      r.config = h;
      r.eps_planned = eps;
      result.trace.push_back(r);
    }
  }
  if (evaluated.empty())
    throw InfeasibleError("no feasible configuration in " + std::to_string(cfg.max_init_draws) +
                          " random draws at epsilon " + std::to_string(cfg.eps_budget));

  if (evaluated.size() >= 2) {
    for (int it = 0; it < cfg.iterations; ++it) {
      const Surrogate s =
          Surrogate::fit(xs, ys, derive_seed(root, {tag("fit"), static_cast<uint64_t>(it)}));
      const HyperConfig h = propose_next(s, domain, cfg.eps_budget, cfg.plan, cfg.delta, rng,
                                         cfg.n_candidates, cfg.xi);
      train(h, planned_cost(h, domain, cfg.plan, cfg.delta));
    }
  }

  size_t obs = 0;
  for (size_t i = 1; i < ys.size(); ++i)
    if (ys[i] > ys[obs]) obs = i;
  result.best_observed = evaluated[obs];
  result.best_observed_acc = ys[obs];
  result.best = evaluated[obs];
  result.best_predicted = ys[obs];
  if (evaluated.size() >= 2) {
    const Surrogate s = Surrogate::fit(xs, ys, derive_seed(root, {tag("final")}));
    result.final_hyper = s.hyper();
    size_t arg = 0;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < xs.size(); ++i) {
      const double m = s.posterior(xs[i]).mean;
      // Means within 1e-9 count as tied; the higher observation wins.
      if (m > best_mean + 1e-9 || (std::abs(m - best_mean) <= 1e-9 && ys[i] > ys[arg])) {
        best_mean = std::max(best_mean, m);
        arg = i;
      }
    }
    result.best = evaluated[arg];
    result.best_predicted = best_mean;
  }
  return result;
}

std::string trace_csv(const std::vector<BORecord>& trace) {
  std::ostringstream out;
  out << "iter,eta,B,C,sigma,eps_planned,val_acc,feasible\n";
  for (const auto& r : trace)
    out << r.iter << ',' << num(r.config.eta, "%.8g") << ',' << r.config.B << ','
        << num(r.config.C, "%.8g") << ',' << num(r.config.sigma, "%.8g") << ','
        << num(r.eps_planned, "%.6f") << ',' << (r.trained ? num(r.val_acc, "%.6f") : "")
        << ',' << (r.feasible ? 1 : 0) << '\n';
  return out.str();
}

nlohmann::json to_json(const HyperConfig& h) {
  return {{"eta", h.eta}, {"B", h.B}, {"C", h.C}, {"sigma", h.sigma}};
}

}  // namespace pfnas::hpo
