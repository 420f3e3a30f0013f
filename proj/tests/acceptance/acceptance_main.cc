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
// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "pfnas/analysis/attack.h"
#include "pfnas/analysis/bounds.h"
#include "pfnas/cli/app.h"
#include "pfnas/cli/pipeline.h"
#include "pfnas/common/error.h"
#include "pfnas/common/rng.h"
#include "pfnas/evo/ga.h"
#include "pfnas/fed/federation.h"
#include "pfnas/fed/wire.h"
#include "pfnas/hpo/bo.h"
#include "pfnas/nn/network.h"
#include "pfnas/privacy/accountant.h"
#include "pfnas/privacy/dp_sgd.h"
#include "pfnas/space/search_space.h"
#include "support/bound_oracle.h"
#include "support/edit_distance.h"
#include "support/reference_net.h"

namespace pfnas::acceptance {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

// ---- 1. gradients --------------------------------------------------------------

Outcome gradients() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst_vec = 0, worst_elem = 0;
  size_t params_max = 0, elem_viol = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const nn::Model m = testing::random_tiny_model(rng);
    params_max = std::max(params_max, m.param_count());
    const nn::Tensor x = testing::random_batch(m.bottom.input, 3, rng);
    std::vector<int> y(3);
    for (int& v : y) v = std::uniform_int_distribution<int>(0, m.num_classes - 1)(rng);
    const nn::SampleGradients g = nn::per_sample_gradients(m, x, y);
    for (int i = 0; i < 3; ++i) {
      const auto fd = testing::finite_difference_gradient(m, x.row(i), y[i],
                                                          nn::Loss::kSoftmaxCrossEntropy);
      double diff2 = 0, a2 = 0, b2 = 0;
      for (size_t j = 0; j < fd.size(); ++j) {
        const double d = g.grads[i][j] - fd[j];
        diff2 += d * d;
        a2 += fd[j] * fd[j];
        b2 += double(g.grads[i][j]) * g.grads[i][j];
        // Elementwise relative error; an absolute floor covers exact zeros.
        const double rel = std::abs(d) / std::max(std::abs(fd[j]), 1e-3);
        worst_elem = std::max(worst_elem, rel);
        elem_viol += std::abs(d) > 1e-3 * std::abs(fd[j]) + 1e-6;
      }
      worst_vec = std::max(worst_vec, std::sqrt(diff2) / std::max(1e-12, std::sqrt(std::max(a2, b2))));
    }
  }
  double worst_mean = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const nn::Model m = testing::random_tiny_model(rng);
    const nn::Tensor x = testing::random_batch(m.bottom.input, 8, rng);
    std::vector<int> y(8);
    for (int i = 0; i < 8; ++i) y[i] = i % m.num_classes;
    const auto per = nn::per_sample_gradients(m, x, y);
    const auto full = nn::batch_gradient(m, x, y);
    for (size_t j = 0; j < full.grad.size(); ++j) {
      double mean = 0;
      for (const auto& g : per.grads) mean += g[j];
      mean /= per.grads.size();
      worst_mean = std::max(worst_mean, std::abs(mean - full.grad[j]) / std::max(1.0, std::abs(mean)));
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = params_max <= 500 && worst_vec <= 1e-3 && elem_viol == 0 && worst_mean <= 1e-5 &&
           secs < 30;
  o.detail = fmt("20 models (<= %zu params) x 3 samples: max rel err %.2e (vector), "
                 "%zu elementwise violations; mean vs batch %.2e; %.1f s",
                 params_max, worst_vec, elem_viol, worst_mean, secs);
  o.notes.push_back(fmt("max elementwise rel err with 1e-3 floor: %.2e", worst_elem));
  return o;
}

// ---- 2. DP degeneracy ---------------------------------------------------------

Outcome dp_degeneracy() {
  Rng init(202);
  nn::Model dp_model = testing::random_tiny_model(init);
  nn::Model sgd_model = dp_model;
  Rng data(203), noise(204);
  const double eta = 0.05;
  const privacy::DPConfig dp{.C = 1e9, .sigma = 0.0, .q = 1.0};
  double worst = 0;
  for (int step = 0; step < 50; ++step) {
    const nn::Tensor x = testing::random_batch(dp_model.bottom.input, 4, data);
    std::vector<int> y(4);
    for (int& v : y) v = std::uniform_int_distribution<int>(0, dp_model.num_classes - 1)(data);
    privacy::dp_sgd_step(dp_model, x, y, dp, eta, noise);
    const nn::BatchGradient g = nn::batch_gradient(sgd_model, x, y);
    std::vector<float> p = sgd_model.params();
    for (size_t i = 0; i < p.size(); ++i) p[i] -= static_cast<float>(eta) * g.grad[i];
    sgd_model.set_params(p);
    const auto a = dp_model.params();
    for (size_t i = 0; i < a.size(); ++i)
      worst = std::max<double>(worst, std::abs(a[i] - p[i]) / std::max(1.0f, std::abs(p[i])));
  }
  return {worst <= 1e-5, fmt("max trajectory deviation over 50 steps %.2e (tol 1e-5)", worst), {}};
}

// ---- 3. accountant ------------------------------------------------------------

Outcome accountant() {
  // Gaussian mechanism at q = 1: eps(alpha) = alpha / (2 sigma^2) + ln(1/delta) / (alpha - 1),
  // minimized at alpha* = 1 + sigma sqrt(2 ln(1/delta)).
  const double L = std::log(1e5);
  const double a = 1 + std::sqrt(2 * L);
  const double oracle = a / 2 + L / (a - 1);
  const double got = privacy::privacy_cost({.C = 1, .sigma = 1, .q = 1, .delta = 1e-5}, 1);
  Rng rng(303);
  std::uniform_real_distribution<double> lq(std::log(0.01), 0.0), ls(std::log(0.5), std::log(5.0));
  std::uniform_int_distribution<int> st(1, 500);
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const privacy::DPConfig dp{.C = 1, .sigma = std::exp(ls(rng)), .q = std::exp(lq(rng))};
    const int64_t n = st(rng);
    const double base = privacy::privacy_cost(dp, n);
    privacy::DPConfig more_q = dp, more_sigma = dp;
    more_q.q = std::min(1.0, dp.q * 1.5);
    more_sigma.sigma = dp.sigma * 1.5;
    violations += !(base <= privacy::privacy_cost(dp, n + 1));
    violations += !(base <= privacy::privacy_cost(more_q, n) + 1e-12);
    violations += !(base >= privacy::privacy_cost(more_sigma, n) - 1e-12);
  }
  return {std::abs(got - oracle) <= 1e-6 && violations == 0,
          fmt("eps(q=1, sigma=1, 1 step) = %.8f vs analytic %.8f (|diff| %.1e); "
              "%d monotonicity violations over 1000 points",
              got, oracle, std::abs(got - oracle), violations),
          {}};
}

// ---- 4. GA soundness ------------------------------------------------------------

space::SpaceConfig small_space(int min_len, int max_len) {
  space::SpaceConfig sp;
  sp.input = {3, 8, 8};
  sp.min_len = min_len;
  sp.max_len = max_len;
  return sp;
}

struct GaStats {
  int optimum = 0;
  int elitism_ok = 0;
  int runs = 0;
  bool reachable = true;
};

GaStats ga_trials(const space::SpaceConfig& sp, const evo::GAConfig& cfg, int seeds,
                  bool check_reachable) {
  GaStats s;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng tr(4000 + seed);
    const space::Genome target = space::sample_random_genome(sp, tr);
    if (check_reachable) s.reachable &= testing::target_reachable_from_everywhere(sp, target);
    auto fit = [&](const space::Genome& g, uint64_t) { return testing::edit_fitness(g, target); };
    Rng rng(5000 + seed);
    const evo::GAResult r = evo::run_ga(cfg, sp, fit, rng);
    bool mono = true;
    for (size_t i = 1; i < r.log.size(); ++i) mono &= r.log[i].best_acc >= r.log[i - 1].best_acc;
    s.elitism_ok += mono;
    s.optimum += r.best_fitness == 1.0;
    ++s.runs;
  }
  return s;
}

Outcome ga_soundness() {
  const auto t0 = Clock::now();
  const evo::GAConfig cfg;  // N = 10, T_g = 20, p_cross 0.9, p_mut 0.2
  const space::SpaceConfig sp = small_space(1, 3);
  const GaStats main = ga_trials(sp, cfg, 20, true);
  const GaStats wide = ga_trials(space::SpaceConfig{}, cfg, 20, false);

  // First draws of environmental selection against fitness proportions.
  const std::vector<double> f = {0.9, 0.7, 0.5, 0.3, 0.2, 0.1};
  evo::Population pool;
  for (size_t i = 0; i < f.size(); ++i) {
    evo::Individual ind;
    ind.genome = space::Genome{{space::BlockGene::conv(3, 16 << (i % 3))}};
    ind.fitness = f[i];
    ind.param_count = i;  // identifies the individual
    pool.push_back(ind);
  }
  const double total = std::accumulate(f.begin(), f.end(), 0.0);
  std::vector<int> count(f.size(), 0);
  Rng rng(404);
  const int draws = 100000;
  for (int d = 0; d < draws; ++d) {
    // N = pool size draws everyone, so elitism never rewrites the first draw.
    const evo::Population next = evo::environmental_select(pool, static_cast<int>(pool.size()), rng);
    ++count[next[0].param_count];
  }
  double worst_z = 0;
  for (size_t i = 0; i < f.size(); ++i) {
    const double p = f[i] / total;
    worst_z = std::max(worst_z, std::abs(count[i] / double(draws) - p) / std::sqrt(p * (1 - p) / draws));
  }
  const double secs = seconds_since(t0);

  evo::GAConfig always = cfg;
  always.p_mut = 1.0;
  const GaStats diag = ga_trials(sp, always, 20, false);

  Outcome o;
  o.pass = main.optimum >= 18 && main.elitism_ok == main.runs && wide.elitism_ok == wide.runs &&
           main.reachable && worst_z <= 3 && secs < 60;
  o.detail = fmt("optimum in %d/20 seeds (need 18) on lengths 1..3; elitism monotone %d/%d; "
                 "first-draw max |z| %.2f over 1e5 draws; targets reachable: %s; %.1f s",
                 main.optimum, main.elitism_ok + wide.elitism_ok, main.runs + wide.runs, worst_z,
                 main.reachable ? "yes" : "no", secs);
  o.notes.push_back(fmt("default lengths 3..12: optimum in %d/20 seeds", wide.optimum));
  o.notes.push_back(fmt("diagnostic, p_mut = 1.0 on lengths 1..3: optimum in %d/20 seeds",
                        diag.optimum));
  return o;
}

// ---- 5. GP / EI ---------------------------------------------------------------

double k52(const hpo::Point& a, const hpo::Point& b, const hpo::GPHyper& h) {
  double r2 = 0;
  for (int d = 0; d < 4; ++d) r2 += std::pow((a[d] - b[d]) / h.lengthscales[d], 2);
  const double r = std::sqrt(r2);
  return h.signal_variance * (1 + std::sqrt(5.0) * r + 5.0 * r * r / 3.0) * std::exp(-std::sqrt(5.0) * r);
}

std::vector<long double> dense_solve(std::vector<std::vector<long double>> A,
                                     std::vector<long double> b) {
  const size_t n = b.size();
  for (size_t c = 0; c < n; ++c) {
    size_t piv = c;
    for (size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const long double f = A[r][c] / A[c][c];
      for (size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  for (size_t i = 0; i < n; ++i) b[i] /= A[i][i];
  return b;
}

Outcome gp_ei() {
  constexpr double kJitter = 1e-6;  // the surrogate's diagonal jitter is part of the model
  double worst = 0;
  {
    const hpo::GPHyper h;
    const std::vector<hpo::Point> x = {{0.1, 0.2, 0.3, 0.4}, {0.5, 0.1, 0.9, 0.2}};
    const std::vector<double> y = {0.3, 0.7};
    const auto s = hpo::Surrogate::with_hyper(x, y, h);
    const hpo::Point q = {0.3, 0.3, 0.5, 0.5};
    const double a = 1 + kJitter, b = k52(x[0], x[1], h), det = a * a - b * b;
    const double k1 = k52(x[0], q, h), k2 = k52(x[1], q, h);
    const double mean = (k1 * (a * y[0] - b * y[1]) + k2 * (-b * y[0] + a * y[1])) / det;
    const double var = 1 - (a * k1 * k1 - 2 * b * k1 * k2 + a * k2 * k2) / det;
    const auto p = s.posterior(q);
    worst = std::max({worst, std::abs(p.mean - mean), std::abs(p.variance - var)});
  }
  {
    hpo::GPHyper h;
    h.lengthscales = {0.4, 0.7, 1.3, 0.9};
    h.signal_variance = 0.2;
    h.prior_mean = 0.5;
    const std::vector<hpo::Point> x = {{0.1, 0.2, 0.3, 0.4}, {0.6, 0.1, 0.9, 0.2}, {0.3, 0.8, 0.5, 0.7}};
    const std::vector<double> y = {0.42, 0.71, 0.55};
    const auto s = hpo::Surrogate::with_hyper(x, y, h);
    std::vector<std::vector<long double>> K(3, std::vector<long double>(3));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) K[i][j] = k52(x[i], x[j], h) + (i == j ? kJitter : 0);
    for (const hpo::Point& q : {hpo::Point{0.2, 0.4, 0.6, 0.5}, hpo::Point{0.9, 0.9, 0.1, 0.1}}) {
      std::vector<long double> kq(3), r(3);
      for (int i = 0; i < 3; ++i) {
        kq[i] = k52(x[i], q, h);
        r[i] = y[i] - h.prior_mean;
      }
      const auto alpha = dense_solve(K, r), beta = dense_solve(K, kq);
      long double mean = h.prior_mean, quad = 0;
      for (int i = 0; i < 3; ++i) {
        mean += kq[i] * alpha[i];
        quad += kq[i] * beta[i];
      }
      const auto p = s.posterior(q);
      worst = std::max({worst, double(std::abs(p.mean - mean)),
                        double(std::abs(p.variance - (h.signal_variance - quad)))});
    }
  }
  const double ei = hpo::expected_improvement(0.5, 1.0, 0.5, 0.0);
  const std::vector<hpo::Point> x = {{0.2, 0.2, 0.2, 0.2}, {0.8, 0.3, 0.6, 0.1}, {0.5, 0.9, 0.4, 0.6}};
  const auto s = hpo::Surrogate::fit(x, {0.4, 0.9, 0.6}, 1);
  const double ei_inc = hpo::expected_improvement(s, x[1], s.best_observed());
  return {worst <= 1e-8 && std::abs(ei - 0.39894) <= 1e-4 && ei_inc <= 1e-6,
          fmt("posterior max |err| %.1e (tol 1e-8); EI(mu=y*, s=1, xi=0) = %.5f; "
              "EI at incumbent %.1e",
              worst, ei, ei_inc),
          {}};
}

// ---- 6. constrained BO ------------------------------------------------------------

Outcome constrained_bo() {
  const auto t0 = Clock::now();
  cli::ExperimentConfig cfg = cli::with_eps(cli::desk_profile(), 5.0);
  cfg.threads = 1;
  const cli::Scenario sc = cli::build_scenario(cfg);
  const cli::NasOutcome nas = cli::run_nas(cfg, sc);
  const cli::HpoOutcome hpo = cli::run_hpo(cfg, sc, nas.genomes);
  int trained = 0, over = 0, mismatched = 0;
  double max_eps = 0;
  for (int k = 0; k < cfg.clients; ++k) {
    const auto shard = static_cast<int64_t>(sc.clients[k].nas.nas_train.size());
    for (const auto& r : hpo.results[k].trace) {
      if (!r.trained) continue;
      ++trained;
      // Independent recomputation: q = B / shard, epochs * ceil(shard / B) steps.
      privacy::DPConfig dp{.C = r.config.C, .sigma = r.config.sigma,
                           .q = double(r.config.B) / double(shard), .delta = cfg.delta};
      const int64_t steps = cfg.bo.plan.epochs * ((shard + r.config.B - 1) / r.config.B);
      const double eps = privacy::privacy_cost(dp, steps);
      max_eps = std::max(max_eps, eps);
      over += eps > 5.0;
      mismatched += std::abs(eps - r.eps_planned) > 1e-9 * std::max(1.0, eps);
    }
  }
  // Reference config (eta 0.001, sigma 1.92, C 0.5) at full-batch sampling: one step per epoch.
  const privacy::DPConfig ref{.C = 0.5, .sigma = 1.92, .q = 1.0, .delta = 1e-5};
  const double ref_eps = privacy::privacy_cost(ref, cfg.bo.plan.epochs);
  Outcome o;
  o.pass = trained > 0 && over == 0 && mismatched == 0 && ref_eps <= 5.0;
  o.detail = fmt("%d trained trials, %d over budget, %d logged costs disagree with the audit, "
                 "max eps %.3f; reference config costs eps %.3f over the %d-epoch plan; %.0f s",
                 trained, over, mismatched, max_eps, ref_eps, cfg.bo.plan.epochs, seconds_since(t0));
  o.notes.push_back(fmt("same config over a 5-epoch plan: eps %.3f", privacy::privacy_cost(ref, 5)));
  return o;
}

// ---- 7. pooled head objective ------------------------------------------------------------

// Cross-entropy of a linear head, written out: W is [classes, d] row-major,
// followed by the bias.
double oracle_loss(const std::vector<float>& p, int d, int classes, const fed::RepresentationBatch& b) {
  double total = 0;
  for (size_t i = 0; i < b.n(); ++i) {
    std::vector<double> logit(classes);
    for (int o = 0; o < classes; ++o) {
      double s = p[d * classes + o];
      for (int j = 0; j < d; ++j) s += double(p[o * d + j]) * b.z[i * d + j];
      logit[o] = s;
    }
    const double mx = *std::max_element(logit.begin(), logit.end());
    double z = 0;
    for (double l : logit) z += std::exp(l - mx);
    total += mx + std::log(z) - logit[b.y[i]];
  }
  return total;
}

Outcome pooled_head() {
  Rng rng(707);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + static_cast<int>(rng() % 16), classes = 2 + static_cast<int>(rng() % 9);
    const fed::Server s = fed::make_server(d, classes, 7000 + t);
    const int k = 1 + static_cast<int>(rng() % 6);
    std::vector<fed::RepresentationBatch> batches;
    std::normal_distribution<float> zd(0, 2);
    double total = 0, n = 0;
    for (int c = 0; c < k; ++c) {
      fed::RepresentationBatch b;
      b.client_id = c;
      b.d_rep = d;
      const int m = 1 + static_cast<int>(rng() % 60);
      b.m_k = m;
      for (int i = 0; i < m * d; ++i) b.z.push_back(zd(rng));
      for (int i = 0; i < m; ++i) b.y.push_back(static_cast<uint16_t>(rng() % classes));
      total += oracle_loss(s.head.params(), d, classes, b);
      n += m;
      batches.push_back(std::move(b));
    }
    const double pooled = fed::pooled_loss(s.head, batches);
    const double weighted = fed::weighted_client_loss(s.head, batches);
    worst = std::max({worst, std::abs(pooled - weighted), std::abs(pooled - total / n)});
  }
  return {worst <= 1e-6,
          fmt("100 fixtures: max |pooled - weighted| and |pooled - oracle| = %.2e (tol 1e-6)", worst),
          {}};
}

// ---- 8, 10, 12: the desk study ----------------------------------------------------------

struct SeedRun {
  uint64_t seed = 0;
  std::map<double, double> acc;            // final mean accuracy per eps
  std::map<double, std::optional<int>> rtt;
  std::map<double, double> diag_acc;       // as_tuned policy
  std::map<double, double> mse;            // attack
  bool attack_order = false;
  double main_secs = 0;
};

struct DeskStudy {
  std::vector<SeedRun> runs;
  int budget_checks = 0;
  int budget_violations = 0;
  int byte_checks = 0;
  int byte_mismatches = 0;
  double total_secs = 0;
};

void audit_reports(DeskStudy& st, const cli::TrainOutcome& t) {
  for (const auto& r : t.reports)
    for (const auto& c : r.clients) {
      const fed::ClientState& cs = t.clients[c.id];
      if (cs.uses_dp()) {
        ++st.budget_checks;
        st.budget_violations += !(c.eps_spent <= cs.eps_budget);
      }
      if (c.trained && c.bytes_up > 0) {
        ++st.byte_checks;
        const size_t n = cs.m_k(), d = static_cast<size_t>(cs.model.d_rep);
        st.byte_mismatches += c.bytes_up != n * d * 4 + n * 2;
      }
    }
}

const DeskStudy& desk_study() {
  static std::optional<DeskStudy> cached;
  if (cached) return *cached;
  DeskStudy st;
  const auto t_all = Clock::now();
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    SeedRun run;
    run.seed = seed;
    cli::ExperimentConfig cfg = cli::desk_profile();
    cfg.seed = seed;
    // Search results do not depend on the thread count.
    cfg.threads = static_cast<int>(std::min(4u, hw));
    cfg.attack.seeds = 1;
    const auto t0 = Clock::now();
    const cli::Scenario sc = cli::build_scenario(cfg);
    const cli::NasOutcome nas = cli::run_nas(cfg, sc);
    std::map<double, std::vector<nn::Network>> bottoms;
    for (double eps : {kInf, 5.0, 0.5}) {
      const cli::ExperimentConfig c = cli::with_eps(cfg, eps);
      const cli::TrainOutcome t = cli::run_train(c, sc, nas.genomes, cli::default_hypers(c));
      audit_reports(st, t);
      run.acc[eps] = t.summary["mean_acc"].get<double>();
      run.rtt[eps] = fed::rounds_to_target(t.reports, cfg.federation.target_acc);
      for (const auto& cl : t.clients) bottoms[eps].push_back(cl.model.bottom);
    }
    run.main_secs = seconds_since(t0);
    {
      const cli::ExperimentConfig c = cli::with_eps(cfg, 50.0);
      const cli::TrainOutcome t = cli::run_train(c, sc, nas.genomes, cli::default_hypers(c));
      audit_reports(st, t);
      for (const auto& cl : t.clients) bottoms[50.0].push_back(cl.model.bottom);
    }
    const cli::AttackOutcome a = cli::run_attack(cfg, sc, bottoms);
    for (const auto& r : a.reports) run.mse[r.eps] = r.mse;
    run.attack_order = a.ordering_holds == 1;
    for (double eps : {5.0, 0.5}) {
      cli::ExperimentConfig c = cli::with_eps(cfg, eps);
      c.federation.sigma_policy = "as_tuned";
      const cli::TrainOutcome t = cli::run_train(c, sc, nas.genomes, cli::default_hypers(c));
      audit_reports(st, t);
      run.diag_acc[eps] = t.summary["mean_acc"].get<double>();
    }
    run.diag_acc[kInf] = run.acc[kInf];
    std::fprintf(stderr, "  desk seed %lu done (%.0f s)\n", static_cast<unsigned long>(seed),
                 seconds_since(t_all));
    st.runs.push_back(run);
  }
  st.total_secs = seconds_since(t_all);
  cached = st;
  return *cached;
}

std::string rtt_str(const std::optional<int>& r) { return r ? std::to_string(*r) : "-"; }

Outcome desk_run() {
  const DeskStudy& st = desk_study();
  int reach = 0, ordered = 0, diag_ordered = 0;
  double secs = 0;
  Outcome o;
  for (const auto& r : st.runs) {
    const bool hit = r.rtt.at(kInf).has_value() && *r.rtt.at(kInf) <= 20 && r.acc.at(kInf) >= 0.9;
    reach += hit;
    const bool ord = r.acc.at(kInf) >= r.acc.at(5.0) && r.acc.at(5.0) >= r.acc.at(0.5);
    ordered += ord;
    diag_ordered += r.diag_acc.at(kInf) >= r.diag_acc.at(5.0) && r.diag_acc.at(5.0) >= r.diag_acc.at(0.5);
    secs += r.main_secs;
    o.notes.push_back(fmt("seed %lu: acc inf %.3f (0.9 at round %s), eps 5 %.3f, eps 0.5 %.3f -> %s",
                          static_cast<unsigned long>(r.seed), r.acc.at(kInf),
                          rtt_str(r.rtt.at(kInf)).c_str(), r.acc.at(5.0), r.acc.at(0.5),
                          ord ? "ordered" : "not ordered"));
  }
  o.notes.push_back(fmt("diagnostic, sigma_policy as_tuned: ordering in %d/5 seeds", diag_ordered));
  o.pass = reach == 5 && ordered >= 4 && secs < 600;
  o.detail = fmt("no DP reaches 0.90 within 20 rounds in %d/5 seeds; ordering inf >= 5 >= 0.5 "
                 "in %d/5 seeds (need 4); %.0f s",
                 reach, ordered, secs);
  return o;
}

// ---- 9. model size ----------------------------------------------------------------

Outcome model_size() {
  const space::SpaceConfig sp;  // default bounds, 32x32x3 input
  Rng rng(909);
  double worst_mb = 0;
  int over = 0, mismatched = 0;
  for (int i = 0; i < 100; ++i) {
    const space::Genome g = space::sample_random_genome(sp, rng);
    const nn::Model m = space::materialize(g, sp, rng);
    const double mb = m.param_count() * 4 / 1e6;
    worst_mb = std::max(worst_mb, mb);
    over += mb >= 2.0;
    mismatched += m.param_count() != space::param_count(g, sp);
  }
  return {over == 0 && mismatched == 0,
          fmt("100 random genomes: largest %.3f MB, %d at or above 2 MB", worst_mb, over), {}};
}

// ---- 10. communication accounting -------------------------------------------------------

Outcome communication() {
  fed::RepresentationBatch b;
  b.client_id = 3;
  b.d_rep = 128;
  b.m_k = 100;
  b.z.assign(100 * 128, 0.5f);
  b.y.assign(100, 1);
  const size_t up = fed::comm_bytes(b);
  const size_t framed = fed::serialize(b).size();
  const size_t head = fed::comm_bytes_head(1290);
  const size_t head_framed = fed::serialize_head(std::vector<float>(1290, 0.f)).size();
  const DeskStudy& st = desk_study();
  Outcome o;
  o.pass = up == 51400 && framed == fed::wire_bytes(b) && head == 5160 &&
           head_framed == fed::wire_bytes_head(1290) && st.byte_mismatches == 0 &&
           st.byte_checks > 0 && st.budget_violations == 0 && st.budget_checks > 0;
  o.detail = fmt("n=100, d_rep=128 -> %zu bytes up (framed %zu); desk runs: %d/%d uploads match "
                 "the formula, %d budget violations in %d ledger checks",
                 up, framed, st.byte_checks - st.byte_mismatches, st.byte_checks,
                 st.budget_violations, st.budget_checks);
  return o;
}

// ---- 11. bounds -------------------------------------------------------------------

Outcome bounds() {
  Rng rng(1111);
  double worst = 0;
  auto rel = [](double got, long double want) {
    return double(std::fabs(got - want) / std::max<long double>(1e-300, std::fabs(want)));
  };
  for (int i = 0; i < 100; ++i) {
    const analysis::ConvergenceConstants c = testing::random_constants(rng);
    const testing::Oracle o(c);
    const double loss0 = 2.3, S = 10.0 * (i + 1);
    worst = std::max(worst, rel(analysis::theorem1_rhs(c, loss0, S), o.theorem1(loss0, S)));
    worst = std::max(worst, rel(analysis::corollary1_rhs(c, loss0, S), o.corollary1(loss0, S)));
    worst = std::max(worst, rel(analysis::corollary2_avg_grad_bound(c), o.corollary2()));
    const analysis::EtaThetaBound et = analysis::max_eta_theta(c);
    if (o.max_eta_theta() >= 0)
      worst = std::max(worst, et.feasible ? rel(et.value, o.max_eta_theta()) : 1.0);
    else
      worst = std::max(worst, et.feasible || et.value != 0.0 ? 1.0 : 0.0);
    const auto w = analysis::check_eta_w(c);
    worst = std::max(worst, w.error.empty() ? rel(w.rhs, o.eta_w_rhs()) : 1.0);
  }
  Rng r2(1112);
  analysis::ConvergenceConstants c = testing::random_constants(r2);
  int non_decreasing = 0;
  double prev = kInf;
  for (double T = 1; T <= 1e6; T *= 1.5) {
    c.T = T;
    const double b = analysis::corollary2_avg_grad_bound(c);
    non_decreasing += !(b < prev);
    prev = b;
  }
  return {worst <= 1e-10 && non_decreasing == 0,
          fmt("100 random constant sets: max rel err %.1e (tol 1e-10); T sweep 1..1e6: %d "
              "non-decreasing steps",
              worst, non_decreasing),
          {}};
}

// ---- 12. attack ordering ------------------------------------------------------------

Outcome attack() {
  const DeskStudy& st = desk_study();
  int holds = 0;
  Outcome o;
  for (const auto& r : st.runs) {
    holds += r.attack_order;
    o.notes.push_back(fmt("seed %lu: MSE inf %.5f, 50 %.5f, 5 %.5f, 0.5 %.5f -> %s",
                          static_cast<unsigned long>(r.seed), r.mse.at(kInf), r.mse.at(50.0),
                          r.mse.at(5.0), r.mse.at(0.5), r.attack_order ? "ordered" : "not ordered"));
  }
  o.pass = holds >= 3;
  o.detail = fmt("MSE non-decreasing as eps decreases over {inf, 50, 5, 0.5} in %d/5 seeds (need 3); "
                 "desk study total %.0f s",
                 holds, st.total_secs);
  return o;
}

// ---- 13. determinism --------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the CLI in-process with stdout and stderr sent to /dev/null, so the
// bounds report and logged warnings stay out of the acceptance listing.
int run_cli(std::vector<std::string> args) {
  std::vector<const char*> argv = {"pfnas"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::fflush(stdout);
  std::fflush(stderr);
  const int out = ::dup(1), err = ::dup(2), null = ::open("/dev/null", O_WRONLY);
  ::dup2(null, 1);
  ::dup2(null, 2);
  const int rc = cli::run_app(static_cast<int>(argv.size()), argv.data());
  std::fflush(stdout);
  std::fflush(stderr);
  ::dup2(out, 1);
  ::dup2(err, 2);
  for (int fd : {out, err, null}) ::close(fd);
  return rc;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "pfnas_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "config.json") << R"({
    "profile": "desk", "seed": 13, "threads": 1, "clients": 3,
    "dataset": {"per_class": 40},
    "ga": {"population": 4, "generations": 2, "eval_epochs": 1},
    "bo": {"k_init": 2, "iterations": 2, "n_candidates": 64, "trial_epochs": 2},
    "eps": 5,
    "federation": {"rounds": 3},
    "attack": {"seeds": 2, "epochs": 3}
  })";
  const std::string sample = (fs::path(PFNAS_SOURCE_DIR) / "configs" / "bounds_sample.json").string();
  const std::vector<std::vector<std::string>> commands = {
      {"nas"},
      {"hpo"},
      {"train"},
      {"train", "--local-only"},
      {"attack", "--train-missing"},
      {"bounds", "--constants", sample, "--t-sweep", "10,100,1000"}};
  int failures = 0;
  for (const char* run : {"a", "b"})
    for (auto args : commands) {
      args.insert(args.end(), {"--config", (root / "config.json").string(), "--out",
                               (root / run).string(), "-q"});
      failures += run_cli(args) != 0;
    }
  int files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    const fs::path other = root / "b" / fs::relative(e.path(), root / "a");
    differing += !fs::exists(other) || slurp(e.path()) != slurp(other);
  }
  fs::remove_all(root);
  return {failures == 0 && files > 0 && differing == 0,
          fmt("6 subcommands run twice: %d CSV files compared, %d differ, %d non-zero exits", files,
              differing, failures),
          {}};
}

}  // namespace
}  // namespace pfnas::acceptance

int main(int argc, char** argv) {
  using namespace pfnas::acceptance;
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "gradient correctness", gradients},
      {2, "DP degeneracy", dp_degeneracy},
      {3, "accountant oracle", accountant},
      {4, "GA soundness", ga_soundness},
      {5, "GP/EI exactness", gp_ei},
      {6, "constrained BO safety", constrained_bo},
      {7, "pooled head objective", pooled_head},
      {8, "end-to-end desk run", desk_run},
      {9, "model-size regime", model_size},
      {10, "communication accounting", communication},
      {11, "bound calculators", bounds},
      {12, "privacy evaluator", attack},
      {13, "determinism", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int passed = 0, ran = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what(), {}};
    }
    passed += o.pass;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    for (const auto& n : o.notes) std::printf("         %s\n", n.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/%d criteria passed\n", passed, ran);
  return passed == ran ? 0 : 1;
}
