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

#include "pfnas/evo/ga.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "pfnas/common/error.h"
#include "pfnas/nn/network.h"

namespace pfnas::evo {
namespace {

constexpr int kInitRetries = 100;
constexpr int kOperatorRetries = 10;

bool is_valid(const space::Genome& g, const space::SpaceConfig& space) {
  return validate_genome(g, space).empty();
}

double fitness_of(const Individual& ind) {
  if (!ind.fitness) throw InvalidArgument("individual " + space::encode(ind.genome) +
                                          " has not been evaluated");
  return *ind.fitness;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void GAConfig::validate() const {
  if (pop_size < 2 || pop_size % 2 != 0)
    throw InvalidArgument("pop_size must be even and >= 2");
  if (generations < 0) throw InvalidArgument("generations must be >= 0");
  if (!(p_cross >= 0 && p_cross <= 1) || !(p_mut >= 0 && p_mut <= 1))
    throw InvalidArgument("crossover and mutation probabilities must be in [0, 1]");
  if (eval_epochs < 0) throw InvalidArgument("eval_epochs must be >= 0");
  if (!(eval_lr > 0)) throw InvalidArgument("eval_lr must be > 0");
  if (eval_batch < 1) throw InvalidArgument("eval_batch must be >= 1");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

Population init_population(const GAConfig& cfg, const space::SpaceConfig& space, Rng& rng) {
  cfg.validate();
  space.validate();
  Population pop;
  std::set<uint64_t> seen;
  for (int i = 0; i < cfg.pop_size; ++i) {
    space::Genome g = space::sample_random_genome(space, rng);
    for (int t = 0; t < kInitRetries && seen.count(space::genome_hash(g)); ++t)
      g = space::sample_random_genome(space, rng);
    seen.insert(space::genome_hash(g));
    Individual ind;
    ind.genome = std::move(g);
    ind.param_count = space::param_count(ind.genome, space);
    pop.push_back(std::move(ind));
  }
  return pop;
}

double evaluate_fitness(const space::Genome& g, const NasData& nas,
                        const space::SpaceConfig& space, const GAConfig& cfg,
                        uint64_t eval_seed, std::vector<std::string>* warnings) {
  nas.train.validate();
  nas.val.validate();
  Rng rng(eval_seed);
  nn::Model model = space::materialize(g, space, rng);
  const size_t n = nas.train.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  try {
    for (int epoch = 0; epoch < cfg.eval_epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (size_t start = 0; start < n; start += cfg.eval_batch) {
        const size_t end = std::min(n, start + static_cast<size_t>(cfg.eval_batch));
        const std::span<const size_t> idx(order.data() + start, end - start);
        const nn::Tensor x = nn::gather_rows(nas.train.images, idx);
        const std::vector<int> y = nas.train.labels_at(idx);
        const nn::BatchGradient bg = nn::batch_gradient(model, x, y);
        if (!std::isfinite(bg.mean_loss)) throw NonFiniteError("non-finite training loss");
        std::vector<float> p = model.params();
        for (size_t i = 0; i < p.size(); ++i) p[i] -= static_cast<float>(cfg.eval_lr) * bg.grad[i];
        model.set_params(p);
      }
    }
    return nn::accuracy(model, nas.val.images, nas.val.labels);
  } catch (const NonFiniteError& e) {
    if (warnings)
      warnings->push_back("fitness of " + space::encode(g) + " set to 0: " + e.what());
    return 0.0;
  }
}

double FitnessCache::operator()(const space::Genome& g, uint64_t eval_seed) {
  const auto key = std::make_pair(space::genome_hash(g), eval_seed);
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = values_.find(key); it != values_.end()) {
      ++hits_;
      return it->second;
    }
  }
  const double v = fn_(g, eval_seed);
  std::lock_guard<std::mutex> lock(mu_);
  values_.emplace(key, v);
  return v;
}

size_t FitnessCache::hits() const {
  std::lock_guard<std::mutex> lock(mu_);
  return hits_;
}

size_t FitnessCache::misses() const {
  std::lock_guard<std::mutex> lock(mu_);
  return values_.size();
}

const Individual& tournament_select(const Population& pop, Rng& rng) {
  if (pop.size() < 2) throw InvalidArgument("tournament needs at least 2 individuals");
  const size_t i = std::uniform_int_distribution<size_t>(0, pop.size() - 1)(rng);
  size_t j = std::uniform_int_distribution<size_t>(0, pop.size() - 2)(rng);
  if (j >= i) ++j;
  const Individual& a = pop[i];
  const Individual& b = pop[j];
  const double fa = fitness_of(a), fb = fitness_of(b);
  if (fa != fb) return fa > fb ? a : b;
  if (a.param_count != b.param_count) return a.param_count < b.param_count ? a : b;
  return std::bernoulli_distribution(0.5)(rng) ? a : b;
}

std::pair<space::Genome, space::Genome> splice(const space::Genome& p1,
                                               const space::Genome& p2, size_t c1, size_t c2) {
  space::Genome a, b;
  a.blocks.assign(p1.blocks.begin(), p1.blocks.begin() + c1);
  a.blocks.insert(a.blocks.end(), p2.blocks.begin() + c2, p2.blocks.end());
  b.blocks.assign(p2.blocks.begin(), p2.blocks.begin() + c2);
  b.blocks.insert(b.blocks.end(), p1.blocks.begin() + c1, p1.blocks.end());
  return {std::move(a), std::move(b)};
}

std::pair<space::Genome, space::Genome> crossover(const space::Genome& p1,
                                                  const space::Genome& p2,
                                                  const space::SpaceConfig& space, Rng& rng,
                                                  CrossoverInfo* info) {
  CrossoverInfo local;
  CrossoverInfo& out = info ? *info : local;
  out = {};
  if (p1.size() < 2 || p2.size() < 2) {
    out.returned_parents = true;
    return {p1, p2};
  }
  std::uniform_int_distribution<size_t> cut1(1, p1.size() - 1), cut2(1, p2.size() - 1);
  for (int t = 0; t < kOperatorRetries; ++t) {
    ++out.draws;
    const size_t c1 = cut1(rng);
    const size_t c2 = cut2(rng);
    auto children = splice(p1, p2, c1, c2);
    if (is_valid(children.first, space) && is_valid(children.second, space)) return children;
  }
  out.returned_parents = true;
  return {p1, p2};
}

const char* mutation_name(MutationOp op) {
  switch (op) {
    case MutationOp::kAdd: return "add";
    case MutationOp::kRemove: return "remove";
    case MutationOp::kAlter: return "alter";
    case MutationOp::kExchange: return "exchange";
  }
  return "?";
}

std::vector<MutationOp> legal_mutations(const space::Genome& g,
                                        const space::SpaceConfig& space) {
  std::vector<MutationOp> ops;
  const int len = static_cast<int>(g.size());
  if (len < space.max_len) ops.push_back(MutationOp::kAdd);
  if (len > space.min_len) ops.push_back(MutationOp::kRemove);
  if (len >= 1) ops.push_back(MutationOp::kAlter);
  if (len >= 2) ops.push_back(MutationOp::kExchange);
  return ops;
}

space::Genome apply_mutation(const space::Genome& g, MutationOp op, Rng& rng) {
  space::Genome out = g;
  auto& b = out.blocks;
  auto pos = [&](size_t hi) { return std::uniform_int_distribution<size_t>(0, hi)(rng); };
  switch (op) {
    case MutationOp::kAdd: {
      const size_t at = pos(b.size());
      b.insert(b.begin() + at, space::sample_gene(true, rng));
      break;
    }
    case MutationOp::kRemove:
      if (!b.empty()) b.erase(b.begin() + pos(b.size() - 1));
      break;
    case MutationOp::kAlter: {
      if (b.empty()) break;
      // The new configuration is uniform over those of the same kind that
      // differ from the current one.
      space::BlockGene& gene = b[pos(b.size() - 1)];
      std::vector<space::BlockGene> options;
      if (gene.is_conv()) {
        for (int k : space::kKernelChoices)
          for (int c : space::kChannelChoices) options.push_back(space::BlockGene::conv(k, c));
      } else {
        for (nn::PoolType t : space::kPoolChoices) options.push_back(space::BlockGene::pooling(t));
      }
      std::erase(options, gene);
      gene = options[pos(options.size() - 1)];
      break;
    }
    case MutationOp::kExchange: {
      if (b.size() < 2) break;
      const size_t i = pos(b.size() - 1);
      size_t j = pos(b.size() - 2);
      if (j >= i) ++j;
      std::swap(b[i], b[j]);
      break;
    }
  }
  return out;
}

space::Genome mutate(const space::Genome& g, const space::SpaceConfig& space, Rng& rng,
                     std::optional<MutationOp>* applied) {
  if (applied) applied->reset();
  const auto ops = legal_mutations(g, space);
  if (ops.empty()) return g;
  std::uniform_int_distribution<size_t> pick(0, ops.size() - 1);
  for (int t = 0; t < kOperatorRetries; ++t) {
    const MutationOp op = ops[pick(rng)];
    space::Genome m = apply_mutation(g, op, rng);
    if (is_valid(m, space)) {
      if (applied) *applied = op;
      return m;
    }
  }
  return g;
}

std::optional<size_t> roulette_pick(std::span<const double> weights, Rng& rng) {
  double total = 0;
  for (double w : weights) total += std::max(0.0, w);
  if (!(total > 0)) return std::nullopt;
  const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0;
  size_t last = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    last = i;
    acc += weights[i];
    if (r < acc) return i;
  }
  // r can reach the rounded total; the last positive weight owns that edge.
  return last;
}

Population environmental_select(const Population& pool, int n, Rng& rng, SelectionInfo* info) {
  SelectionInfo local;
  SelectionInfo& out = info ? *info : local;
  out = {};
  if (n < 1 || static_cast<size_t>(n) > pool.size())
    throw InvalidArgument("environmental selection needs 1 <= N <= pool size");
  std::vector<double> f;
  for (const Individual& ind : pool) f.push_back(fitness_of(ind));
  const size_t best = std::max_element(f.begin(), f.end()) - f.begin();

  std::vector<size_t> remaining(pool.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<size_t> chosen;
  for (int d = 0; d < n; ++d) {
    std::vector<double> w;
    for (size_t i : remaining) w.push_back(f[i]);
    std::optional<size_t> pick = roulette_pick(w, rng);
    if (!pick) {
      out.uniform_fallback = true;
      pick = std::uniform_int_distribution<size_t>(0, remaining.size() - 1)(rng);
    }
    const size_t slot = *pick;
    chosen.push_back(remaining[slot]);
    remaining.erase(remaining.begin() + slot);
  }
  if (std::find(chosen.begin(), chosen.end(), best) == chosen.end()) {
    out.elitism_fired = true;
    auto worst = std::min_element(chosen.begin(), chosen.end(),
                                  [&](size_t a, size_t b) { return f[a] < f[b]; });
    *worst = best;
  }
  Population next;
  for (size_t i : chosen) next.push_back(pool[i]);
  return next;
}

namespace {

// Fills in missing fitness values, evaluating distinct genomes on up to
// `threads` workers. Results land in the cache keyed by genome, so the
// outcome is independent of scheduling.
void evaluate_all(Population& pop, FitnessCache& cache, uint64_t root, int threads) {
  for (Individual& ind : pop) ind.eval_seed = derive_seed(root, {space::genome_hash(ind.genome)});
  if (threads > 1) {
    std::vector<const Individual*> todo;
    std::set<uint64_t> queued;
    for (const Individual& ind : pop)
      if (!ind.fitness && queued.insert(space::genome_hash(ind.genome)).second)
        todo.push_back(&ind);
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    for (int t = 0; t < std::min<int>(threads, todo.size()); ++t)
      workers.emplace_back([&] {
        for (size_t k; (k = next++) < todo.size();) cache(todo[k]->genome, todo[k]->eval_seed);
      });
    for (auto& w : workers) w.join();
  }
  for (Individual& ind : pop)
    if (!ind.fitness) ind.fitness = cache(ind.genome, ind.eval_seed);
}

GenerationRecord summarize(int gen, const Population& pop) {
  GenerationRecord r;
  r.gen = gen;
  const Individual* best = &pop[0];
  double sum = 0;
  for (const Individual& ind : pop) {
    sum += *ind.fitness;
    if (*ind.fitness > *best->fitness) best = &ind;
  }
  r.best_acc = *best->fitness;
  r.mean_acc = sum / pop.size();
  r.best_genome = space::encode(best->genome);
  return r;
}

}  // namespace

GAResult run_ga(const GAConfig& cfg, const space::SpaceConfig& space, const FitnessFn& fitness,
                Rng& rng) {
  cfg.validate();
  const uint64_t root = rng();
  FitnessCache cache(fitness);
  GAResult result;

  Population pop = init_population(cfg, space, rng);
  evaluate_all(pop, cache, root, cfg.threads);
  result.best_fitness = -1.0;
  auto track_best = [&](const Population& p) {
    for (const Individual& ind : p)
      if (*ind.fitness > result.best_fitness) {
        result.best = ind.genome;
        result.best_fitness = *ind.fitness;
      }
  };
  track_best(pop);
  result.log.push_back(summarize(0, pop));

  std::bernoulli_distribution do_cross(cfg.p_cross), do_mut(cfg.p_mut);
  for (int gen = 1; gen <= cfg.generations; ++gen) {
    Population offspring;
    while (offspring.size() < static_cast<size_t>(cfg.pop_size)) {
      const Individual& a = tournament_select(pop, rng);
      const Individual& b = tournament_select(pop, rng);
      std::pair<space::Genome, space::Genome> kids{a.genome, b.genome};
      if (do_cross(rng)) kids = crossover(a.genome, b.genome, space, rng);
      for (space::Genome* k : {&kids.first, &kids.second}) {
        if (offspring.size() == static_cast<size_t>(cfg.pop_size)) break;
        if (do_mut(rng)) *k = mutate(*k, space, rng);
        Individual child;
        child.genome = std::move(*k);
        child.param_count = space::param_count(child.genome, space);
        offspring.push_back(std::move(child));
      }
    }
    evaluate_all(offspring, cache, root, cfg.threads);
    Population pool = pop;
    pool.insert(pool.end(), offspring.begin(), offspring.end());
    SelectionInfo info;
    pop = environmental_select(pool, cfg.pop_size, rng, &info);
    if (info.uniform_fallback)
      result.warnings.push_back("generation " + std::to_string(gen) +
                                ": all-zero fitness, uniform survivor draw");
    track_best(pop);
    result.log.push_back(summarize(gen, pop));
  }
  result.evaluations = cache.misses();
  result.cache_hits = cache.hits();
  return result;
}

std::string generations_csv(const std::vector<GenerationRecord>& log) {
  std::ostringstream out;
  out << "gen,best_acc,mean_acc,best_genome\n";
  for (const auto& r : log)
    out << r.gen << ',' << fmt_double(r.best_acc) << ',' << fmt_double(r.mean_acc) << ','
        << r.best_genome << '\n';
  return out.str();
}

}  // namespace pfnas::evo
