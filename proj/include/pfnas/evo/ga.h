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

#ifndef PFNAS_EVO_GA_H_
#define PFNAS_EVO_GA_H_

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pfnas/common/rng.h"
#include "pfnas/data/dataset.h"
#include "pfnas/space/search_space.h"

namespace pfnas::evo {

struct GAConfig {
  int pop_size = 10;
  int generations = 20;
  double p_cross = 0.9;
  double p_mut = 0.2;
  int eval_epochs = 5;
  double eval_lr = 0.05;
  int eval_batch = 32;
  // Worker threads for fitness evaluation. Evaluation seeds depend only on
  // the genome, so the trajectory does not depend on this value.
  int threads = 1;

  void validate() const;
};

struct Individual {
  space::Genome genome;
  std::optional<double> fitness;
  uint64_t eval_seed = 0;
  size_t param_count = 0;
};

using Population = std::vector<Individual>;

// Fitness of a genome under a given evaluation seed. Must be thread-safe
// when GAConfig::threads > 1.
using FitnessFn = std::function<double(const space::Genome&, uint64_t eval_seed)>;

// N valid genomes, distinct by hash where the space allows it (100 re-draws
// per slot before a duplicate is accepted).
Population init_population(const GAConfig& cfg, const space::SpaceConfig& space, Rng& rng);

struct NasData {
  data::Dataset train;
  data::Dataset val;
};

// Trains materialize(g) for cfg.eval_epochs epochs of plain mini-batch SGD
// on nas.train and returns top-1 accuracy on nas.val. A non-finite loss or
// activation yields 0 and appends a warning.
double evaluate_fitness(const space::Genome& g, const NasData& nas,
                        const space::SpaceConfig& space, const GAConfig& cfg,
                        uint64_t eval_seed, std::vector<std::string>* warnings = nullptr);

// Memoizes a FitnessFn by (genome hash, eval seed). Thread-safe.
class FitnessCache {
 public:
  explicit FitnessCache(FitnessFn fn) : fn_(std::move(fn)) {}
  double operator()(const space::Genome& g, uint64_t eval_seed);
  size_t hits() const;
  size_t misses() const;

 private:
  FitnessFn fn_;
  mutable std::mutex mu_;
  std::map<std::pair<uint64_t, uint64_t>, double> values_;
  size_t hits_ = 0;
};

// Binary tournament: two distinct individuals drawn uniformly, higher
// fitness wins; ties go to the smaller param_count, then to a coin flip.
const Individual& tournament_select(const Population& pop, Rng& rng);

struct CrossoverInfo {
  int draws = 0;
  bool returned_parents = false;
};

// One-point crossover with an independent cut per parent, c in [1, len - 1].
// Invalid children are re-drawn up to 10 times before the parents come back
// unchanged; a length-1 parent has no cut and always returns the parents.
std::pair<space::Genome, space::Genome> crossover(const space::Genome& p1,
                                                  const space::Genome& p2,
                                                  const space::SpaceConfig& space, Rng& rng,
                                                  CrossoverInfo* info = nullptr);

// Splice with explicit cut points; no validity check.
std::pair<space::Genome, space::Genome> splice(const space::Genome& p1,
                                               const space::Genome& p2, size_t c1, size_t c2);

enum class MutationOp { kAdd, kRemove, kAlter, kExchange };

const char* mutation_name(MutationOp op);

// Operators whose length precondition holds for g.
std::vector<MutationOp> legal_mutations(const space::Genome& g, const space::SpaceConfig& space);

// One application of op at random positions; may produce an invalid genome.
space::Genome apply_mutation(const space::Genome& g, MutationOp op, Rng& rng);

// Uniform legal operator; the result is re-drawn up to 10 times until valid,
// else g is returned. `applied` receives the operator of the returned genome
// or nullopt when g came back.
space::Genome mutate(const space::Genome& g, const space::SpaceConfig& space, Rng& rng,
                     std::optional<MutationOp>* applied = nullptr);

// Index i with probability w_i / sum(w); negative weights count as 0.
// Returns nullopt when every weight is 0.
std::optional<size_t> roulette_pick(std::span<const double> weights, Rng& rng);

struct SelectionInfo {
  bool uniform_fallback = false;
  bool elitism_fired = false;
};

// Roulette without replacement: each draw picks i with probability
// f_i / sum(remaining f). If the pool's best is not drawn it replaces the
// lowest-fitness survivor. All-zero remaining fitness draws uniformly.
Population environmental_select(const Population& pool, int n, Rng& rng,
                                SelectionInfo* info = nullptr);

struct GenerationRecord {
  int gen = 0;
  double best_acc = 0.0;
  double mean_acc = 0.0;
  std::string best_genome;
};

struct GAResult {
  space::Genome best;
  double best_fitness = 0.0;
  std::vector<GenerationRecord> log;
  std::vector<std::string> warnings;
  size_t evaluations = 0;
  size_t cache_hits = 0;
};

// Generation 0 is the evaluated initial population; each of the T_g
// generations breeds N offspring (tournament, crossover with p_cross else
// copies, mutation with p_mut) and keeps N of the 2N pool. Returns the
// all-time best.
GAResult run_ga(const GAConfig& cfg, const space::SpaceConfig& space, const FitnessFn& fitness,
                Rng& rng);

// gen,best_acc,mean_acc,best_genome
std::string generations_csv(const std::vector<GenerationRecord>& log);

}  // namespace pfnas::evo

#endif  // PFNAS_EVO_GA_H_
