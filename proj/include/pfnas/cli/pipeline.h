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
#ifndef PFNAS_CLI_PIPELINE_H_
#define PFNAS_CLI_PIPELINE_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfnas/analysis/attack.h"
#include "pfnas/cli/config.h"
#include "pfnas/data/dataset.h"
#include "pfnas/evo/ga.h"
#include "pfnas/fed/federation.h"
#include "pfnas/hpo/bo.h"

namespace pfnas::cli {

// One client's slice of the dataset. shard = nas subsets + train + test.
struct ClientData {
  int id = 0;
  std::vector<size_t> shard;
  data::NasSplit nas;
  std::vector<size_t> train;  // federated training data
  std::vector<size_t> test;   // federated evaluation data
};

// Everything derived from (config, seed) before any training happens.
struct Scenario {
  data::Dataset data;
  std::vector<size_t> aux;  // attacker-side data, never given to a client
  data::PartitionPlan plan;
  std::vector<ClientData> clients;
  space::SpaceConfig space;
  std::vector<std::string> warnings;

  evo::NasData nas_data(int client) const;
};

Scenario build_scenario(const ExperimentConfig& cfg);

// ---- phase 1 ---------------------------------------------------------------

struct NasOutcome {
  std::vector<space::Genome> genomes;
  std::vector<evo::GAResult> results;
};

NasOutcome run_nas(const ExperimentConfig& cfg, const Scenario& sc);

// ---- phase 2 ---------------------------------------------------------------

// Tuned hyperparameters are carried by sampling rate, not batch size, so
// they transfer from the search subset to the (larger) federated shard.
struct ClientHyper {
  double eta = 0.05;
  double q = 0.1;
  double C = 1.0;
  double sigma = 1.0;

  hpo::HyperConfig for_shard(size_t m) const;
  bool operator==(const ClientHyper&) const = default;
};

nlohmann::json to_json(const ClientHyper& h);
ClientHyper hyper_from_json(const nlohmann::json& j);

struct HpoOutcome {
  std::vector<ClientHyper> hypers;
  std::vector<hpo::BOResult> results;
};

// Validation accuracy of genome g trained on the client's search subset with
// h for the trial plan, under the client's budget.
double hpo_trial(const ExperimentConfig& cfg, const Scenario& sc, int client,
                 const space::Genome& g, const hpo::HyperConfig& h, uint64_t trial_seed);

// InfeasibleError names the client whose budget admits no configuration.
HpoOutcome run_hpo(const ExperimentConfig& cfg, const Scenario& sc,
                   const std::vector<space::Genome>& genomes);

// ---- phase 3 ---------------------------------------------------------------

struct TrainOptions {
  bool local_only = false;
};

struct TrainOutcome {
  std::vector<fed::RoundReport> reports;
  std::vector<fed::ClientState> clients;
  nlohmann::json summary;
};

// Clients with sigma chosen by the configured sigma policy.
std::vector<fed::ClientState> make_clients(const ExperimentConfig& cfg, const Scenario& sc,
                                           const std::vector<space::Genome>& genomes,
                                           const std::vector<ClientHyper>& hypers);

TrainOutcome run_train(const ExperimentConfig& cfg, const Scenario& sc,
                       const std::vector<space::Genome>& genomes,
                       const std::vector<ClientHyper>& hypers, const TrainOptions& opt = {});

std::vector<space::Genome> default_genomes(const ExperimentConfig& cfg);
std::vector<ClientHyper> default_hypers(const ExperimentConfig& cfg);

// A copy of cfg with every client's budget set to eps.
ExperimentConfig with_eps(ExperimentConfig cfg, double eps);

// ---- privacy evaluation ----------------------------------------------------

struct AttackOutcome {
  std::vector<analysis::AttackReport> reports;  // one per (eps, seed)
  std::map<uint64_t, bool> ordering;             // per seed; empty for one eps
  int ordering_holds = 0;
};

// bottoms[eps] holds each client's trained bottom. Every client's federated
// training data is attacked with the shared auxiliary pool; a report's MSE
// is the mean over clients.
AttackOutcome run_attack(const ExperimentConfig& cfg, const Scenario& sc,
                         const std::map<double, std::vector<nn::Network>>& bottoms);

// ---- artifacts -------------------------------------------------------------

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

void write_model(const std::filesystem::path& path, const nn::Model& m);
// Rebuilds the architecture from genome and space, then loads parameters.
nn::Model read_model(const std::filesystem::path& path, const space::Genome& g,
                     const space::SpaceConfig& space);

// Written when a command starts and finalized when it ends.
class RunManifest {
 public:
  RunManifest(std::filesystem::path dir, const ExperimentConfig& cfg, std::string command);
  void add_artifact(const std::filesystem::path& p);
  void finish(const std::string& status);

 private:
  void write() const;

  std::filesystem::path dir_;
  nlohmann::json doc_;
};

}  // namespace pfnas::cli

#endif  // PFNAS_CLI_PIPELINE_H_
