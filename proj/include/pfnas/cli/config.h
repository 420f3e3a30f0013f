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
#ifndef PFNAS_CLI_CONFIG_H_
#define PFNAS_CLI_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfnas/analysis/attack.h"
#include "pfnas/data/dataset.h"
#include "pfnas/evo/ga.h"
#include "pfnas/hpo/bo.h"
#include "pfnas/space/search_space.h"

namespace pfnas::cli {

struct DatasetConfig {
  std::string kind = "synth";  // synth | cifar10 | cifar100
  std::string path;            // CIFAR binary file for the cifar kinds
  data::SynthSpec synth;
  // Held back from every client as the attacker's auxiliary data.
  double aux_fraction = 0.1;
  // Share of each client's federated data held out for evaluation.
  double test_fraction = 0.2;
};

struct PartitionConfig {
  std::string scheme = "dirichlet";  // dirichlet | class_subset
  double alpha = 0.1;
  int classes_per_client = 2;
  double skew = 1.0;
  // Dirichlet draws are repeated until every client holds this many samples.
  size_t min_client_size = 20;
};

struct FederationConfig {
  int rounds = 20;
  int local_epochs = 2;
  double participation = 1.0;
  int head_epochs = 5;
  double eta_theta = 0.01;
  int head_batch = 64;
  double target_acc = 0.9;
  // fit_plan raises a tuned sigma until the whole training plan fits the
  // client's budget; as_tuned keeps it and lets the ledger stop a client whose
  // budget runs dry (it then skips the remaining rounds).
  std::string sigma_policy = "fit_plan";
};

// Used by `train --no-nas` / `--no-hpo` and as the fallback architecture.
struct Defaults {
  std::string genome = "C3x16";
  double eta = 0.05;
  double q = 0.1;  // sampling rate; B = round(q * m_k)
  double C = 1.0;
  double sigma = 1.0;
};

struct AttackConfig {
  std::vector<double> eps = {std::numeric_limits<double>::infinity(), 50, 5, 0.5};
  int seeds = 5;
  analysis::DecoderConfig decoder;
  // eps label -> train output directory holding models/.
  std::map<std::string, std::string> runs;
};

struct ExperimentConfig {
  std::string profile = "desk";
  uint64_t seed = 1;
  int threads = 1;
  std::string output_dir = "runs/desk";
  DatasetConfig dataset;
  PartitionConfig partition;
  int clients = 5;
  // One entry applies to every client; otherwise one per client.
  std::vector<double> eps = {std::numeric_limits<double>::infinity()};
  double delta = 1e-5;
  data::NasSizes nas_split;
  space::SpaceConfig space;  // input and num_classes follow the dataset
  evo::GAConfig ga;
  hpo::BOConfig bo;
  hpo::SearchDomain domain;
  FederationConfig federation;
  Defaults defaults;
  AttackConfig attack;

  double eps_for(int client) const;
  // Throws InvalidArgument naming the offending key.
  void validate() const;
};

ExperimentConfig desk_profile();
ExperimentConfig paper_profile();
ExperimentConfig profile_by_name(const std::string& name);

// Strict: starts from the named profile (default desk) and applies the
// document on top; unknown keys anywhere are rejected with their path.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& c);

// FNV-1a of the canonical JSON dump minus output_dir and threads; stable
// across runs and platforms.
std::string config_hash(const ExperimentConfig& c);

// "inf" for infinity, %g otherwise; the label used in file names and CSVs.
std::string eps_label(double eps);
double parse_eps(const nlohmann::json& j);

}  // namespace pfnas::cli

#endif  // PFNAS_CLI_CONFIG_H_
