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

#ifndef PFNAS_FED_FEDERATION_H_
#define PFNAS_FED_FEDERATION_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pfnas/common/rng.h"
#include "pfnas/data/dataset.h"
#include "pfnas/fed/wire.h"
#include "pfnas/hpo/bo.h"
#include "pfnas/nn/network.h"
#include "pfnas/privacy/accountant.h"
#include "pfnas/space/search_space.h"

namespace pfnas::fed {

struct ClientState {
  int id = 0;
  space::Genome genome;
  nn::Model model;
  hpo::HyperConfig hyper;
  data::Dataset train;  // the local shard used for training and upload
  data::Dataset test;   // held out for per-client evaluation
  double eps_budget = privacy::kInfinity;
  privacy::PrivacyLedger ledger{privacy::DPConfig{}};
  bool trained = false;

  size_t m_k() const { return train.size(); }
  bool uses_dp() const { return eps_budget != privacy::kInfinity; }
};

// Materializes the genome and opens a ledger at q = B / m_k.
ClientState make_client(int id, const space::Genome& genome, const space::SpaceConfig& space,
                        const hpo::HyperConfig& hyper, data::Dataset train, data::Dataset test,
                        double eps_budget, double delta, uint64_t seed);

// DP-SGD steps for E local epochs: E * ceil(m_k / B).
int64_t planned_steps(const ClientState& c, int epochs);

struct LocalTrainResult {
  int64_t steps = 0;
  double mean_loss = 0.0;
};

// E epochs over the shard. Under DP each step draws a uniform batch of B
// without replacement and runs dp_sgd_step on bottom and head jointly;
// without a budget it runs plain SGD over a shuffled pass. Throws
// BudgetExhausted, before any step, when the ledger cannot afford all E
// epochs.
LocalTrainResult local_train(ClientState& c, int epochs, Rng& rng);

// Forward of the bottom over the whole training shard. Never touches the
// ledger.
RepresentationBatch emit_representations(const ClientState& c);

struct Server {
  nn::Network head;
  int d_rep = 0;
  int num_classes = 0;
};

Server make_server(int d_rep, int num_classes, uint64_t seed);

struct HeadTrainConfig {
  int epochs = 5;
  double eta = 0.01;
  int batch = 64;
};

// sum_k (m_k / m) * (mean loss of the head on client k's batch), with
// m = sum_k m_k over the given batches.
double weighted_client_loss(const nn::Network& head, const std::vector<RepresentationBatch>& b);
// Mean loss over all samples pooled with equal weight.
double pooled_loss(const nn::Network& head, const std::vector<RepresentationBatch>& b);

// Mini-batch SGD on the pooled samples for cfg.epochs passes; returns the
// final pooled loss. Throws ShapeError naming the clients whose d_rep
// differs from the server's.
double aggregate_and_update_head(Server& server, const std::vector<RepresentationBatch>& batches,
                                 const HeadTrainConfig& cfg, Rng& rng);

// Sends the head to every client through the wire encoding; bottoms are not
// touched. Returns the bytes sent per client.
size_t broadcast(const Server& server, std::vector<ClientState>& clients);

struct RoundPlan {
  int rounds = 20;
  int local_epochs = 1;
  double participation = 1.0;
  HeadTrainConfig head;
  int threads = 1;
  // Skip upload, aggregation and broadcast: every client trains alone.
  bool local_only = false;
};

// Smallest noise multiplier that lets the client finish the whole plan
// within its budget when it participates every round; 0 without a budget.
double sigma_for_plan(const ClientState& c, const RoundPlan& plan);

struct ClientRound {
  int id = 0;
  bool participated = false;
  bool trained = false;
  std::string skip_reason;
  double test_acc = 0.0;
  double loss = 0.0;  // mean local training loss this round
  double eps_spent = 0.0;
  size_t bytes_up = 0;
  size_t bytes_down = 0;
};

struct RoundReport {
  int round = 0;
  std::vector<ClientRound> clients;
  double mean_acc = 0.0;
  double std_acc = 0.0;
  size_t bytes_up = 0;
  size_t bytes_down = 0;
  double head_loss = 0.0;
  int trained_clients = 0;

  nlohmann::json to_json() const;
};

// Budget-safety check: throws pfnas::Error if any ledger has overspent.
void assert_budgets(const std::vector<ClientState>& clients);

// First round whose mean accuracy reaches target, or nullopt.
std::optional<int> rounds_to_target(const std::vector<RoundReport>& reports, double target);

// Rounds 1..T: sample participants, train them (in parallel when
// plan.threads > 1), upload, train the head, broadcast, evaluate every
// client. The head is broadcast once before round 1 so all clients start
// from the same theta. A failing client is skipped for the round.
// Single-threaded runs are bit-deterministic; so are threaded ones, since
// every client draws from its own (client, round) stream.
std::vector<RoundReport> run_rounds(const RoundPlan& plan, std::vector<ClientState>& clients,
                                    Server& server, Rng& rng);

// round,client,val_acc,loss,eps_spent,bytes_up,bytes_down
// val_acc is top-1 on the client's held-out split; loss is blank for
// clients that did not train.
std::string rounds_csv(const std::vector<RoundReport>& reports);

}  // namespace pfnas::fed

#endif  // PFNAS_FED_FEDERATION_H_
