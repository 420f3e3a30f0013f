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

#include "pfnas/fed/federation.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

#include "pfnas/common/error.h"
#include "pfnas/privacy/dp_sgd.h"

namespace pfnas::fed {
namespace {

privacy::DPConfig client_dp(const hpo::HyperConfig& h, size_t m_k, double delta) {
  return {.C = h.C,
          .sigma = h.sigma,
          .q = std::min(1.0, static_cast<double>(h.B) / static_cast<double>(m_k)),
          .delta = delta};
}

nn::Tensor pooled_inputs(const std::vector<RepresentationBatch>& batches, int d_rep,
                         std::vector<int>* labels) {
  size_t n = 0;
  for (const auto& b : batches) n += b.n();
  nn::Tensor x({static_cast<int>(n), d_rep});
  size_t at = 0;
  for (const auto& b : batches) {
    std::copy(b.z.begin(), b.z.end(), x.values().begin() + at);
    at += b.z.size();
    labels->insert(labels->end(), b.y.begin(), b.y.end());
  }
  return x;
}

nn::Tensor batch_inputs(const RepresentationBatch& b) {
  return nn::Tensor({static_cast<int>(b.n()), static_cast<int>(b.d_rep)}, b.z);
}

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

ClientState make_client(int id, const space::Genome& genome, const space::SpaceConfig& space,
                        const hpo::HyperConfig& hyper, data::Dataset train, data::Dataset test,
                        double eps_budget, double delta, uint64_t seed) {
  hyper.validate();
  train.validate();
  test.validate();
  ClientState c;
  c.id = id;
  c.genome = genome;
  Rng rng(seed);
  c.model = space::materialize(genome, space, rng);
  c.hyper = hyper;
  c.hyper.B = std::min<int>(hyper.B, static_cast<int>(train.size()));
  c.train = std::move(train);
  c.test = std::move(test);
  c.eps_budget = eps_budget;
  c.ledger = privacy::PrivacyLedger(client_dp(c.hyper, c.m_k(), delta), eps_budget);
  return c;
}

int64_t planned_steps(const ClientState& c, int epochs) {
  const int64_t m = static_cast<int64_t>(c.m_k());
  return static_cast<int64_t>(epochs) * ((m + c.hyper.B - 1) / c.hyper.B);
}

LocalTrainResult local_train(ClientState& c, int epochs, Rng& rng) {
  if (epochs < 0) throw InvalidArgument("local epochs must be >= 0");
  LocalTrainResult r;
  if (epochs == 0) return r;
  const int64_t steps = planned_steps(c, epochs);
  const size_t m = c.m_k();
  double loss_sum = 0;
  if (c.uses_dp()) {
    if (!c.ledger.can_take(steps))
      throw BudgetExhausted("client " + std::to_string(c.id) + " cannot afford " +
                            std::to_string(steps) + " more steps (spent " +
                            std::to_string(c.ledger.eps_spent()) + " of " +
                            std::to_string(c.eps_budget) + ")");
    const privacy::DPConfig& dp = c.ledger.config();
    for (int64_t s = 0; s < steps; ++s) {
      const std::vector<size_t> idx = privacy::sample_batch(m, dp.q, rng);
      const nn::Tensor x = nn::gather_rows(c.train.images, idx);
      const std::vector<int> y = c.train.labels_at(idx);
      loss_sum += privacy::dp_sgd_step(c.model, x, y, dp, c.hyper.eta, rng, &c.ledger).mean_loss;
    }
  } else {
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    const size_t B = static_cast<size_t>(c.hyper.B);
    for (int e = 0; e < epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      for (size_t start = 0; start < m; start += B) {
        const std::span<const size_t> idx(order.data() + start, std::min(B, m - start));
        const nn::Tensor x = nn::gather_rows(c.train.images, idx);
        const std::vector<int> y = c.train.labels_at(idx);
        const nn::BatchGradient g = nn::batch_gradient(c.model, x, y);
        if (!std::isfinite(g.mean_loss))
          throw NonFiniteError("client " + std::to_string(c.id) + ": non-finite loss");
        std::vector<float> p = c.model.params();
        for (size_t i = 0; i < p.size(); ++i) p[i] -= static_cast<float>(c.hyper.eta) * g.grad[i];
        c.model.set_params(p);
        loss_sum += g.mean_loss;
      }
    }
  }
  c.trained = true;
  r.steps = steps;
  r.mean_loss = loss_sum / static_cast<double>(steps);
  return r;
}

RepresentationBatch emit_representations(const ClientState& c) {
  RepresentationBatch b;
  b.client_id = static_cast<uint32_t>(c.id);
  b.d_rep = static_cast<uint32_t>(c.model.d_rep);
  b.m_k = static_cast<uint32_t>(c.m_k());
  b.z.reserve(c.m_k() * c.model.d_rep);
  for (size_t i = 0; i < c.m_k(); ++i) {
    const std::vector<float> z = c.model.bottom.forward_sample(c.train.images.row(i), nullptr);
    b.z.insert(b.z.end(), z.begin(), z.end());
    if (c.train.labels[i] < 0 || c.train.labels[i] > 0xFFFF)
      throw InvalidArgument("label does not fit the 16-bit wire field");
    b.y.push_back(static_cast<uint16_t>(c.train.labels[i]));
  }
  b.validate();
  return b;
}

Server make_server(int d_rep, int num_classes, uint64_t seed) {
  Server s;
  s.d_rep = d_rep;
  s.num_classes = num_classes;
  s.head.input = {d_rep, 1, 1};
  s.head.stages.push_back(nn::plain_stage(nn::make_linear(d_rep, num_classes)));
  Rng rng(seed);
  s.head.init_params(rng);
  return s;
}

double weighted_client_loss(const nn::Network& head, const std::vector<RepresentationBatch>& b) {
  double m = 0;
  for (const auto& batch : b) m += batch.m_k;
  double total = 0;
  for (const auto& batch : b) {
    if (batch.n() == 0) continue;
    const std::vector<int> y(batch.y.begin(), batch.y.end());
    total += batch.m_k / m *
             nn::mean_loss(head, batch_inputs(batch), y, nn::Loss::kSoftmaxCrossEntropy);
  }
  return total;
}

double pooled_loss(const nn::Network& head, const std::vector<RepresentationBatch>& b) {
  std::vector<int> y;
  const nn::Tensor x = pooled_inputs(b, head.input.c, &y);
  return nn::mean_loss(head, x, y, nn::Loss::kSoftmaxCrossEntropy);
}

double aggregate_and_update_head(Server& server, const std::vector<RepresentationBatch>& batches,
                                 const HeadTrainConfig& cfg, Rng& rng) {
  if (batches.empty()) throw InvalidArgument("aggregation needs at least one batch");
  std::string bad;
  for (const auto& b : batches) {
    b.validate();
    if (b.d_rep != static_cast<uint32_t>(server.d_rep))
      bad += (bad.empty() ? "" : ", ") + std::to_string(b.client_id) + " (d_rep " +
             std::to_string(b.d_rep) + ")";
  }
  if (!bad.empty())
    throw ShapeError("server expects d_rep " + std::to_string(server.d_rep) +
                     "; mismatched clients: " + bad);
  std::vector<int> labels;
  const nn::Tensor x = pooled_inputs(batches, server.d_rep, &labels);
  const size_t n = labels.size();
  if (n == 0) throw InvalidArgument("aggregation received no samples");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const size_t B = static_cast<size_t>(std::max(1, cfg.batch));
  for (int e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < n; start += B) {
      const std::span<const size_t> idx(order.data() + start, std::min(B, n - start));
      const nn::Tensor xb = nn::gather_rows(x, idx);
      std::vector<int> yb;
      for (size_t i : idx) yb.push_back(labels[i]);
      const nn::BatchGradient g =
          nn::batch_gradient(server.head, xb, yb, nn::Loss::kSoftmaxCrossEntropy);
      std::vector<float> p = server.head.params();
      for (size_t i = 0; i < p.size(); ++i) p[i] -= static_cast<float>(cfg.eta) * g.grad[i];
      server.head.set_params(p);
    }
  }
  return nn::mean_loss(server.head, x, labels, nn::Loss::kSoftmaxCrossEntropy);
}

size_t broadcast(const Server& server, std::vector<ClientState>& clients) {
  const std::vector<uint8_t> msg = serialize_head(server.head.params());
  for (ClientState& c : clients) {
    const std::vector<float> theta = deserialize_head(msg);
    if (theta.size() != c.model.head.param_count())
      throw ShapeError("client " + std::to_string(c.id) + " head has " +
                       std::to_string(c.model.head.param_count()) + " parameters, server sent " +
                       std::to_string(theta.size()));
    c.model.head.set_params(theta);
  }
  return comm_bytes_head(server.head.param_count());
}

double sigma_for_plan(const ClientState& c, const RoundPlan& plan) {
  if (!c.uses_dp()) return 0.0;
  const int64_t total = planned_steps(c, plan.local_epochs) * plan.rounds;
  return privacy::calibrate_sigma(c.ledger.config(), total, c.eps_budget);
}

nlohmann::json RoundReport::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& c : clients)
    per.push_back({{"id", c.id},
                   {"participated", c.participated},
                   {"trained", c.trained},
                   {"skip_reason", c.skip_reason},
                   {"test_acc", c.test_acc},
                   {"loss", c.loss},
                   {"eps_spent", std::isfinite(c.eps_spent) ? nlohmann::json(c.eps_spent)
                                                            : nlohmann::json("inf")},
                   {"bytes_up", c.bytes_up},
                   {"bytes_down", c.bytes_down}});
  return {{"round", round},       {"mean_acc", mean_acc},   {"std_acc", std_acc},
          {"bytes_up", bytes_up}, {"bytes_down", bytes_down}, {"head_loss", head_loss},
          {"trained_clients", trained_clients}, {"clients", per}};
}

void assert_budgets(const std::vector<ClientState>& clients) {
  for (const ClientState& c : clients)
    if (c.ledger.eps_spent() > c.eps_budget)
      throw Error("budget safety violated: client " + std::to_string(c.id) + " spent " +
                  std::to_string(c.ledger.eps_spent()) + " of " + std::to_string(c.eps_budget));
}

std::vector<RoundReport> run_rounds(const RoundPlan& plan, std::vector<ClientState>& clients,
                                    Server& server, Rng& rng) {
  if (clients.empty()) throw InvalidArgument("run_rounds needs at least one client");
  if (!(plan.participation > 0 && plan.participation <= 1))
    throw InvalidArgument("participation must be in (0, 1]");
  if (plan.rounds < 0 || plan.local_epochs < 0 || plan.threads < 1)
    throw InvalidArgument("invalid round plan");
  const uint64_t root = rng();
  if (!plan.local_only) broadcast(server, clients);
  const size_t K = clients.size();
  const size_t per_round = std::clamp<size_t>(
      static_cast<size_t>(std::llround(plan.participation * K)), 1, K);

  std::vector<RoundReport> reports;
  for (int t = 1; t <= plan.rounds; ++t) {
    RoundReport rep;
    rep.round = t;
    rep.clients.resize(K);
    for (size_t k = 0; k < K; ++k) rep.clients[k].id = clients[k].id;

    std::vector<size_t> order(K);
    std::iota(order.begin(), order.end(), 0);
    Rng pick = make_rng(root, {tag("participants"), static_cast<uint64_t>(t)});
    std::shuffle(order.begin(), order.end(), pick);
    order.resize(per_round);
    std::sort(order.begin(), order.end());
    for (size_t k : order) rep.clients[k].participated = true;

    // Local training touches only the client's own state, so participants
    // can run on separate threads; each has its own (client, round) stream.
    std::vector<std::string> errors(K);
    std::vector<double> losses(K, 0.0);
    auto train_one = [&](size_t k) {
      Rng local = make_rng(root, {tag("local"), static_cast<uint64_t>(clients[k].id),
                                  static_cast<uint64_t>(t)});
      try {
        losses[k] = local_train(clients[k], plan.local_epochs, local).mean_loss;
      } catch (const Error& e) {
        errors[k] = e.what();
      }
    };
    if (plan.threads > 1 && order.size() > 1) {
      std::atomic<size_t> next{0};
      std::vector<std::thread> workers;
      const int n_workers = std::min<int>(plan.threads, static_cast<int>(order.size()));
      for (int w = 0; w < n_workers; ++w)
        workers.emplace_back([&] {
          for (size_t i; (i = next++) < order.size();) train_one(order[i]);
        });
      for (auto& w : workers) w.join();
    } else {
      for (size_t k : order) train_one(k);
    }

    std::vector<RepresentationBatch> uploads;
    for (size_t k : order) {
      ClientRound& cr = rep.clients[k];
      if (!errors[k].empty()) {
        cr.skip_reason = errors[k];
        continue;
      }
      cr.loss = losses[k];
      if (plan.local_only) {
        cr.trained = true;
        continue;
      }
      try {
        RepresentationBatch b = emit_representations(clients[k]);
        cr.bytes_up = comm_bytes(b);
        cr.trained = true;
        uploads.push_back(std::move(b));
      } catch (const Error& e) {
        cr.skip_reason = e.what();
      }
    }

    if (!uploads.empty()) {
      Rng head_rng = make_rng(root, {tag("head"), static_cast<uint64_t>(t)});
      rep.head_loss = aggregate_and_update_head(server, uploads, plan.head, head_rng);
      const size_t down = broadcast(server, clients);
      for (auto& cr : rep.clients) cr.bytes_down = down;
    }
    assert_budgets(clients);

    double sum = 0, sum2 = 0;
    for (size_t k = 0; k < K; ++k) {
      ClientRound& cr = rep.clients[k];
      const ClientState& c = clients[k];
      cr.test_acc = nn::accuracy(c.model, c.test.images, c.test.labels);
      cr.eps_spent = c.uses_dp() ? c.ledger.eps_spent()
                                 : (c.trained ? privacy::kInfinity : 0.0);
      sum += cr.test_acc;
      sum2 += cr.test_acc * cr.test_acc;
      rep.bytes_up += cr.bytes_up;
      rep.bytes_down += cr.bytes_down;
      rep.trained_clients += cr.trained;
    }
    rep.mean_acc = sum / K;
    rep.std_acc = std::sqrt(std::max(0.0, sum2 / K - rep.mean_acc * rep.mean_acc));
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::optional<int> rounds_to_target(const std::vector<RoundReport>& reports, double target) {
  for (const auto& r : reports)
    if (r.mean_acc >= target) return r.round;
  return std::nullopt;
}

std::string rounds_csv(const std::vector<RoundReport>& reports) {
  std::ostringstream out;
  out << "round,client,val_acc,loss,eps_spent,bytes_up,bytes_down\n";
  for (const auto& r : reports)
    for (const auto& c : r.clients)
      out << r.round << ',' << c.id << ',' << fmt(c.test_acc) << ','
          << (c.trained ? fmt(c.loss) : "") << ',' << fmt(c.eps_spent) << ',' << c.bytes_up
          << ',' << c.bytes_down << '\n';
  return out.str();
}

}  // namespace pfnas::fed
