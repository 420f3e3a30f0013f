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
#include "pfnas/cli/pipeline.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pfnas/common/error.h"
#include "pfnas/common/rng.h"
#include "pfnas/privacy/accountant.h"

namespace pfnas::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kModelMagic[4] = {'P', 'F', 'N', 'M'};
constexpr uint32_t kModelVersion = 1;

json number_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

data::Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset.kind == "synth") {
    Rng rng = make_rng(cfg.seed, {tag("data")});
    return data::synth_dataset(cfg.dataset.synth, rng);
  }
  const auto format =
      cfg.dataset.kind == "cifar10" ? data::CifarFormat::kCifar10 : data::CifarFormat::kCifar100;
  return data::load_cifar_binary(cfg.dataset.path, format);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

// ---- scenario ----------------------------------------------------------------

evo::NasData Scenario::nas_data(int client) const {
  const ClientData& c = clients.at(static_cast<size_t>(client));
  return {data.subset(c.nas.nas_train), data.subset(c.nas.nas_val)};
}

Scenario build_scenario(const ExperimentConfig& cfg) {
  cfg.validate();
  Scenario sc;
  sc.data = load_dataset(cfg);
  sc.space = cfg.space;
  sc.space.input = {sc.data.images.dim(1), sc.data.images.dim(2), sc.data.images.dim(3)};
  sc.space.num_classes = sc.data.num_classes;
  sc.space.validate();

  std::vector<size_t> all(sc.data.size());
  std::iota(all.begin(), all.end(), 0);
  Rng split_rng = make_rng(cfg.seed, {tag("aux")});
  const auto n_aux = static_cast<size_t>(std::llround(cfg.dataset.aux_fraction * all.size()));
  auto [aux, pool] = data::stratified_split(all, sc.data.labels, n_aux, split_rng);
  sc.aux = std::move(aux);

  const std::vector<int> pool_labels = sc.data.labels_at(pool);
  Rng part_rng = make_rng(cfg.seed, {tag("partition")});
  sc.plan = cfg.partition.scheme == "dirichlet"
                ? data::partition_dirichlet(pool_labels, sc.data.num_classes, cfg.clients,
                                            cfg.partition.alpha, part_rng,
                                            cfg.partition.min_client_size)
                : data::partition_class_subset(pool_labels, sc.data.num_classes, cfg.clients,
                                               cfg.partition.classes_per_client,
                                               cfg.partition.skew, part_rng);
  for (auto& list : sc.plan.clients)
    for (size_t& i : list) i = pool[i];
  for (const auto& w : sc.plan.warnings) sc.warnings.push_back("partition: " + w);

  for (int k = 0; k < cfg.clients; ++k) {
    ClientData c;
    c.id = k;
    c.shard = sc.plan.clients[k];
    Rng rng = make_rng(cfg.seed, {tag("client-split"), static_cast<uint64_t>(k)});
    c.nas = data::split_nas_subsets(c.shard, sc.data.labels, rng, cfg.nas_split);
    for (const auto& w : c.nas.warnings)
      sc.warnings.push_back("client " + std::to_string(k) + ": " + w);
    const size_t n = c.nas.remainder.size();
    if (n < 2 || c.nas.nas_train.empty() || c.nas.nas_val.empty())
      throw InvalidArgument("client " + std::to_string(k) + " holds " +
                            std::to_string(c.shard.size()) +
                            " samples, too few for search and federated subsets");
    const size_t n_test = std::clamp<size_t>(
        static_cast<size_t>(std::llround(cfg.dataset.test_fraction * n)), 1, n - 1);
    auto [train, test] = data::stratified_split(c.nas.remainder, sc.data.labels, n - n_test, rng);
    c.train = std::move(train);
    c.test = std::move(test);
    sc.clients.push_back(std::move(c));
  }
  return sc;
}

// ---- phase 1 -----------------------------------------------------------------

NasOutcome run_nas(const ExperimentConfig& cfg, const Scenario& sc) {
  NasOutcome out;
  evo::GAConfig ga = cfg.ga;
  ga.threads = cfg.threads;
  for (int k = 0; k < cfg.clients; ++k) {
    const evo::NasData nd = sc.nas_data(k);
    const evo::FitnessFn fitness = [&](const space::Genome& g, uint64_t seed) {
      return evo::evaluate_fitness(g, nd, sc.space, ga, seed);
    };
    Rng rng = make_rng(cfg.seed, {tag("nas"), static_cast<uint64_t>(k)});
    out.results.push_back(evo::run_ga(ga, sc.space, fitness, rng));
    out.genomes.push_back(out.results.back().best);
  }
  return out;
}

// ---- phase 2 -----------------------------------------------------------------

hpo::HyperConfig ClientHyper::for_shard(size_t m) const {
  const int B = std::clamp<int>(static_cast<int>(std::llround(q * static_cast<double>(m))), 1,
                                static_cast<int>(std::max<size_t>(m, 1)));
  return {eta, B, C, sigma};
}

json to_json(const ClientHyper& h) {
  return {{"eta", h.eta}, {"q", h.q}, {"C", h.C}, {"sigma", h.sigma}};
}

ClientHyper hyper_from_json(const json& j) {
  try {
    return {j.at("eta").get<double>(), j.at("q").get<double>(), j.at("C").get<double>(),
            j.at("sigma").get<double>()};
  } catch (const json::exception& e) {
    throw ParseError(std::string("hyperparameter file: ") + e.what());
  }
}

double hpo_trial(const ExperimentConfig& cfg, const Scenario& sc, int client,
                 const space::Genome& g, const hpo::HyperConfig& h, uint64_t trial_seed) {
  const evo::NasData nd = sc.nas_data(client);
  fed::ClientState c = fed::make_client(client, g, sc.space, h, nd.train, nd.val,
                                        cfg.eps_for(client), cfg.delta, trial_seed);
  Rng rng = make_rng(trial_seed, {tag("trial")});
  try {
    fed::local_train(c, cfg.bo.plan.epochs, rng);
  } catch (const NonFiniteError&) {
    return 0.0;  // a diverging configuration is simply a bad one
  }
  return nn::accuracy(c.model, c.test.images, c.test.labels);
}

HpoOutcome run_hpo(const ExperimentConfig& cfg, const Scenario& sc,
                   const std::vector<space::Genome>& genomes) {
  if (genomes.size() != static_cast<size_t>(cfg.clients))
    throw InvalidArgument("expected " + std::to_string(cfg.clients) + " genomes, got " +
                          std::to_string(genomes.size()));
  HpoOutcome out;
  for (int k = 0; k < cfg.clients; ++k) {
    hpo::BOConfig bo = cfg.bo;
    hpo::SearchDomain domain = cfg.domain;
    const size_t n = sc.clients[k].nas.nas_train.size();
    bo.plan.shard_size = domain.shard_size = n;
    bo.eps_budget = cfg.eps_for(k);
    bo.delta = cfg.delta;
    const hpo::Objective objective = [&](const hpo::HyperConfig& h, uint64_t seed) {
      return hpo_trial(cfg, sc, k, genomes[k], h, seed);
    };
    Rng rng = make_rng(cfg.seed, {tag("hpo"), static_cast<uint64_t>(k)});
    try {
      out.results.push_back(hpo::run_bo(bo, domain, objective, rng));
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("client " + std::to_string(k) + " (eps " +
                            eps_label(cfg.eps_for(k)) + "): " + e.what());
    }
    const hpo::HyperConfig& best = out.results.back().best;
    out.hypers.push_back({best.eta, domain.q_of(best), best.C, best.sigma});
  }
  return out;
}

// ---- phase 3 -----------------------------------------------------------------

std::vector<space::Genome> default_genomes(const ExperimentConfig& cfg) {
  return std::vector<space::Genome>(cfg.clients, space::decode(cfg.defaults.genome));
}

std::vector<ClientHyper> default_hypers(const ExperimentConfig& cfg) {
  const Defaults& d = cfg.defaults;
  return std::vector<ClientHyper>(cfg.clients, ClientHyper{d.eta, d.q, d.C, d.sigma});
}

ExperimentConfig with_eps(ExperimentConfig cfg, double eps) {
  cfg.eps = {eps};
  return cfg;
}

namespace {

fed::RoundPlan round_plan(const ExperimentConfig& cfg, const TrainOptions& opt) {
  fed::RoundPlan p;
  p.rounds = cfg.federation.rounds;
  p.local_epochs = cfg.federation.local_epochs;
  p.participation = cfg.federation.participation;
  p.head = {cfg.federation.head_epochs, cfg.federation.eta_theta, cfg.federation.head_batch};
  p.threads = cfg.threads;
  p.local_only = opt.local_only;
  return p;
}

}  // namespace

std::vector<fed::ClientState> make_clients(const ExperimentConfig& cfg, const Scenario& sc,
                                           const std::vector<space::Genome>& genomes,
                                           const std::vector<ClientHyper>& hypers) {
  if (genomes.size() != static_cast<size_t>(cfg.clients) ||
      hypers.size() != static_cast<size_t>(cfg.clients))
    throw InvalidArgument("need one genome and one hyperparameter set per client");
  const fed::RoundPlan plan = round_plan(cfg, {});
  std::vector<fed::ClientState> clients;
  for (int k = 0; k < cfg.clients; ++k) {
    const ClientData& cd = sc.clients[k];
    for (const auto& err : space::validate_genome(genomes[k], sc.space))
      throw InvalidArgument("client " + std::to_string(k) + " genome: " + err);
    hpo::HyperConfig h = hypers[k].for_shard(cd.train.size());
    const uint64_t seed = make_rng(cfg.seed, {tag("model"), static_cast<uint64_t>(k)})();
    auto build = [&] {
      return fed::make_client(k, genomes[k], sc.space, h, sc.data.subset(cd.train),
                              sc.data.subset(cd.test), cfg.eps_for(k), cfg.delta, seed);
    };
    fed::ClientState c = build();
    if (c.uses_dp() && cfg.federation.sigma_policy == "fit_plan") {
      double need;
      try {
        need = fed::sigma_for_plan(c, plan);
      } catch (const InfeasibleError& e) {
        throw InfeasibleError("client " + std::to_string(k) + ": " + e.what());
      }
      if (need > h.sigma) {
        h.sigma = need;
        c = build();
      }
    }
    clients.push_back(std::move(c));
  }
  return clients;
}

TrainOutcome run_train(const ExperimentConfig& cfg, const Scenario& sc,
                       const std::vector<space::Genome>& genomes,
                       const std::vector<ClientHyper>& hypers, const TrainOptions& opt) {
  TrainOutcome out;
  out.clients = make_clients(cfg, sc, genomes, hypers);
  fed::Server server = fed::make_server(sc.space.d_rep, sc.space.num_classes,
                                        make_rng(cfg.seed, {tag("server")})());
  Rng rng = make_rng(cfg.seed, {tag("train")});
  out.reports = fed::run_rounds(round_plan(cfg, opt), out.clients, server, rng);
  fed::assert_budgets(out.clients);

  json per = json::array();
  size_t up = 0, down = 0;
  for (const auto& r : out.reports) up += r.bytes_up, down += r.bytes_down;
  for (size_t k = 0; k < out.clients.size(); ++k) {
    const fed::ClientState& c = out.clients[k];
    per.push_back({{"id", c.id},
                   {"genome", space::encode(c.genome)},
                   {"params", c.model.param_count()},
                   {"model_mb", c.model.param_count() * 4 / 1e6},
                   {"train_size", c.m_k()},
                   {"test_size", c.test.size()},
                   {"eta", c.hyper.eta},
                   {"B", c.hyper.B},
                   {"C", c.hyper.C},
                   {"sigma", c.uses_dp() ? json(c.hyper.sigma) : json(nullptr)},
                   {"eps_budget", number_or_inf(c.eps_budget)},
                   {"eps_spent", c.uses_dp() ? json(c.ledger.eps_spent()) : json("inf")},
                   {"final_acc", out.reports.empty() ? 0.0
                                                     : out.reports.back().clients[k].test_acc}});
  }
  const auto rtt = fed::rounds_to_target(out.reports, cfg.federation.target_acc);
  out.summary = {{"mean_acc", out.reports.empty() ? 0.0 : out.reports.back().mean_acc},
                 {"std_acc", out.reports.empty() ? 0.0 : out.reports.back().std_acc},
                 {"rounds_to_target", rtt ? json(*rtt) : json(nullptr)},
                 {"target_acc", cfg.federation.target_acc},
                 {"rounds", cfg.federation.rounds},
                 {"local_only", opt.local_only},
                 {"bytes_up", up},
                 {"bytes_down", down},
                 {"clients", per}};
  return out;
}

// ---- privacy evaluation ------------------------------------------------------

AttackOutcome run_attack(const ExperimentConfig& cfg, const Scenario& sc,
                         const std::map<double, std::vector<nn::Network>>& bottoms) {
  if (bottoms.empty()) throw InvalidArgument("attack needs at least one privacy setting");
  AttackOutcome out;
  const data::Dataset aux = sc.data.subset(sc.aux);
  if (aux.size() == 0) throw InvalidArgument("attack needs auxiliary data (aux_fraction > 0)");
  std::vector<data::Dataset> victims;
  for (const auto& c : sc.clients) victims.push_back(sc.data.subset(c.train));

  for (int s = 0; s < cfg.attack.seeds; ++s) {
    std::vector<analysis::AttackReport> this_seed;
    // Largest eps first, so the rows read from weakest to strongest privacy.
    for (auto it = bottoms.rbegin(); it != bottoms.rend(); ++it) {
      const auto& [eps, nets] = *it;
      if (nets.size() != victims.size())
        throw InvalidArgument("attack: eps " + eps_label(eps) + " has " +
                              std::to_string(nets.size()) + " bottoms for " +
                              std::to_string(victims.size()) + " clients");
      analysis::AttackReport agg;
      agg.eps = eps;
      agg.seed = cfg.seed + static_cast<uint64_t>(s);
      agg.config = cfg.attack.decoder;
      double total = 0;
      for (size_t k = 0; k < victims.size(); ++k) {
        // Same decoder stream for every eps: the comparison is paired.
        Rng rng = make_rng(cfg.seed, {tag("attack"), static_cast<uint64_t>(s), k});
        const analysis::AttackReport r = analysis::inversion_attack(
            nets[k], aux.images, victims[k].images, cfg.attack.decoder, rng);
        if (r.failed) {
          agg.failed = true;
          agg.failure = "client " + std::to_string(k) + ": " + r.failure;
        }
        total += r.mse;
        agg.per_sample_mse.insert(agg.per_sample_mse.end(), r.per_sample_mse.begin(),
                                  r.per_sample_mse.end());
      }
      agg.mse = total / static_cast<double>(victims.size());
      this_seed.push_back(agg);
      out.reports.push_back(agg);
    }
    if (this_seed.size() >= 2) {
      const bool ok = analysis::mse_ordering_holds(this_seed);
      out.ordering[cfg.seed + static_cast<uint64_t>(s)] = ok;
      out.ordering_holds += ok;
    }
  }
  return out;
}

// ---- artifacts ---------------------------------------------------------------

fs::path resolve_output_dir(const ExperimentConfig& cfg) {
  fs::path dir = cfg.output_dir;
  if (const char* root = std::getenv("PFNAS_OUTPUT_ROOT"); root && *root && dir.is_relative())
    dir = fs::path(root) / dir;
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("missing input file " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_model(const fs::path& path, const nn::Model& m) {
  const std::vector<float> p = m.params();
  std::string bytes(kModelMagic, 4);
  auto put32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  put32(kModelVersion);
  put32(static_cast<uint32_t>(p.size()));
  for (float f : p) {
    uint32_t u;
    std::memcpy(&u, &f, 4);
    put32(u);
  }
  write_text(path, bytes);
}

nn::Model read_model(const fs::path& path, const space::Genome& g,
                     const space::SpaceConfig& space) {
  const std::string bytes = read_text(path);
  auto get32 = [&](size_t at) {
    if (at + 4 > bytes.size())
      throw ParseError(path.string() + ": truncated at offset " + std::to_string(at));
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes[at + i])) << (8 * i);
    return v;
  };
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0)
    throw ParseError(path.string() + ": not a model file");
  if (get32(4) != kModelVersion) throw ParseError(path.string() + ": unsupported version");
  const uint32_t n = get32(8);
  Rng unused(0);
  nn::Model m = space::materialize(g, space, unused);
  if (n != m.param_count())
    throw ParseError(path.string() + ": " + std::to_string(n) + " parameters, genome " +
                     space::encode(g) + " needs " + std::to_string(m.param_count()));
  std::vector<float> p(n);
  for (uint32_t i = 0; i < n; ++i) {
    const uint32_t u = get32(12 + 4 * static_cast<size_t>(i));
    std::memcpy(&p[i], &u, 4);
  }
  m.set_params(p);
  return m;
}

RunManifest::RunManifest(fs::path dir, const ExperimentConfig& cfg, std::string command)
    : dir_(std::move(dir)) {
  doc_ = {{"command", command},
          {"config_hash", config_hash(cfg)},
          {"seed", cfg.seed},
          {"threads", cfg.threads},
          {"version", "0.1.0"},
          {"modules",
           {{"nn", 1}, {"space", 1}, {"evo", 1}, {"privacy", 1}, {"hpo", 1}, {"fed", 1},
            {"data", 1}, {"analysis", 1}, {"wire", fed::kWireVersion}}},
          {"started", utc_now()},
          {"ended", nullptr},
          {"status", "running"},
          {"artifacts", json::array()},
          {"config", to_json(cfg)}};
  write();
}

void RunManifest::add_artifact(const fs::path& p) {
  doc_["artifacts"].push_back(fs::relative(p, dir_).generic_string());
}

void RunManifest::finish(const std::string& status) {
  doc_["ended"] = utc_now();
  doc_["status"] = status;
  write();
}

void RunManifest::write() const {
  write_text(dir_ / ("manifest_" + doc_["command"].get<std::string>() + ".json"),
             doc_.dump(2) + "\n");
}

}  // namespace pfnas::cli
