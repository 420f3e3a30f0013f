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
#include "pfnas/cli/config.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <type_traits>

#include "pfnas/common/error.h"
#include "pfnas/common/rng.h"

namespace pfnas::cli {
namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Reads fields of one JSON object, remembering which keys were consumed so
// that finish() can reject the rest.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidArgument("config: " + where() + " must be an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    const json& v = *it;
    bool ok;
    if constexpr (std::is_same_v<T, bool>) {
      ok = v.is_boolean();
    } else if constexpr (std::is_integral_v<T>) {
      ok = v.is_number_integer() && (std::is_signed_v<T> || v.get<int64_t>() >= 0);
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = v.is_number();
    } else {
      ok = v.is_string();
    }
    if (!ok) throw InvalidArgument("config: " + at(key) + " has the wrong type");
    out = v.get<T>();
  }

  void get_eps_list(const std::string& key, std::vector<double>& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    out.clear();
    try {
      if (it->is_array()) {
        for (const json& e : *it) out.push_back(parse_eps(e));
      } else {
        out.push_back(parse_eps(*it));
      }
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("config: " + at(key) + ": " + e.what());
    }
  }

  void get_range(const std::string& key, double& lo, double& hi) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
      throw InvalidArgument("config: " + at(key) + " must be [lo, hi]");
    lo = (*it)[0].get<double>();
    hi = (*it)[1].get<double>();
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  Reader child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    const auto it = j_.find(key);
    return Reader(it == j_.end() ? empty : *it, at(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    std::string unknown;
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) unknown += (unknown.empty() ? "" : ", ") + at(key);
    if (!unknown.empty()) throw InvalidArgument("config: unknown key " + unknown);
  }

 private:
  std::string where() const { return path_.empty() ? "document" : path_; }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read(Reader r, DatasetConfig& d) {
  r.get("kind", d.kind);
  r.get("path", d.path);
  r.get("classes", d.synth.classes);
  r.get("per_class", d.synth.per_class);
  r.get("jitter", d.synth.jitter);
  r.get("amp_jitter", d.synth.amp_jitter);
  r.get("channels", d.synth.channels);
  r.get("height", d.synth.height);
  r.get("width", d.synth.width);
  r.get("separation", d.synth.separation);
  r.get("noise", d.synth.noise);
  r.get("aux_fraction", d.aux_fraction);
  r.get("test_fraction", d.test_fraction);
  r.finish();
}

void read(Reader r, PartitionConfig& p) {
  r.get("scheme", p.scheme);
  r.get("alpha", p.alpha);
  r.get("classes_per_client", p.classes_per_client);
  r.get("skew", p.skew);
  r.get("min_client_size", p.min_client_size);
  r.finish();
}

void read(Reader r, data::NasSizes& n) {
  r.get("train", n.train);
  r.get("val", n.val);
  r.get("test", n.test);
  r.get("max_fraction", n.max_fraction);
  r.finish();
}

void read(Reader r, space::SpaceConfig& s) {
  r.get("d_rep", s.d_rep);
  r.get("min_len", s.min_len);
  r.get("max_len", s.max_len);
  r.finish();
}

void read(Reader r, evo::GAConfig& g) {
  r.get("population", g.pop_size);
  r.get("generations", g.generations);
  r.get("p_cross", g.p_cross);
  r.get("p_mut", g.p_mut);
  r.get("eval_epochs", g.eval_epochs);
  r.get("eval_lr", g.eval_lr);
  r.get("eval_batch", g.eval_batch);
  r.finish();
}

void read(Reader r, hpo::BOConfig& b, hpo::SearchDomain& d) {
  r.get("k_init", b.k_init);
  r.get("iterations", b.iterations);
  r.get("xi", b.xi);
  r.get("n_candidates", b.n_candidates);
  r.get("max_init_draws", b.max_init_draws);
  r.get("trial_epochs", b.plan.epochs);
  r.get_range("eta", d.eta_lo, d.eta_hi);
  r.get_range("q", d.q_lo, d.q_hi);
  r.get_range("C", d.C_lo, d.C_hi);
  r.get_range("sigma", d.sigma_lo, d.sigma_hi);
  r.finish();
}

void read(Reader r, FederationConfig& f) {
  r.get("rounds", f.rounds);
  r.get("local_epochs", f.local_epochs);
  r.get("participation", f.participation);
  r.get("head_epochs", f.head_epochs);
  r.get("eta_theta", f.eta_theta);
  r.get("head_batch", f.head_batch);
  r.get("target_acc", f.target_acc);
  r.get("sigma_policy", f.sigma_policy);
  r.finish();
}

void read(Reader r, Defaults& d) {
  r.get("genome", d.genome);
  r.get("eta", d.eta);
  r.get("q", d.q);
  r.get("C", d.C);
  r.get("sigma", d.sigma);
  r.finish();
}

void read(Reader r, AttackConfig& a) {
  r.get_eps_list("eps", a.eps);
  r.get("seeds", a.seeds);
  r.get("hidden_channels", a.decoder.hidden_channels);
  r.get("epochs", a.decoder.epochs);
  r.get("lr", a.decoder.lr);
  r.get("batch", a.decoder.batch);
  if (r.has("runs")) {
    const json& runs = r.raw("runs");
    if (!runs.is_object()) throw InvalidArgument("config: attack.runs must be an object");
    a.runs.clear();
    for (const auto& [label, dir] : runs.items()) {
      if (!dir.is_string())
        throw InvalidArgument("config: attack.runs." + label + " must be a path");
      a.runs[eps_label(parse_eps(label))] = dir.get<std::string>();
    }
  }
  r.finish();
}

json eps_json(double e) { return std::isinf(e) ? json("inf") : json(e); }

}  // namespace

std::string eps_label(double eps) {
  if (std::isinf(eps)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

double parse_eps(const json& j) {
  double v;
  if (j.is_number()) {
    v = j.get<double>();
  } else if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "Infinity" || s == "infinity") return kInf;
    try {
      size_t used = 0;
      v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw InvalidArgument("eps must be a positive number or \"inf\", got \"" + s + "\"");
    }
  } else {
    throw InvalidArgument("eps must be a positive number or \"inf\"");
  }
  if (!(v > 0)) throw InvalidArgument("eps must be positive");
  return v;
}

double ExperimentConfig::eps_for(int client) const {
  return eps.size() == 1 ? eps[0] : eps.at(static_cast<size_t>(client));
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument("config: " + what);
  };
  need(profile == "desk" || profile == "paper", "profile must be desk or paper");
  need(threads >= 1, "threads must be >= 1");
  need(!output_dir.empty(), "output_dir must not be empty");
  need(dataset.kind == "synth" || dataset.kind == "cifar10" || dataset.kind == "cifar100",
       "dataset.kind must be synth, cifar10 or cifar100");
  need(dataset.kind == "synth" || !dataset.path.empty(), "dataset.path is required for CIFAR");
  need(dataset.synth.classes >= 2 && dataset.synth.per_class >= 1 &&
           dataset.synth.channels >= 1 && dataset.synth.height >= 2 && dataset.synth.width >= 2,
       "dataset synth sizes are out of range");
  need(dataset.synth.noise >= 0 && dataset.synth.jitter >= 0 && dataset.synth.amp_jitter >= 0,
       "dataset noise, jitter and amp_jitter must be >= 0");
  need(dataset.aux_fraction >= 0 && dataset.aux_fraction < 1, "dataset.aux_fraction in [0, 1)");
  need(dataset.test_fraction > 0 && dataset.test_fraction < 1,
       "dataset.test_fraction in (0, 1)");
  need(partition.scheme == "dirichlet" || partition.scheme == "class_subset",
       "partition.scheme must be dirichlet or class_subset");
  need(partition.alpha > 0, "partition.alpha must be positive");
  need(clients >= 1, "clients must be >= 1");
  need(eps.size() == 1 || eps.size() == static_cast<size_t>(clients),
       "eps must be a scalar or a list of one budget per client (" + std::to_string(clients) +
           "), got " + std::to_string(eps.size()));
  for (double e : eps) need(e > 0, "eps budgets must be positive");
  need(delta > 0 && delta < 1, "delta in (0, 1)");
  need(nas_split.train > 0 && nas_split.max_fraction > 0 && nas_split.max_fraction <= 1,
       "nas_split sizes out of range");
  need(federation.rounds >= 0 && federation.local_epochs >= 0, "federation rounds/epochs >= 0");
  need(federation.participation > 0 && federation.participation <= 1,
       "federation.participation in (0, 1]");
  need(federation.head_epochs >= 0 && federation.head_batch >= 1 && federation.eta_theta >= 0,
       "federation head settings out of range");
  need(federation.sigma_policy == "fit_plan" || federation.sigma_policy == "as_tuned",
       "federation.sigma_policy must be fit_plan or as_tuned");
  need(defaults.eta > 0 && defaults.q > 0 && defaults.q <= 1 && defaults.C > 0 &&
           defaults.sigma >= 0,
       "defaults out of range");
  need(attack.seeds >= 1 && !attack.eps.empty(), "attack needs seeds >= 1 and an eps list");
  try {
    space::decode(defaults.genome);
    ga.validate();
    bo.validate();
    domain.validate();
  } catch (const Error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

ExperimentConfig desk_profile() {
  ExperimentConfig c;
  c.profile = "desk";
  c.output_dir = "runs/desk";
  c.dataset.synth.classes = 10;
  c.dataset.synth.per_class = 400;
  c.dataset.synth.height = 8;
  c.dataset.synth.width = 8;
  // Per-sample pose and contrast give reconstructions something beyond the
  // class template to recover; pixel noise alone is not recoverable.
  c.dataset.synth.jitter = 1.0;
  c.dataset.synth.amp_jitter = 0.3;
  c.dataset.synth.noise = 0.1;
  c.clients = 5;
  c.nas_split = {100, 20, 20, 0.5};
  c.space.d_rep = 32;
  c.space.min_len = 1;
  c.space.max_len = 4;
  c.ga.eval_epochs = 3;
  c.bo.k_init = 4;
  c.bo.iterations = 8;
  c.bo.n_candidates = 256;
  c.bo.plan.epochs = 3;
  c.federation.rounds = 20;
  c.federation.local_epochs = 2;
  // A 20-round run has little time to fit the shared head at 0.01 x 5 epochs.
  c.federation.eta_theta = 0.1;
  c.federation.head_epochs = 10;
  c.attack.decoder.epochs = 20;
  return c;
}

ExperimentConfig paper_profile() {
  ExperimentConfig c;
  c.profile = "paper";
  c.output_dir = "runs/paper";
  c.dataset.kind = "cifar10";
  c.dataset.path = "data/cifar-10-batches-bin/data_batch_1.bin";
  c.dataset.synth.height = 32;
  c.dataset.synth.width = 32;
  c.clients = 100;
  c.federation.participation = 0.1;
  c.federation.rounds = 300;
  c.federation.local_epochs = 30;
  c.defaults.eta = 0.01;
  c.defaults.genome = "C3x16-C3x32-Pavg-C3x64";
  return c;
}

ExperimentConfig profile_by_name(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "paper") return paper_profile();
  throw InvalidArgument("config: unknown profile \"" + name + "\" (desk or paper)");
}

ExperimentConfig config_from_json(const json& j) {
  Reader r(j, "");
  std::string profile = "desk";
  r.get("profile", profile);
  ExperimentConfig c = profile_by_name(profile);
  r.get("seed", c.seed);
  r.get("threads", c.threads);
  r.get("output_dir", c.output_dir);
  r.get("clients", c.clients);
  r.get_eps_list("eps", c.eps);
  r.get("delta", c.delta);
  if (r.has("dataset")) read(r.child("dataset"), c.dataset);
  if (r.has("partition")) read(r.child("partition"), c.partition);
  if (r.has("nas_split")) read(r.child("nas_split"), c.nas_split);
  if (r.has("space")) read(r.child("space"), c.space);
  if (r.has("ga")) read(r.child("ga"), c.ga);
  if (r.has("bo")) read(r.child("bo"), c.bo, c.domain);
  if (r.has("federation")) read(r.child("federation"), c.federation);
  if (r.has("defaults")) read(r.child("defaults"), c.defaults);
  if (r.has("attack")) read(r.child("attack"), c.attack);
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config: " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

json to_json(const ExperimentConfig& c) {
  json eps = json::array();
  for (double e : c.eps) eps.push_back(eps_json(e));
  json attack_eps = json::array();
  for (double e : c.attack.eps) attack_eps.push_back(eps_json(e));
  json runs = json::object();
  for (const auto& [label, dir] : c.attack.runs) runs[label] = dir;
  const auto& s = c.dataset.synth;
  return {
      {"profile", c.profile},
      {"seed", c.seed},
      {"threads", c.threads},
      {"output_dir", c.output_dir},
      {"clients", c.clients},
      {"eps", eps},
      {"delta", c.delta},
      {"dataset",
       {{"kind", c.dataset.kind}, {"path", c.dataset.path}, {"classes", s.classes},
        {"per_class", s.per_class}, {"channels", s.channels}, {"height", s.height},
        {"width", s.width}, {"separation", s.separation}, {"noise", s.noise},
        {"jitter", s.jitter}, {"amp_jitter", s.amp_jitter},
        {"aux_fraction", c.dataset.aux_fraction}, {"test_fraction", c.dataset.test_fraction}}},
      {"partition",
       {{"scheme", c.partition.scheme}, {"alpha", c.partition.alpha},
        {"classes_per_client", c.partition.classes_per_client}, {"skew", c.partition.skew},
         {"min_client_size", c.partition.min_client_size}}},
      {"nas_split",
       {{"train", c.nas_split.train}, {"val", c.nas_split.val}, {"test", c.nas_split.test},
        {"max_fraction", c.nas_split.max_fraction}}},
      {"space", {{"d_rep", c.space.d_rep}, {"min_len", c.space.min_len},
                 {"max_len", c.space.max_len}}},
      {"ga",
       {{"population", c.ga.pop_size}, {"generations", c.ga.generations},
        {"p_cross", c.ga.p_cross}, {"p_mut", c.ga.p_mut}, {"eval_epochs", c.ga.eval_epochs},
        {"eval_lr", c.ga.eval_lr}, {"eval_batch", c.ga.eval_batch}}},
      {"bo",
       {{"k_init", c.bo.k_init}, {"iterations", c.bo.iterations}, {"xi", c.bo.xi},
        {"n_candidates", c.bo.n_candidates}, {"max_init_draws", c.bo.max_init_draws},
        {"trial_epochs", c.bo.plan.epochs},
        {"eta", {c.domain.eta_lo, c.domain.eta_hi}}, {"q", {c.domain.q_lo, c.domain.q_hi}},
        {"C", {c.domain.C_lo, c.domain.C_hi}},
        {"sigma", {c.domain.sigma_lo, c.domain.sigma_hi}}}},
      {"federation",
       {{"rounds", c.federation.rounds}, {"local_epochs", c.federation.local_epochs},
        {"participation", c.federation.participation},
        {"head_epochs", c.federation.head_epochs}, {"eta_theta", c.federation.eta_theta},
        {"head_batch", c.federation.head_batch}, {"target_acc", c.federation.target_acc},
        {"sigma_policy", c.federation.sigma_policy}}},
      {"defaults",
       {{"genome", c.defaults.genome}, {"eta", c.defaults.eta}, {"q", c.defaults.q},
        {"C", c.defaults.C}, {"sigma", c.defaults.sigma}}},
      {"attack",
       {{"eps", attack_eps}, {"seeds", c.attack.seeds},
        {"hidden_channels", c.attack.decoder.hidden_channels},
        {"epochs", c.attack.decoder.epochs}, {"lr", c.attack.decoder.lr},
        {"batch", c.attack.decoder.batch}, {"runs", runs}}},
  };
}

std::string config_hash(const ExperimentConfig& c) {
  // Where results go and how many threads compute them do not change them.
  json j = to_json(c);
  j.erase("output_dir");
  j.erase("threads");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(tag(j.dump())));
  return buf;
}

}  // namespace pfnas::cli
