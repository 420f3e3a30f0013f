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
#include "pfnas/cli/app.h"

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pfnas/analysis/bounds.h"
#include "pfnas/cli/config.h"
#include "pfnas/cli/pipeline.h"
#include "pfnas/common/error.h"
#include "pfnas/fed/federation.h"

namespace pfnas::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonOptions {
  std::string config;
  std::string profile;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::optional<int> clients;
  std::optional<int> rounds;
  std::string out;
  std::string eps;
  bool verbose = false;
  bool quiet = false;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw InvalidArgument("empty entry in list '" + text + "'");
    parts.push_back(item.substr(b, e - b + 1));
  }
  if (parts.empty()) throw InvalidArgument("empty list");
  return parts;
}

double parse_eps_text(const std::string& s) {
  if (s == "inf") return parse_eps(json("inf"));
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw InvalidArgument("eps: cannot parse '" + s + "'");
  return parse_eps(json(v));
}

ExperimentConfig load(const CommonOptions& o) {
  ExperimentConfig cfg;
  if (!o.config.empty()) {
    cfg = load_config(o.config);
  } else if (o.profile.empty() || o.profile == "desk") {
    cfg = desk_profile();
  } else if (o.profile == "paper") {
    cfg = paper_profile();
  } else {
    throw InvalidArgument("unknown profile '" + o.profile + "' (desk or paper)");
  }
  if (!o.config.empty() && !o.profile.empty() && o.profile != cfg.profile)
    throw InvalidArgument("--profile " + o.profile + " conflicts with config profile " +
                          cfg.profile);
  // Flags override the document.
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.clients) cfg.clients = *o.clients;
  if (o.rounds) cfg.federation.rounds = *o.rounds;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!o.eps.empty()) {
    cfg.eps.clear();
    for (const auto& part : split_list(o.eps)) cfg.eps.push_back(parse_eps_text(part));
  }
  cfg.validate();
  return cfg;
}

std::string client_file(const std::string& stem, int k, const std::string& ext) {
  return stem + "_" + std::to_string(k) + ext;
}

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  return s.substr(b);
}

std::vector<space::Genome> load_genomes(const fs::path& dir, int clients) {
  std::vector<space::Genome> out;
  for (int k = 0; k < clients; ++k) {
    const fs::path p = dir / client_file("client", k, ".genome");
    if (!fs::exists(p))
      throw InvalidArgument("missing genome file " + p.string() +
                            " (run `pfnas nas` first or pass --no-nas)");
    out.push_back(space::decode(trim(read_text(p))));
  }
  return out;
}

std::vector<ClientHyper> load_hypers(const fs::path& dir, int clients) {
  std::vector<ClientHyper> out;
  for (int k = 0; k < clients; ++k) {
    const fs::path p = dir / client_file("client", k, ".json");
    if (!fs::exists(p))
      throw InvalidArgument("missing hyperparameter file " + p.string() +
                            " (run `pfnas hpo` first or pass --no-hpo)");
    json j;
    try {
      j = json::parse(read_text(p));
    } catch (const json::parse_error& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
    out.push_back(hyper_from_json(j.contains("hyper") ? j["hyper"] : j));
  }
  return out;
}

json eps_json(double eps) {
  return std::isinf(eps) ? json("inf") : json(eps);
}

// Keeps the manifest honest when a command throws half-way.
class ManifestGuard {
 public:
  ManifestGuard(const fs::path& dir, const ExperimentConfig& cfg, const std::string& command)
      : manifest_(dir, cfg, command) {}
  ~ManifestGuard() {
    if (!done_) {
      try {
        manifest_.finish("failed");
      } catch (...) {
      }
    }
  }
  void add(const fs::path& p) { manifest_.add_artifact(p); }
  void finish() {
    manifest_.finish("ok");
    done_ = true;
  }

 private:
  RunManifest manifest_;
  bool done_ = false;
};

void write_artifact(ManifestGuard& m, const fs::path& p, const std::string& text) {
  write_text(p, text);
  m.add(p);
}

void log_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) spdlog::warn("{}", w);
}

// ---- subcommands -------------------------------------------------------------

int cmd_nas(const ExperimentConfig& cfg) {
  const fs::path dir = resolve_output_dir(cfg);
  ManifestGuard manifest(dir, cfg, "nas");
  const Scenario sc = build_scenario(cfg);
  log_warnings(sc.warnings);
  spdlog::info("architecture search for {} clients", cfg.clients);
  const NasOutcome nas = run_nas(cfg, sc);

  json per = json::array();
  for (int k = 0; k < cfg.clients; ++k) {
    const evo::GAResult& r = nas.results[k];
    log_warnings(r.warnings);
    write_artifact(manifest, dir / "nas" / client_file("client", k, ".genome"),
                   space::encode(r.best) + "\n");
    write_artifact(manifest, dir / "nas" / client_file("ga_client", k, ".csv"),
                   evo::generations_csv(r.log));
    per.push_back({{"id", k},
                   {"genome", space::encode(r.best)},
                   {"fitness", r.best_fitness},
                   {"params", space::param_count(r.best, sc.space)},
                   {"evaluations", r.evaluations},
                   {"cache_hits", r.cache_hits},
                   {"warnings", r.warnings}});
    spdlog::info("client {}: {} (fitness {:.4f})", k, space::encode(r.best), r.best_fitness);
  }
  write_artifact(manifest, dir / "nas" / "summary.json", json{{"clients", per}}.dump(2) + "\n");
  manifest.finish();
  return kExitOk;
}

int cmd_hpo(const ExperimentConfig& cfg, bool no_nas) {
  const fs::path dir = resolve_output_dir(cfg);
  const auto genomes = no_nas ? default_genomes(cfg) : load_genomes(dir / "nas", cfg.clients);
  ManifestGuard manifest(dir, cfg, "hpo");
  const Scenario sc = build_scenario(cfg);
  log_warnings(sc.warnings);
  spdlog::info("hyperparameter search for {} clients", cfg.clients);
  const HpoOutcome hpo = run_hpo(cfg, sc, genomes);

  json per = json::array();
  for (int k = 0; k < cfg.clients; ++k) {
    const hpo::BOResult& r = hpo.results[k];
    double max_planned = 0;
    int trained = 0, over = 0;
    for (const auto& rec : r.trace) {
      if (!rec.trained) continue;
      ++trained;
      max_planned = std::max(max_planned, rec.eps_planned);
      over += rec.eps_planned > cfg.eps_for(k);
    }
    const json doc = {{"id", k},
                      {"genome", space::encode(genomes[k])},
                      {"hyper", to_json(hpo.hypers[k])},
                      {"config", hpo::to_json(r.best)},
                      {"shard_size", sc.clients[k].nas.nas_train.size()},
                      {"eps_budget", eps_json(cfg.eps_for(k))},
                      {"predicted_acc", r.best_predicted},
                      {"best_observed_acc", r.best_observed_acc},
                      {"trained_trials", trained},
                      {"max_eps_planned", max_planned},
                      {"over_budget_trials", over}};
    write_artifact(manifest, dir / "hpo" / client_file("client", k, ".json"), doc.dump(2) + "\n");
    write_artifact(manifest, dir / "hpo" / client_file("bo_client", k, ".csv"),
                   hpo::trace_csv(r.trace));
    per.push_back(doc);
    spdlog::info("client {}: eta {:.4g} q {:.3g} C {:.3g} sigma {:.3g} (val {:.4f})", k,
                 hpo.hypers[k].eta, hpo.hypers[k].q, hpo.hypers[k].C, hpo.hypers[k].sigma,
                 r.best_observed_acc);
  }
  write_artifact(manifest, dir / "hpo" / "summary.json", json{{"clients", per}}.dump(2) + "\n");
  manifest.finish();
  return kExitOk;
}

void save_training(ManifestGuard& manifest, const fs::path& tdir, const TrainOutcome& t) {
  write_artifact(manifest, tdir / "rounds.csv", fed::rounds_csv(t.reports));
  write_artifact(manifest, tdir / "summary.json", t.summary.dump(2) + "\n");
  for (const auto& c : t.clients) {
    const fs::path model = tdir / "models" / client_file("client", c.id, ".model");
    write_model(model, c.model);
    manifest.add(model);
    write_artifact(manifest, tdir / "models" / client_file("client", c.id, ".genome"),
                   space::encode(c.genome) + "\n");
  }
}

void log_summary(const json& s) {
  const json& rtt = s["rounds_to_target"];
  spdlog::info("mean acc {:.4f} +- {:.4f}, rounds to {:.2f}: {}", s["mean_acc"].get<double>(),
               s["std_acc"].get<double>(), s["target_acc"].get<double>(),
               rtt.is_null() ? std::string("not reached") : std::to_string(rtt.get<int>()));
}

int cmd_train(const ExperimentConfig& cfg, bool no_nas, bool no_hpo, bool local_only) {
  const fs::path dir = resolve_output_dir(cfg);
  const auto genomes = no_nas ? default_genomes(cfg) : load_genomes(dir / "nas", cfg.clients);
  const auto hypers = no_hpo ? default_hypers(cfg) : load_hypers(dir / "hpo", cfg.clients);
  ManifestGuard manifest(dir, cfg, local_only ? "train_local" : "train");
  const Scenario sc = build_scenario(cfg);
  log_warnings(sc.warnings);
  spdlog::info("{} rounds, {} clients{}", cfg.federation.rounds, cfg.clients,
               local_only ? ", local training only" : "");
  const TrainOutcome t = run_train(cfg, sc, genomes, hypers, {.local_only = local_only});
  save_training(manifest, dir / (local_only ? "train_local" : "train"), t);
  log_summary(t.summary);
  manifest.finish();
  return kExitOk;
}

std::vector<nn::Network> load_bottoms(const fs::path& run_dir, const ExperimentConfig& cfg,
                                      const space::SpaceConfig& space) {
  const fs::path models = run_dir / "train" / "models";
  std::vector<nn::Network> out;
  for (int k = 0; k < cfg.clients; ++k) {
    const fs::path g = models / client_file("client", k, ".genome");
    const fs::path m = models / client_file("client", k, ".model");
    if (!fs::exists(g) || !fs::exists(m))
      throw InvalidArgument("missing trained model for client " + std::to_string(k) + " in " +
                            models.string());
    out.push_back(read_model(m, space::decode(trim(read_text(g))), space).bottom);
  }
  return out;
}

int cmd_attack(const ExperimentConfig& cfg, const std::vector<std::string>& run_flags,
               bool train_missing) {
  const fs::path dir = resolve_output_dir(cfg);
  std::map<std::string, std::string> runs = cfg.attack.runs;
  for (const auto& r : run_flags) {
    const auto eq = r.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == r.size())
      throw InvalidArgument("--run expects LABEL=DIR, got '" + r + "'");
    const std::string label = eps_label(parse_eps_text(r.substr(0, eq)));
    runs[label] = r.substr(eq + 1);
  }
  ManifestGuard manifest(dir, cfg, "attack");
  const Scenario sc = build_scenario(cfg);
  log_warnings(sc.warnings);

  std::map<double, std::vector<nn::Network>> bottoms;
  for (double eps : cfg.attack.eps) {
    const std::string label = eps_label(eps);
    if (auto it = runs.find(label); it != runs.end()) {
      bottoms[eps] = load_bottoms(it->second, cfg, sc.space);
      spdlog::info("eps {}: models from {}", label, it->second);
      continue;
    }
    if (!train_missing)
      throw InvalidArgument("no trained models for eps " + label +
                            " (pass --run " + label + "=DIR or --train-missing)");
    const ExperimentConfig at = with_eps(cfg, eps);
    const fs::path nas_dir = dir / "nas";
    const auto genomes = fs::exists(nas_dir / client_file("client", 0, ".genome"))
                             ? load_genomes(nas_dir, cfg.clients)
                             : default_genomes(cfg);
    spdlog::info("eps {}: training {} rounds", label, cfg.federation.rounds);
    const TrainOutcome t = run_train(at, sc, genomes, default_hypers(at));
    // Laid out like a train run so it can be passed back with --run.
    save_training(manifest, dir / "attack" / "runs" / ("eps_" + label) / "train", t);
    std::vector<nn::Network> nets;
    for (const auto& c : t.clients) nets.push_back(c.model.bottom);
    bottoms[eps] = std::move(nets);
  }

  const AttackOutcome a = run_attack(cfg, sc, bottoms);
  write_artifact(manifest, dir / "attack" / "attack.csv", analysis::attack_csv(a.reports));
  json rows = json::array();
  for (const auto& r : a.reports) {
    rows.push_back({{"eps", eps_json(r.eps)},
                    {"seed", r.seed},
                    {"mse", r.failed ? json(nullptr) : json(r.mse)},
                    {"failed", r.failed},
                    {"failure", r.failure}});
  }
  json summary = {{"rows", rows}, {"seeds", cfg.attack.seeds}};
  if (bottoms.size() < 2) {
    const std::string notice = "ordering check skipped: only one privacy setting";
    spdlog::warn("{}", notice);
    summary["ordering_checked"] = false;
    summary["notice"] = notice;
  } else {
    json per_seed = json::object();
    for (const auto& [seed, ok] : a.ordering) per_seed[std::to_string(seed)] = ok;
    summary["ordering_checked"] = true;
    summary["ordering"] = per_seed;
    summary["ordering_holds"] = a.ordering_holds;
    summary["ordering_majority"] = 2 * a.ordering_holds > cfg.attack.seeds;
    spdlog::info("MSE ordering holds in {}/{} seeds", a.ordering_holds, cfg.attack.seeds);
  }
  write_artifact(manifest, dir / "attack" / "summary.json", summary.dump(2) + "\n");
  manifest.finish();
  return kExitOk;
}

struct BoundInputs {
  analysis::ConvergenceConstants constants;
  double loss0 = 0;
  double grad_norm_sq_sum = 0;
};

BoundInputs read_bound_inputs(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw InvalidArgument(path.string() + ": expected an object");
  std::vector<std::string> missing, unknown;
  for (const char* key : {"constants", "loss0", "grad_norm_sq_sum"})
    if (!j.contains(key)) missing.push_back(key);
  for (const auto& [key, _] : j.items())
    if (key != "constants" && key != "loss0" && key != "grad_norm_sq_sum") unknown.push_back(key);
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
  };
  if (!missing.empty() || !unknown.empty())
    throw InvalidArgument(path.string() + ": " +
                          (missing.empty() ? "" : "missing " + join(missing)) +
                          (missing.empty() || unknown.empty() ? "" : "; ") +
                          (unknown.empty() ? "" : "unknown " + join(unknown)));
  if (!j["loss0"].is_number() || !j["grad_norm_sq_sum"].is_number())
    throw InvalidArgument(path.string() + ": loss0 and grad_norm_sq_sum must be numbers");
  return {analysis::constants_from_json(j["constants"]), j["loss0"].get<double>(),
          j["grad_norm_sq_sum"].get<double>()};
}

int cmd_bounds(const ExperimentConfig& cfg, const std::string& constants_file,
               const std::string& t_sweep) {
  const fs::path dir = resolve_output_dir(cfg);
  const BoundInputs in = read_bound_inputs(constants_file);
  std::vector<double> ts;
  if (!t_sweep.empty()) {
    for (const auto& part : split_list(t_sweep)) {
      size_t used = 0;
      double v = 0;
      try {
        v = std::stod(part, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != part.size() || !(v > 0) || !std::isfinite(v))
        throw InvalidArgument("--t-sweep: '" + part + "' is not a positive number");
      ts.push_back(v);
    }
  }
  ManifestGuard manifest(dir, cfg, "bounds");
  const json report = analysis::bound_report(in.constants, in.loss0, in.grad_norm_sq_sum);
  write_artifact(manifest, dir / "bounds" / "report.json", report.dump(2) + "\n");
  std::printf("%s\n", report.dump(2).c_str());
  if (!report["corollary2_feasible"].get<bool>())
    spdlog::warn("average-gradient bound infeasible: {}",
                 report["corollary2_error"].get<std::string>());
  if (!ts.empty()) {
    if (report["corollary2_feasible"].get<bool>()) {
      write_artifact(manifest, dir / "bounds" / "t_sweep.csv", analysis::t_sweep_csv(in.constants, ts));
    } else {
      spdlog::warn("T sweep skipped: the bound is infeasible for these constants");
    }
  }
  manifest.finish();
  return kExitOk;
}

std::optional<json> read_json_if(const fs::path& p) {
  if (!fs::exists(p)) return std::nullopt;
  try {
    return json::parse(read_text(p));
  } catch (const json::parse_error& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

std::string fmt_num(const json& v, const char* spec = "%.4f") {
  if (v.is_null()) return "-";
  if (v.is_string()) return v.get<std::string>();
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v.get<double>());
  return buf;
}

int cmd_report(const ExperimentConfig& cfg) {
  const fs::path dir = resolve_output_dir(cfg);
  std::ostringstream md;
  md << "# Run report\n\n"
     << "Profile `" << cfg.profile << "`, seed " << cfg.seed << ", " << cfg.clients
     << " clients, config hash `" << config_hash(cfg) << "`.\n";
  bool any = false;

  if (auto nas = read_json_if(dir / "nas" / "summary.json")) {
    any = true;
    md << "\n## Architectures\n\n| client | genome | fitness | params |\n|---|---|---|---|\n";
    for (const auto& c : (*nas)["clients"])
      md << "| " << c["id"].get<int>() << " | `" << c["genome"].get<std::string>() << "` | "
         << fmt_num(c["fitness"]) << " | " << c["params"].get<size_t>() << " |\n";
  }
  if (auto hpo = read_json_if(dir / "hpo" / "summary.json")) {
    any = true;
    md << "\n## Hyperparameters\n\n"
       << "| client | eta | q | C | sigma | eps budget | max planned eps | val acc |\n"
       << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& c : (*hpo)["clients"]) {
      const json& h = c["hyper"];
      md << "| " << c["id"].get<int>() << " | " << fmt_num(h["eta"], "%.4g") << " | "
         << fmt_num(h["q"], "%.3g") << " | " << fmt_num(h["C"], "%.3g") << " | "
         << fmt_num(h["sigma"], "%.3g") << " | " << fmt_num(c["eps_budget"], "%g") << " | "
         << fmt_num(c["max_eps_planned"], "%.3f") << " | " << fmt_num(c["best_observed_acc"])
         << " |\n";
    }
  }
  for (const char* name : {"train", "train_local"}) {
    auto s = read_json_if(dir / name / "summary.json");
    if (!s) continue;
    any = true;
    const json& rtt = (*s)["rounds_to_target"];
    md << "\n## " << (std::string(name) == "train" ? "Federated training" : "Local training only")
       << "\n\nMean accuracy " << fmt_num((*s)["mean_acc"]) << " +- " << fmt_num((*s)["std_acc"])
       << " after " << (*s)["rounds"].get<int>() << " rounds; rounds to "
       << fmt_num((*s)["target_acc"], "%.2f") << ": "
       << (rtt.is_null() ? std::string("not reached") : std::to_string(rtt.get<int>()))
       << ". Bytes up " << (*s)["bytes_up"].get<size_t>() << ", down "
       << (*s)["bytes_down"].get<size_t>() << ".\n\n"
       << "| client | genome | model MB | eps budget | eps spent | accuracy |\n"
       << "|---|---|---|---|---|---|\n";
    for (const auto& c : (*s)["clients"])
      md << "| " << c["id"].get<int>() << " | `" << c["genome"].get<std::string>() << "` | "
         << fmt_num(c["model_mb"], "%.3f") << " | " << fmt_num(c["eps_budget"], "%g") << " | "
         << fmt_num(c["eps_spent"], "%.3f") << " | " << fmt_num(c["final_acc"]) << " |\n";
  }
  if (auto a = read_json_if(dir / "attack" / "summary.json")) {
    any = true;
    md << "\n## Reconstruction attack\n\n| eps | seed | MSE |\n|---|---|---|\n";
    for (const auto& r : (*a)["rows"])
      md << "| " << fmt_num(r["eps"], "%g") << " | " << r["seed"].get<uint64_t>() << " | "
         << fmt_num(r["mse"], "%.5f") << " |\n";
    if ((*a)["ordering_checked"].get<bool>())
      md << "\nMSE ordering holds in " << (*a)["ordering_holds"].get<int>() << " of "
         << (*a)["seeds"].get<int>() << " seeds.\n";
    else
      md << "\n" << (*a)["notice"].get<std::string>() << ".\n";
  }
  if (auto b = read_json_if(dir / "bounds" / "report.json")) {
    any = true;
    md << "\n## Convergence bounds\n\n"
       << "- loss bound: " << fmt_num((*b)["theorem1"], "%.6g") << "\n"
       << "- loss bound with search terms: " << fmt_num((*b)["corollary1"], "%.6g") << "\n"
       << "- average squared gradient bound: " << fmt_num((*b)["corollary2"], "%.6g") << "\n"
       << "- largest head learning rate: " << fmt_num((*b)["max_eta_theta"]["value"], "%.6g")
       << "\n";
  }
  if (!any) throw InvalidArgument("nothing to report in " + dir.string());
  write_text(dir / "report.md", md.str());
  std::printf("%s", md.str().c_str());
  return kExitOk;
}

}  // namespace

int run_app(int argc, const char* const* argv) {
  CLI::App app{"Privacy-preserving federated architecture search"};
  app.require_subcommand(1);
  CommonOptions o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config (JSON)");
    sub->add_option("--profile", o.profile, "Built-in profile: desk or paper");
    sub->add_option("--seed", o.seed, "Root seed");
    sub->add_option("--threads", o.threads, "Worker threads (1 is fully deterministic)");
    sub->add_option("--clients", o.clients, "Number of clients");
    sub->add_option("--rounds", o.rounds, "Communication rounds");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--eps", o.eps, "Privacy budget: one value or a comma list, 'inf' disables DP");
    sub->add_flag("-v,--verbose", o.verbose, "Debug logging");
    sub->add_flag("-q,--quiet", o.quiet, "Warnings and errors only");
  };

  auto* nas = app.add_subcommand("nas", "Per-client architecture search");
  add_common(nas);

  bool no_nas = false, no_hpo = false, local_only = false, train_missing = false;
  auto* hpo = app.add_subcommand("hpo", "Per-client hyperparameter search under the budget");
  add_common(hpo);
  hpo->add_flag("--no-nas", no_nas, "Use the default architecture");

  auto* train = app.add_subcommand("train", "Federated training rounds");
  add_common(train);
  train->add_flag("--no-nas", no_nas, "Use the default architecture");
  train->add_flag("--no-hpo", no_hpo, "Use the default hyperparameters");
  train->add_flag("--local-only", local_only, "Disable aggregation and broadcast");

  std::vector<std::string> runs;
  auto* attack = app.add_subcommand("attack", "Representation inversion attack");
  add_common(attack);
  attack->add_option("--run", runs, "Trained run for one eps: LABEL=DIR (repeatable)");
  attack->add_flag("--train-missing", train_missing, "Train any eps setting without a run");

  std::string constants, t_sweep;
  auto* bounds = app.add_subcommand("bounds", "Evaluate the convergence bounds");
  add_common(bounds);
  bounds->add_option("--constants", constants, "Constants file (JSON)")->required();
  bounds->add_option("--t-sweep", t_sweep, "Comma list of T values for a bound-vs-T CSV");

  auto* report = app.add_subcommand("report", "Summarise the artifacts of a run");
  add_common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto logger = spdlog::stderr_color_mt("pfnas");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(o.verbose ? spdlog::level::debug
                    : o.quiet ? spdlog::level::warn
                              : spdlog::level::info);
  auto done = [&](int code) {
    spdlog::drop("pfnas");
    return code;
  };

  try {
    const ExperimentConfig cfg = load(o);
    if (*nas) return done(cmd_nas(cfg));
    if (*hpo) return done(cmd_hpo(cfg, no_nas));
    if (*train) return done(cmd_train(cfg, no_nas, no_hpo, local_only));
    if (*attack) return done(cmd_attack(cfg, runs, train_missing));
    if (*bounds) return done(cmd_bounds(cfg, constants, t_sweep));
    return done(cmd_report(cfg));
  } catch (const InvalidArgument& e) {
    spdlog::error("{}", e.what());
    return done(kExitConfig);
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return done(kExitConfig);
  } catch (const InfeasibleError& e) {
    spdlog::error("infeasible: {}", e.what());
    return done(kExitInfeasible);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return done(kExitRuntime);
  }
}

}  // namespace pfnas::cli
