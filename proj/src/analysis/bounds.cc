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
#include "pfnas/analysis/bounds.h"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "pfnas/common/error.h"

namespace pfnas::analysis {
namespace {

// Reflection by hand: name and member pointer, in schema order.
using Field = double ConvergenceConstants::*;
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> f = {
      {"B_grad", &ConvergenceConstants::B_grad},
      {"L", &ConvergenceConstants::L},
      {"var_sigma2", &ConvergenceConstants::var_sigma2},
      {"noise_delta", &ConvergenceConstants::noise_delta},
      {"C", &ConvergenceConstants::C},
      {"d", &ConvergenceConstants::d},
      {"E", &ConvergenceConstants::E},
      {"eta_w", &ConvergenceConstants::eta_w},
      {"eta_theta", &ConvergenceConstants::eta_theta},
      {"alpha_dev", &ConvergenceConstants::alpha_dev},
      {"p", &ConvergenceConstants::p},
      {"Delta", &ConvergenceConstants::Delta},
      {"G", &ConvergenceConstants::G},
      {"T", &ConvergenceConstants::T},
  };
  return f;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

void ConvergenceConstants::validate() const {
  for (const auto& [name, field] : fields()) {
    const double v = this->*field;
    if (!std::isfinite(v) || v < 0)
      throw InvalidArgument("constant " + name + " must be finite and non-negative");
  }
  if (T <= 0) throw InvalidArgument("constant T must be positive");
}

const std::vector<std::string>& constant_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& f : fields()) n.push_back(f.first);
    return n;
  }();
  return names;
}

ConvergenceConstants constants_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("constants must be a JSON object");
  ConvergenceConstants c;
  std::string missing, unknown;
  std::set<std::string> known;
  for (const auto& [name, field] : fields()) {
    known.insert(name);
    const auto it = j.find(name);
    if (it == j.end() || !it->is_number()) {
      missing += (missing.empty() ? "" : ", ") + name;
      continue;
    }
    c.*field = it->get<double>();
  }
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  if (!missing.empty() || !unknown.empty())
    throw InvalidArgument((missing.empty() ? "" : "missing constants: " + missing) +
                          (missing.empty() || unknown.empty() ? "" : "; ") +
                          (unknown.empty() ? "" : "unknown constants: " + unknown));
  c.validate();
  return c;
}

nlohmann::json to_json(const ConvergenceConstants& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, field] : fields()) j[name] = c.*field;
  return j;
}

double noise_term(const ConvergenceConstants& c) {
  return c.var_sigma2 + c.d * c.noise_delta * c.noise_delta * c.C * c.C;
}

double theorem1_rhs(const ConvergenceConstants& c, double loss0, double grad_norm_sq_sum) {
  const double eta = c.eta_w;
  return loss0 - (eta * c.p - c.L * eta * eta / 2) * grad_norm_sq_sum +
         c.E * c.L * eta * eta / 2 * noise_term(c);
}

double corollary1_rhs(const ConvergenceConstants& c, double loss0, double grad_norm_sq_sum) {
  return theorem1_rhs(c, loss0, grad_norm_sq_sum) + c.eta_w * c.E * c.B_grad * c.B_grad +
         c.eta_theta * c.B_grad + c.L / 2 * c.alpha_dev * c.alpha_dev;
}

double descent_coefficient(const ConvergenceConstants& c) {
  return c.eta_w * c.p - c.L * c.eta_w * c.eta_w / 2;
}

double corollary2_avg_grad_bound(const ConvergenceConstants& c) {
  const double den = descent_coefficient(c);
  if (!(den > 0))
    throw InfeasibleError("eta_w p - L eta_w^2 / 2 = " + std::to_string(den) +
                          " is not positive; the learning rate admits no convergence bound");
  const double num = c.Delta / c.T + c.E * c.L * c.eta_w * c.eta_w / 2 * noise_term(c) +
                     c.eta_w * c.E * c.B_grad * c.B_grad + c.eta_theta * c.B_grad +
                     c.L / 2 * c.alpha_dev * c.alpha_dev;
  return num / den;
}

EtaThetaBound max_eta_theta(const ConvergenceConstants& c) {
  if (!(c.B_grad > 0)) return {};
  const double slack = c.alpha_dev - c.eta_w * c.E * c.B_grad;
  if (slack < 0) return {};
  return {slack / c.B_grad, true};
}

EtaWCheck check_eta_w(const ConvergenceConstants& c) {
  if (!(c.G > 0)) throw InvalidArgument("G must be positive");
  EtaWCheck r;
  const double a = c.p * c.G - c.E * c.B_grad * c.B_grad;
  const double X = c.G + c.E * noise_term(c);
  r.denominator = c.L * X * c.B_grad;
  r.radicand = a * a + 2 * c.L * X;
  if (r.denominator == 0) {
    r.error = "denominator L (G + E noise) B is zero";
    r.rhs = std::nan("");
    return r;
  }
  if (r.radicand < 0) {
    r.error = "negative radicand " + std::to_string(r.radicand);
    r.rhs = std::nan("");
    return r;
  }
  r.terms = {a / r.denominator, std::sqrt(r.radicand) / r.denominator,
             (c.eta_theta * c.B_grad + c.L / 2 * c.alpha_dev * c.alpha_dev) / r.denominator};
  r.rhs = r.terms[0] + r.terms[1] + r.terms[2];
  r.feasible = c.eta_w <= r.rhs;
  return r;
}

nlohmann::json bound_report(const ConvergenceConstants& c, double loss0,
                            double grad_norm_sq_sum) {
  nlohmann::json j;
  j["constants"] = to_json(c);
  j["loss0"] = loss0;
  j["grad_norm_sq_sum"] = grad_norm_sq_sum;
  j["noise_term"] = noise_term(c);
  j["theorem1"] = theorem1_rhs(c, loss0, grad_norm_sq_sum);
  j["corollary1"] = corollary1_rhs(c, loss0, grad_norm_sq_sum);
  j["descent_coefficient"] = descent_coefficient(c);
  try {
    j["corollary2"] = corollary2_avg_grad_bound(c);
    j["corollary2_feasible"] = true;
  } catch (const InfeasibleError& e) {
    j["corollary2"] = nullptr;
    j["corollary2_feasible"] = false;
    j["corollary2_error"] = e.what();
  }
  const EtaThetaBound et = max_eta_theta(c);
  j["max_eta_theta"] = {{"value", et.value}, {"feasible", et.feasible}};
  const EtaWCheck ew = check_eta_w(c);
  j["check_eta_w"] = {{"feasible", ew.feasible},
                      {"rhs", number_or_null(ew.rhs)},
                      {"terms", {ew.terms[0], ew.terms[1], ew.terms[2]}},
                      {"radicand", ew.radicand},
                      {"denominator", ew.denominator},
                      {"error", ew.error}};
  return j;
}

std::string t_sweep_csv(ConvergenceConstants c, const std::vector<double>& ts) {
  std::ostringstream out;
  out << "T,bound\n";
  char buf[64];
  for (double t : ts) {
    c.T = t;
    std::snprintf(buf, sizeof buf, "%.10g,%.10e\n", t, corollary2_avg_grad_bound(c));
    out << buf;
  }
  return out.str();
}

}  // namespace pfnas::analysis
