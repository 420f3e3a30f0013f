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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "pfnas/common/error.h"
#include "pfnas/data/dataset.h"

namespace pfnas::data {
namespace {

constexpr int kMaxRedraws = 100;

std::vector<std::vector<size_t>> by_class(std::span<const int> labels, int num_classes) {
  std::vector<std::vector<size_t>> out(num_classes);
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw InvalidArgument("label " + std::to_string(labels[i]) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    out[labels[i]].push_back(i);
  }
  return out;
}

// Splits `total` into integer counts proportional to `weights` by
// largest-remainder rounding; ties go to the lower index.
std::vector<size_t> largest_remainder(size_t total, const std::vector<double>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<size_t> counts(weights.size(), 0);
  if (total == 0) return counts;
  std::vector<double> share(weights.size());
  for (size_t k = 0; k < weights.size(); ++k)
    share[k] = sum > 0 ? weights[k] / sum * total : double(total) / weights.size();
  size_t assigned = 0;
  std::vector<std::pair<double, size_t>> rem;
  for (size_t k = 0; k < share.size(); ++k) {
    counts[k] = static_cast<size_t>(std::floor(share[k]));
    assigned += counts[k];
    rem.push_back({share[k] - counts[k], k});
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t r = 0; assigned < total; ++r, ++assigned) ++counts[rem[r % rem.size()].second];
  return counts;
}

std::vector<double> dirichlet(int k, double alpha, Rng& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> w(k);
  double sum = 0;
  for (double& x : w) sum += (x = gamma(rng));
  // Tiny alpha can underflow every draw; the limit is a point mass.
  if (!(sum > 0)) {
    std::fill(w.begin(), w.end(), 0.0);
    w[std::uniform_int_distribution<int>(0, k - 1)(rng)] = 1.0;
  }
  return w;
}

}  // namespace

nlohmann::json PartitionPlan::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (size_t k = 0; k < clients.size(); ++k) j[std::to_string(k)] = clients[k];
  return j;
}

bool is_disjoint_cover(const PartitionPlan& plan, size_t n) {
  std::vector<char> seen(n, 0);
  size_t count = 0;
  for (const auto& client : plan.clients)
    for (size_t i : client) {
      if (i >= n || seen[i]) return false;
      seen[i] = 1;
      ++count;
    }
  return count == n;
}

PartitionPlan partition_dirichlet(std::span<const int> labels, int num_classes,
                                  int clients, double alpha, Rng& rng, size_t min_size) {
  if (clients < 1) throw InvalidArgument("partition_dirichlet: clients must be >= 1");
  if (!(alpha > 0)) throw InvalidArgument("partition_dirichlet: alpha must be > 0");
  const auto classes = by_class(labels, num_classes);
  PartitionPlan plan;
  plan.scheme = "dirichlet(" + std::to_string(alpha) + ")";
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    plan.clients.assign(clients, {});
    for (const auto& members : classes) {
      std::vector<size_t> idx = members;
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto counts = largest_remainder(idx.size(), dirichlet(clients, alpha, rng));
      size_t pos = 0;
      for (int k = 0; k < clients; ++k)
        for (size_t c = 0; c < counts[k]; ++c) plan.clients[k].push_back(idx[pos++]);
    }
    const size_t floor = std::max<size_t>(min_size, 1);
    const bool too_small = std::any_of(plan.clients.begin(), plan.clients.end(),
                                       [&](const auto& c) { return c.size() < floor; });
    if (!too_small) break;
    if (attempt == kMaxRedraws - 1)
      plan.warnings.push_back("a client holds fewer than " + std::to_string(floor) +
                              " samples after " + std::to_string(kMaxRedraws) + " draws");
  }
  for (auto& c : plan.clients) std::sort(c.begin(), c.end());
  return plan;
}

PartitionPlan partition_class_subset(std::span<const int> labels, int num_classes,
                                     int clients, int classes_per_client, double skew,
                                     Rng& rng) {
  if (clients < 1) throw InvalidArgument("partition_class_subset: clients must be >= 1");
  if (classes_per_client < 1 || classes_per_client > num_classes)
    throw InvalidArgument("partition_class_subset: classes_per_client must be in [1, " +
                          std::to_string(num_classes) + "]");
  if (skew < 0) throw InvalidArgument("partition_class_subset: skew must be >= 0");
  // Every class needs a holder or the plan cannot cover all indices.
  if (static_cast<long>(clients) * classes_per_client < num_classes)
    throw InvalidArgument("partition_class_subset: clients * classes_per_client must be >= " +
                          std::to_string(num_classes));
  const auto classes = by_class(labels, num_classes);

  // Client k holds the run of classes starting at k * c (mod num_classes);
  // its skew rank for run position j is (j + k) mod c so favourites differ.
  // holders[class] = (client, skew rank).
  std::vector<std::vector<std::pair<int, int>>> holders(num_classes);
  for (int k = 0; k < clients; ++k)
    for (int j = 0; j < classes_per_client; ++j)
      holders[(static_cast<long>(k) * classes_per_client + j) % num_classes].push_back(
          {k, (j + k) % classes_per_client});

  PartitionPlan plan;
  plan.scheme = "class-subset(" + std::to_string(classes_per_client) + ", " +
                std::to_string(skew) + ")";
  plan.clients.assign(clients, {});
  for (int c = 0; c < num_classes; ++c) {
    std::vector<size_t> idx = classes[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto& h = holders[c];
    std::vector<double> w;
    for (const auto& [k, j] : h) w.push_back(std::pow(0.5, skew * j));
    std::vector<size_t> counts;
    if (idx.size() >= h.size()) {
      // One guaranteed sample per holder keeps every label set full.
      counts = largest_remainder(idx.size() - h.size(), w);
      for (size_t& n : counts) ++n;
    } else {
      counts = largest_remainder(idx.size(), w);
      plan.warnings.push_back("class " + std::to_string(c) + " has fewer samples than holders");
    }
    size_t pos = 0;
    for (size_t r = 0; r < h.size(); ++r)
      for (size_t n = 0; n < counts[r]; ++n) plan.clients[h[r].first].push_back(idx[pos++]);
  }
  for (auto& cl : plan.clients) {
    if (cl.empty()) plan.warnings.push_back("a client received no samples");
    std::sort(cl.begin(), cl.end());
  }
  return plan;
}

std::pair<std::vector<size_t>, std::vector<size_t>> stratified_split(
    std::span<const size_t> indices, std::span<const int> labels, size_t first, Rng& rng) {
  if (first > indices.size()) throw InvalidArgument("stratified_split: first exceeds size");
  std::map<int, std::vector<size_t>> groups;
  for (size_t i : indices) groups[labels[i]].push_back(i);
  std::vector<double> w;
  std::vector<int> keys;
  for (auto& [y, g] : groups) {
    std::shuffle(g.begin(), g.end(), rng);
    keys.push_back(y);
    w.push_back(static_cast<double>(g.size()));
  }
  auto take = largest_remainder(first, w);
  // Rounding can ask a small class for more than it has; move the excess.
  size_t excess = 0;
  for (size_t g = 0; g < keys.size(); ++g) {
    const size_t have = groups[keys[g]].size();
    if (take[g] > have) {
      excess += take[g] - have;
      take[g] = have;
    }
  }
  for (size_t g = 0; excess > 0 && g < keys.size(); ++g) {
    const size_t room = groups[keys[g]].size() - take[g];
    const size_t add = std::min(room, excess);
    take[g] += add;
    excess -= add;
  }
  std::pair<std::vector<size_t>, std::vector<size_t>> out;
  for (size_t g = 0; g < keys.size(); ++g) {
    const auto& grp = groups[keys[g]];
    out.first.insert(out.first.end(), grp.begin(), grp.begin() + take[g]);
    out.second.insert(out.second.end(), grp.begin() + take[g], grp.end());
  }
  std::shuffle(out.first.begin(), out.first.end(), rng);
  std::shuffle(out.second.begin(), out.second.end(), rng);
  return out;
}

NasSplit split_nas_subsets(std::span<const size_t> shard, std::span<const int> labels,
                           Rng& rng, const NasSizes& sizes) {
  if (!(sizes.max_fraction > 0 && sizes.max_fraction <= 1) || sizes.train == 0)
    throw InvalidArgument("NAS sizes need train > 0 and max_fraction in (0, 1]");
  NasSplit s;
  size_t n_train = sizes.train, n_val = sizes.val, n_test = sizes.test;
  const size_t want = n_train + n_val + n_test;
  const size_t room = static_cast<size_t>(std::floor(sizes.max_fraction * shard.size()));
  if (room < want) {
    // sizes / gcd are the smallest integer shares of the requested ratio.
    const size_t base = std::gcd(n_train, std::gcd(n_val, n_test));
    const size_t unit = room / (want / base);
    n_train = sizes.train / base * unit;
    n_val = sizes.val / base * unit;
    n_test = sizes.test / base * unit;
    s.warnings.push_back("shard of " + std::to_string(shard.size()) + " samples leaves room for " +
                         std::to_string(room) + " of " + std::to_string(want) +
                         " NAS samples; subsets scaled to " +
                         std::to_string(n_train) + "/" + std::to_string(n_val) + "/" +
                         std::to_string(n_test));
  }
  auto [nas, rest] = stratified_split(shard, labels, n_train + n_val + n_test, rng);
  s.remainder = std::move(rest);
  auto [train, held] = stratified_split(nas, labels, n_train, rng);
  auto [val, test] = stratified_split(held, labels, n_val, rng);
  s.nas_train = std::move(train);
  s.nas_val = std::move(val);
  s.nas_test = std::move(test);
  return s;
}

}  // namespace pfnas::data
