// Copyright 2026 The Rankmech Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rankmech/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rankmech/errors.hpp"

namespace rankmech {
namespace {

// Emits winner sets in lexicographic winner-index order: the empty set
// first, then sets extending by ascending next agent.
template <typename Feasible>
std::vector<std::vector<int>> enumerate_sets(int n, std::uint64_t budget, Feasible&& feasible) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::uint64_t visited = 0;
  auto rec = [&](auto&& self, int next) -> void {
    if (++visited > budget) throw TooLarge("feasible-set enumeration budget exceeded");
    if (feasible(cur)) out.push_back(cur);
    for (int a = next; a < n; ++a) {
      cur.push_back(a);
      self(self, a + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

struct Surplus {
  int infinities = 0;
  double finite = 0.0;

  bool operator>(const Surplus& o) const {
    if (infinities != o.infinities) return infinities > o.infinities;
    return finite > o.finite;
  }
};

Surplus set_surplus(const std::vector<int>& set, const std::vector<double>& weights) {
  Surplus s;
  for (int a : set) {
    if (std::isinf(weights[a])) {
      ++s.infinities;
    } else {
      s.finite += weights[a];
    }
  }
  return s;
}

}  // namespace

StageEnvironment StageEnvironment::single_item(int n) {
  if (n < 1) throw Error("single_item: need n >= 1");
  StageEnvironment env;
  env.n_ = n;
  env.label_ = "single_item";
  env.sets_.push_back({});
  for (int a = 0; a < n; ++a) env.sets_.push_back({a});
  return env;
}

StageEnvironment StageEnvironment::k_unit(int n, int k) {
  if (n < 1 || k < 1 || k > n) throw InvalidK("k_unit: need 1 <= k <= n");
  StageEnvironment env;
  env.n_ = n;
  std::ostringstream name;
  name << "k_unit[" << k << "]";
  env.label_ = name.str();
  env.sets_ = enumerate_sets(n, kDefaultBudget, [&](const std::vector<int>& s) {
    return static_cast<int>(s.size()) <= k;
  });
  return env;
}

StageEnvironment StageEnvironment::exact_k_unit(int n, int k) {
  if (n < 1 || k < 1 || k > n) throw InvalidK("exact_k_unit: need 1 <= k <= n");
  StageEnvironment env;
  env.n_ = n;
  std::ostringstream name;
  name << "exact_k_unit[" << k << "]";
  env.label_ = name.str();
  env.sets_ = enumerate_sets(n, kDefaultBudget, [&](const std::vector<int>& s) {
    return static_cast<int>(s.size()) == k;
  });
  return env;
}

StageEnvironment StageEnvironment::position(std::vector<double> weights) {
  if (weights.empty()) throw Error("position: need at least one weight");
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] < 0.0 || weights[j] > 1.0) throw Error("position weights must lie in [0,1]");
    if (j > 0 && weights[j] > weights[j - 1] + 1e-12) {
      throw Error("position weights must be weakly decreasing");
    }
  }
  StageEnvironment env;
  env.n_ = static_cast<int>(weights.size());
  env.position_ = true;
  env.weights_ = std::move(weights);
  env.label_ = "position";
  return env;
}

StageEnvironment StageEnvironment::single_minded(int items,
                                                 std::vector<std::vector<int>> bundles,
                                                 std::uint64_t enumeration_budget) {
  const int n = static_cast<int>(bundles.size());
  if (n < 1 || items < 1) throw Error("single_minded: need agents and items");
  std::vector<std::uint64_t> masks(n, 0);
  if (items > 63) throw TooLarge("single_minded: at most 63 items supported");
  for (int a = 0; a < n; ++a) {
    if (bundles[a].empty()) throw Error("single_minded: empty bundle");
    for (int item : bundles[a]) {
      if (item < 1 || item > items) throw Error("single_minded: item id out of range");
      masks[a] |= 1ULL << (item - 1);
    }
  }
  StageEnvironment env;
  env.n_ = n;
  env.label_ = "single_minded";
  env.sets_ = enumerate_sets(n, enumeration_budget, [&](const std::vector<int>& s) {
    std::uint64_t used = 0;
    for (int a : s) {
      if (used & masks[a]) return false;
      used |= masks[a];
    }
    return true;
  });
  return env;
}

StageEnvironment StageEnvironment::explicit_allocations(std::vector<std::vector<int>> allocations) {
  if (allocations.empty()) throw Error("explicit: need at least one allocation");
  const int n = static_cast<int>(allocations.front().size());
  if (allocations.size() > kDefaultBudget) throw TooLarge("explicit: too many allocations");
  StageEnvironment env;
  env.n_ = n;
  env.label_ = "explicit";
  for (const auto& x : allocations) {
    if (static_cast<int>(x.size()) != n) throw Error("explicit: ragged allocation list");
    std::vector<int> winners;
    for (int a = 0; a < n; ++a) {
      if (x[a] != 0 && x[a] != 1) throw Error("explicit: allocations must be 0/1");
      if (x[a] == 1) winners.push_back(a);
    }
    env.sets_.push_back(std::move(winners));
  }
  std::sort(env.sets_.begin(), env.sets_.end());
  env.sets_.erase(std::unique(env.sets_.begin(), env.sets_.end()), env.sets_.end());
  return env;
}

Allocation surplus_max(const StageEnvironment& env, const std::vector<double>& weights) {
  if (static_cast<int>(weights.size()) != env.agents()) {
    throw Error("surplus_max: weight vector length mismatch");
  }
  if (env.is_position()) {
    // Assortative: highest weight gets the highest position weight.
    const int n = env.agents();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return weights[a] > weights[b];
    });
    Allocation x(n, 0.0);
    for (int pos = 0; pos < n; ++pos) x[order[pos]] = env.position_weights()[pos];
    return x;
  }
  const auto& sets = env.feasible_sets();
  if (sets.empty()) throw Error("surplus_max: no feasible allocation");
  std::size_t best = 0;
  Surplus best_surplus = set_surplus(sets[0], weights);
  for (std::size_t i = 1; i < sets.size(); ++i) {
    const Surplus s = set_surplus(sets[i], weights);
    if (s > best_surplus) {
      best = i;
      best_surplus = s;
    }
  }
  Allocation x(env.agents(), 0.0);
  for (int a : sets[best]) x[a] = 1.0;
  return x;
}

double threshold_payment(const StageEnvironment& env, const std::vector<double>& weights,
                         int winner) {
  if (winner < 0 || winner >= env.agents()) throw Error("threshold_payment: bad winner index");
  if (std::isinf(weights[winner])) throw Error("threshold_payment: winner weight must be finite");
  const double eps = 1e-12;
  {
    const Allocation x = surplus_max(env, weights);
    if (!(x[winner] > eps)) throw NotAWinner("threshold_payment: agent is not served");
  }
  std::vector<double> w = weights;
  auto served_at = [&](double weight) {
    w[winner] = weight;
    return surplus_max(env, w)[winner] > eps;
  };
  double hi = weights[winner];
  double step = std::max(1.0, std::abs(hi));
  double lo = std::min(0.0, hi) - step;
  int expansions = 0;
  while (served_at(lo)) {
    step *= 4.0;
    lo -= step;
    if (++expansions > 40) {
      throw UnboundedThreshold("threshold_payment: served at arbitrarily negative weight");
    }
  }
  // Invariant: served at hi, not served at lo.
  while (hi - lo > 1e-9 * std::max(1.0, std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    if (served_at(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace rankmech
