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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "rankmech/env.hpp"
#include "rankmech/errors.hpp"
#include "rankmech/rng.hpp"

using namespace rankmech;

namespace {

double surplus_of(const Allocation& x, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w[i];
  return s;
}

std::vector<int> winners(const Allocation& x) {
  std::vector<int> out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.5) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace

TEST_CASE("single item surplus maximization") {
  auto env = StageEnvironment::single_item(3);
  CHECK(winners(surplus_max(env, {3.0, 5.0, 2.0})) == std::vector<int>{1});
  CHECK(winners(surplus_max(env, {-1.0, -2.0, -3.0})).empty());
  // Exact tie between serving agent 1 and agent 2: lower index wins.
  CHECK(winners(surplus_max(env, {4.0, 4.0, 1.0})) == std::vector<int>{0});
  // Exact tie with the empty set: nobody is served.
  CHECK(winners(surplus_max(env, {0.0, -1.0, -1.0})).empty());
}

TEST_CASE("single-minded combinatorial auction") {
  auto env = StageEnvironment::single_minded(2, {{1}, {2}, {1, 2}});
  CHECK(env.feasible_sets().size() == 5);  // {}, {0}, {0,1}, {1}, {2}
  CHECK(winners(surplus_max(env, {3.0, 3.0, 5.0})) == std::vector<int>{0, 1});
  CHECK(winners(surplus_max(env, {3.0, 1.0, 5.0})) == std::vector<int>{2});
}

TEST_CASE("k-unit environments") {
  auto at_most = StageEnvironment::k_unit(3, 2);
  CHECK(winners(surplus_max(at_most, {1.0, -1.0, 4.0})) == std::vector<int>{0, 2});

  auto exactly = StageEnvironment::exact_k_unit(3, 2);
  const auto x = surplus_max(exactly, {1.0, -1.0, 4.0});
  CHECK(winners(x) == std::vector<int>{0, 2});
  CHECK(surplus_of(x, {1.0, -1.0, 4.0}) == doctest::Approx(5.0));
  // With all weights negative the exactly-2 system still serves two agents.
  CHECK(winners(surplus_max(exactly, {-5.0, -1.0, -2.0})) == std::vector<int>{1, 2});
}

TEST_CASE("explicit allocation lists") {
  auto env = StageEnvironment::explicit_allocations({{0, 0}, {1, 0}, {0, 1}});
  CHECK(winners(surplus_max(env, {2.0, 7.0})) == std::vector<int>{1});
  CHECK_THROWS_AS(StageEnvironment::explicit_allocations({{0, 2}}), Error);
}

TEST_CASE("position environments match assortatively") {
  auto env = StageEnvironment::position({1.0, 0.5, 0.0});
  const auto x = surplus_max(env, {2.0, 9.0, 4.0});
  CHECK(x[1] == doctest::Approx(1.0));
  CHECK(x[2] == doctest::Approx(0.5));
  CHECK(x[0] == doctest::Approx(0.0));
}

TEST_CASE("surplus maximization dominates every feasible set") {
  RngStream rng(123);
  for (const auto& env : {StageEnvironment::single_item(4), StageEnvironment::k_unit(4, 2),
                          StageEnvironment::exact_k_unit(4, 2),
                          StageEnvironment::single_minded(3, {{1}, {2}, {3}, {1, 2, 3}})}) {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> w(env.agents());
      for (auto& wi : w) wi = rng.uniform(-2.0, 3.0);
      const auto x = surplus_max(env, w);
      const double best = surplus_of(x, w);
      for (const auto& set : env.feasible_sets()) {
        double s = 0.0;
        for (int a : set) s += w[a];
        CHECK(best >= s - 1e-12);
      }
    }
  }
}

TEST_CASE("raising a weight never removes an agent from the winning set") {
  RngStream rng(321);
  for (const auto& env : {StageEnvironment::single_item(4), StageEnvironment::k_unit(4, 2),
                          StageEnvironment::exact_k_unit(4, 3),
                          StageEnvironment::single_minded(3, {{1}, {2}, {3}, {1, 2, 3}})}) {
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<double> w(env.agents());
      for (auto& wi : w) wi = rng.uniform(-2.0, 3.0);
      const auto x = surplus_max(env, w);
      const int agent = rng.uniform_int(env.agents());
      if (x[agent] < 0.5) continue;
      std::vector<double> w2 = w;
      w2[agent] += rng.uniform(0.0, 5.0);
      CHECK(surplus_max(env, w2)[agent] > 0.5);
    }
  }
}

TEST_CASE("infinite weights dominate and still respect the finite remainder") {
  const double inf = std::numeric_limits<double>::infinity();
  auto env = StageEnvironment::single_minded(3, {{1}, {2}, {3}, {1, 2, 3}});
  // Agent 0 promoted: serving {0, 1, 2} beats {0} and beats {3} alone.
  CHECK(winners(surplus_max(env, {inf, 1.0, 2.0, 10.0})) == std::vector<int>{0, 1, 2});
  // Agents 0 and 3 both promoted but conflicting: at most one infinity can
  // be served, and the finite remainder breaks the tie in favor of packing
  // the small bundles around agent 0.
  CHECK(winners(surplus_max(env, {inf, 0.5, 0.25, inf})) == std::vector<int>{0, 1, 2});
}

TEST_CASE("threshold payments") {
  auto item = StageEnvironment::single_item(3);
  CHECK(threshold_payment(item, {3.0, 5.0, 2.0}, 1) == doctest::Approx(3.0).epsilon(1e-6));
  CHECK_THROWS_AS(threshold_payment(item, {3.0, 5.0, 2.0}, 0), NotAWinner);

  auto sm = StageEnvironment::single_minded(2, {{1}, {2}, {1, 2}});
  CHECK(threshold_payment(sm, {3.0, 3.0, 5.0}, 0) == doctest::Approx(2.0).epsilon(1e-6));

  auto ku = StageEnvironment::k_unit(3, 2);
  CHECK(threshold_payment(ku, {5.0, 4.0, 1.0}, 0) == doctest::Approx(1.0).epsilon(1e-6));

  // Exactly-2 system: agent 0 stays served down to a negative weight.
  auto exact = StageEnvironment::exact_k_unit(3, 2);
  CHECK(threshold_payment(exact, {1.0, -1.0, 4.0}, 0) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("threshold payment is the critical served weight") {
  RngStream rng(77);
  const double eps = 1e-6;
  for (const auto& env : {StageEnvironment::single_item(4), StageEnvironment::k_unit(4, 2),
                          StageEnvironment::single_minded(3, {{1}, {2}, {3}, {1, 2, 3}})}) {
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> w(env.agents());
      for (auto& wi : w) wi = rng.uniform(0.0, 3.0);
      const auto x = surplus_max(env, w);
      for (int a = 0; a < env.agents(); ++a) {
        if (x[a] < 0.5) continue;
        const double t = threshold_payment(env, w, a);
        std::vector<double> wt = w;
        wt[a] = t + eps;
        CHECK(surplus_max(env, wt)[a] > 0.5);
        wt[a] = t - eps;
        CHECK(surplus_max(env, wt)[a] < 0.5);
      }
    }
  }
}

TEST_CASE("enumeration budget is enforced") {
  std::vector<std::vector<int>> bundles;
  std::vector<std::vector<int>> distinct_items;
  for (int i = 1; i <= 25; ++i) bundles.push_back({i});
  CHECK_THROWS_AS(StageEnvironment::single_minded(25, bundles, 1u << 10), TooLarge);
}
