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
#include <numbers>
#include <sstream>
#include <vector>

#include "rankmech/bounds.hpp"
#include "rankmech/dist.hpp"
#include "rankmech/equilibrium.hpp"
#include "rankmech/errors.hpp"
#include "rankmech/numeric.hpp"
#include "rankmech/surrogate.hpp"

using namespace rankmech;

TEST_CASE("top-k allocation rule") {
  for (double q : {0.0, 0.3, 0.8, 1.0}) {
    CHECK(topk_rule(1, 2, q) == doctest::Approx(1.0 - q).epsilon(1e-12));
    CHECK(topk_rule(3, 3, q) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(topk_rule(1, 3, 0.5) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(topk_rule(0, 3, 0.5), InvalidK);

  // The drop term integrates back to the rule.
  for (int n : {2, 5, 9}) {
    for (int k = 1; k < n; ++k) {
      for (double q : {0.1, 0.45, 0.9}) {
        const double integral =
            integrate([&](double z) { return topk_rule_drop(k, n, z); }, q, 1.0, 1e-11);
        CHECK(integral == doctest::Approx(topk_rule(k, n, q)).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("approximation ratio expressions") {
  CHECK(rho(1, 2) == doctest::Approx(1.0 - 1.0 / std::sqrt(std::numbers::pi)).epsilon(1e-12));
  for (int n : {4, 7, 11}) {
    for (int k = 1; k < n; ++k) {
      CHECK(rho(k, n) == doctest::Approx(rho(n - k, n)).epsilon(1e-12));
    }
  }
  CHECK(eta(4, 8) == doctest::Approx(1.0 - std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(rho(0, 4), InvalidK);
  CHECK_THROWS_AS(eta(4, 4), InvalidK);
}

TEST_CASE("tabulated loss sums versus the quadrature oracle at (1,2)") {
  // The sums as tabulated evaluate to 0.75 at (k,n) = (1,2); the oracle loss
  // is 0.25 and the closed-form bound is 0.5. The sums are reported, never
  // asserted as ground truth.
  CHECK(loss_w_exact(1, 2) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(loss_bound_welfare(1, 2) == doctest::Approx(0.5).epsilon(1e-12));

  const auto w12 = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kWelfare, 1, 2);
  const double ratio = oracle_topk_vs_price(w12, 1, 2, Objective::kWelfare);
  CHECK(ratio == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(1.0 - ratio == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(loss_w_exact(1, 2) > loss_bound_welfare(1, 2));  // the recorded discrepancy
  CHECK(1.0 - ratio <= loss_bound_welfare(1, 2));
}

TEST_CASE("closed-form bounds shrink with balanced k") {
  CHECK(loss_bound_welfare(3, 6) < loss_bound_welfare(1, 2));
  CHECK(loss_bound_welfare(6, 12) < loss_bound_welfare(3, 6));
  CHECK(loss_bound_welfare(15, 30) < loss_bound_welfare(6, 12));
  CHECK(loss_bound_revenue(3, 6) == doctest::Approx(2.0 * loss_bound_welfare(3, 6)).epsilon(1e-12));
}

TEST_CASE("oracle ratios") {
  const auto w12 = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kWelfare, 1, 2);
  CHECK(oracle_topk_vs_price(w12, 2, 2, Objective::kWelfare) == doctest::Approx(1.0));

  const auto r12 = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kRevenue, 1, 2);
  const double rev_ratio = oracle_topk_vs_price(r12, 1, 2, Objective::kRevenue);
  // Triangular revenue curve: the ranking side integrates R over [0,1].
  CHECK(rev_ratio == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rev_ratio >= eta(1, 2));

  // Revenue oracle requires regularity.
  CHECK_THROWS_AS(oracle_topk_vs_price(w12, 1, 2, Objective::kRevenue), Error);
}

TEST_CASE("oracle matches the literal n-agent simulation") {
  RngStream rng(51);
  for (auto [k, n] : std::vector<std::pair<int, int>>{{1, 2}, {2, 5}, {3, 7}}) {
    const auto w = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kWelfare, k, n);
    const double oracle_w = oracle_topk_vs_price(w, k, n, Objective::kWelfare);
    RngStream sub = rng.substream(n * 10 + k);
    const McRatio mc_w = mc_topk_vs_price(w, k, n, Objective::kWelfare, 60000, sub);
    CHECK(std::abs(mc_w.ratio - oracle_w) <= 3.0 * std::max(mc_w.se, 1e-4));

    const auto r = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kRevenue, k, n);
    const double oracle_r = oracle_topk_vs_price(r, k, n, Objective::kRevenue);
    RngStream sub2 = rng.substream(n * 100 + k);
    const McRatio mc_r = mc_topk_vs_price(r, k, n, Objective::kRevenue, 60000, sub2);
    CHECK(std::abs(mc_r.ratio - oracle_r) <= 3.0 * std::max(mc_r.se, 1e-4));
  }
}

TEST_CASE("worst-case constructors minimize the ratio over normalized curves") {
  RngStream rng(52);
  const int k = 2, n = 5;
  const double kn = static_cast<double>(k) / n;

  const auto w = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kWelfare, k, n);
  const double worst_welfare = oracle_topk_vs_price(w, k, n, Objective::kWelfare);
  const auto r = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kRevenue, k, n);
  const double worst_revenue = oracle_topk_vs_price(r, k, n, Objective::kRevenue);

  for (int instance = 0; instance < 100; ++instance) {
    // Random concave increasing V with V(0) = 0, V(k/n) = 1: decreasing
    // positive slopes on a grid up to k/n, then further decreasing beyond.
    const int cells = 8;
    std::vector<double> slopes(2 * cells);
    double s = rng.uniform(1.0, 3.0);
    for (auto& v : slopes) {
      v = s;
      s *= rng.uniform(0.4, 1.0);
    }
    // Normalize the first half so V(k/n) = 1.
    double head = 0.0;
    for (int i = 0; i < cells; ++i) head += slopes[i] * (kn / cells);
    for (auto& v : slopes) v /= head;
    auto V = [&](double q) {
      double acc = 0.0;
      for (int i = 0; i < 2 * cells; ++i) {
        const double a = i < cells ? kn * i / cells : kn + (1.0 - kn) * (i - cells) / cells;
        const double b = i < cells ? kn * (i + 1) / cells : kn + (1.0 - kn) * (i - cells + 1) / cells;
        if (q <= a) break;
        acc += slopes[i] * (std::min(q, b) - a);
      }
      return acc;
    };
    const double ratio =
        integrate([&](double q) { return topk_rule_drop(k, n, q) * V(q); }, 0.0, 1.0, 1e-9) /
        V(kn);
    CHECK(ratio >= worst_welfare - 1e-6);

    // Random concave R with R(0) = R(1) = 0 and R(k/n) = 1: concave
    // increasing head as above, concave decreasing tail from 1 to 0.
    auto R = [&](double q) {
      if (q <= kn) return V(q) / V(kn);
      // Tail: 1 - (1 - t)^c shape reversed; c >= 1 keeps it concave.
      const double t = (q - kn) / (1.0 - kn);
      const double c = 1.0 + 0.02 * (instance % 50);
      return 1.0 - std::pow(t, c);
    };
    const double rev_ratio =
        integrate([&](double q) { return topk_rule_drop(k, n, q) * R(q); }, 0.0, 1.0, 1e-9) /
        R(kn);
    CHECK(rev_ratio >= worst_revenue - 1e-6);
  }
}

TEST_CASE("mixtures of rules") {
  const auto r25 = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kRevenue, 2, 5);
  const double single = oracle_topk_vs_price(r25, 2, 5, Objective::kRevenue);
  CHECK(mixture_ratio(r25, {{2, 1.0}}, 5, Objective::kRevenue) ==
        doctest::Approx(single).epsilon(1e-9));

  const std::vector<std::pair<int, double>> mix = {{1, 0.3}, {2, 0.4}, {4, 0.3}};
  const double mixed = mixture_ratio(r25, mix, 5, Objective::kRevenue);
  double min_component = 1e300;
  for (const auto& [k, p] : mix) {
    min_component = std::min(min_component, oracle_topk_vs_price(r25, k, 5, Objective::kRevenue));
  }
  CHECK(mixed >= min_component - 1e-9);

  CHECK_THROWS_AS(mixture_ratio(r25, {{1, 0.4}}, 5, Objective::kRevenue), Error);
}

TEST_CASE("characteristic-weight deltas reproduce the interim allocation rule") {
  const auto u = QuantileDistribution::uniform(0.0, 1.0);
  auto env = StageEnvironment::single_item(2);
  const auto alg = surplus_max_alg(env);
  const int T = 4;
  const auto profile = optimal_surrogates({u, QuantileDistribution::uniform(0.0, 2.0)}, T,
                                          Objective::kWelfare);
  RngStream rng(53);
  const auto cw = characteristic_weights(profile, alg, rng);

  for (int i = 0; i < 2; ++i) {
    for (int g = 0; g <= 20; ++g) {
      const double q = static_cast<double>(g) / 20.0;
      double via_deltas = 0.0;
      for (int j = 1; j <= T; ++j) {
        const double next = j < T ? cw.w[i][j] : 0.0;
        via_deltas += (cw.w[i][j - 1] - next) * topk_rule(j, T, q);
      }
      CHECK(via_deltas == doctest::Approx(interim_allocation_q(cw.w[i], q)).epsilon(1e-9));
    }
  }
}

TEST_CASE("allocation rules and their generalized inverses") {
  const auto rule = AllocationRule::step({0.3, 0.7}, {1.0, 0.5, 0.1});
  CHECK(rule(0.1) == doctest::Approx(1.0));
  CHECK(rule(0.5) == doctest::Approx(0.5));
  CHECK(rule(0.9) == doctest::Approx(0.1));
  CHECK(rule.inverse(1.1) == doctest::Approx(0.0));
  CHECK(rule.inverse(0.75) == doctest::Approx(0.3));
  CHECK(rule.inverse(0.3) == doctest::Approx(0.7));
  CHECK(rule.inverse(0.05) == doctest::Approx(1.0));
}

TEST_CASE("step-rule surplus matches the drop-weighted cumulative values") {
  const auto u = QuantileDistribution::uniform(0.0, 1.0);
  const auto e = QuantileDistribution::exponential(1.0);
  RngStream rng(54);
  for (const auto& d : {u, e}) {
    for (int instance = 0; instance < 20; ++instance) {
      std::vector<double> drops = {rng.uniform(0.05, 0.4), rng.uniform(0.45, 0.95)};
      std::vector<double> levels = {rng.uniform(0.6, 1.0), rng.uniform(0.2, 0.6),
                                    rng.uniform(0.0, 0.2)};
      auto x = [&](double q) {
        if (q < drops[0]) return levels[0];
        if (q < drops[1]) return levels[1];
        return levels[2];
      };
      const double direct = integrate_segments(
          [&](double q) { return x(q) * d.value_at(std::max(q, 1e-12)); },
          {0.0, drops[0], drops[1], 1.0}, 1e-11);
      const double via_drops = (levels[0] - levels[1]) * d.cumulative_value(drops[0]) +
                               (levels[1] - levels[2]) * d.cumulative_value(drops[1]) +
                               levels[2] * d.cumulative_value(1.0);
      CHECK(direct == doctest::Approx(via_drops).epsilon(1e-8));
    }
  }
}

TEST_CASE("inverse-sandwich surplus comparison") {
  const auto u = QuantileDistribution::uniform(0.0, 1.0);
  auto R = [&](double q) { return u.revenue_curve(q); };

  std::vector<double> qs, xs;
  for (int i = 0; i <= 64; ++i) {
    const double q = static_cast<double>(i) / 64.0;
    qs.push_back(q);
    xs.push_back(1.0 - q * q * 0.9);
  }
  const AllocationRule x_tilde(qs, xs);

  // Equal rules at alpha = 1: equality.
  const auto same = sandwich_surplus_check(x_tilde, x_tilde, 1.0, R);
  CHECK(same.outcome == SandwichCheck::Outcome::kHolds);
  CHECK(same.lhs == doctest::Approx(same.rhs).epsilon(1e-6));

  // Horizontal compression x_hat(q) = x_tilde(alpha q), built by rescaling
  // the knots so the inverse relation is exact.
  const double alpha = 1.6;
  std::vector<double> qs_hat, xs_hat;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    qs_hat.push_back(qs[i] / alpha);
    xs_hat.push_back(xs[i]);
  }
  qs_hat.push_back(1.0);
  xs_hat.push_back(xs.back());
  const AllocationRule x_hat(qs_hat, xs_hat);
  const auto stretched = sandwich_surplus_check(x_tilde, x_hat, alpha, R);
  CHECK(stretched.outcome == SandwichCheck::Outcome::kHolds);
  CHECK(stretched.lhs >= stretched.rhs - 1e-9);

  // Violating the sandwich: x_hat above x_tilde.
  std::vector<double> xs_big;
  for (double x : xs) xs_big.push_back(std::min(1.0, x + 0.05));
  const AllocationRule too_big(qs, xs_big);
  const auto violated = sandwich_surplus_check(x_tilde, too_big, alpha, R);
  CHECK(violated.outcome == SandwichCheck::Outcome::kHypothesisViolated);
}

TEST_CASE("sweep rows carry both formulas and the oracle") {
  const auto rows = bounds_sweep(4, 4000, 7);
  CHECK(rows.size() == 2 * (1 + 2 + 3));
  for (const auto& row : rows) {
    CHECK(1.0 - row.oracle_ratio <=
          (row.objective == "welfare" ? loss_bound_welfare(row.k, row.n)
                                      : loss_bound_revenue(row.k, row.n)) +
              1e-9);
    CHECK(std::abs(row.monte_carlo_ratio - row.oracle_ratio) <= 4.0 * std::max(row.se, 2e-3));
  }
  std::ostringstream os;
  write_bounds_csv(os, rows, "test");
  CHECK(os.str().find("printed_formula") != std::string::npos);
}
