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

#include <algorithm>
#include <cmath>
#include <vector>

#include "rankmech/dist.hpp"
#include "rankmech/errors.hpp"
#include "rankmech/numeric.hpp"
#include "rankmech/rng.hpp"

using namespace rankmech;

namespace {

std::vector<QuantileDistribution> registered() {
  return {
      QuantileDistribution::uniform(0.0, 1.0),
      QuantileDistribution::uniform(0.0, 2.0),
      QuantileDistribution::exponential(1.0),
      QuantileDistribution::exponential(2.0),
      QuantileDistribution::equal_revenue(0.01),
      QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kWelfare, 1, 2),
      QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kRevenue, 1, 2),
      QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kRevenue, 2, 5),
      QuantileDistribution::piecewise_value({{0.0, 3.0}, {0.3, 1.5}, {1.0, 0.0}}),
  };
}

// Independent brute-force oracle: mean of the j-th highest of T i.i.d.
// draws, by direct simulation.
double order_stat_mc(const QuantileDistribution& d, int j, int T, int trials,
                     std::uint64_t seed, double* se_out) {
  RngStream rng(seed);
  Accumulator acc;
  std::vector<double> draw(T);
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < T; ++i) draw[i] = d.sample(rng);
    std::sort(draw.begin(), draw.end(), std::greater<double>());
    acc.add(draw[j - 1]);
  }
  if (se_out) *se_out = acc.se();
  return acc.mean;
}

}  // namespace

TEST_CASE("value function evaluations") {
  auto u = QuantileDistribution::uniform(0.0, 1.0);
  CHECK(u.value_at(0.25) == doctest::Approx(0.75).epsilon(1e-12));

  auto er = QuantileDistribution::equal_revenue(0.01);
  CHECK(er.value_at(0.5) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(er.value_at(0.005) == doctest::Approx(100.0).epsilon(1e-12));

  auto wc = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kWelfare, 1, 2);
  CHECK(wc.value_at(0.4) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(wc.value_at(0.6) == 0.0);

  CHECK_THROWS_AS(u.value_at(1.5), Error);
}

TEST_CASE("value functions weakly decreasing on a grid") {
  for (const auto& d : registered()) {
    INFO(d.label());
    double prev = d.value_at(1e-9);
    if (std::isinf(prev)) prev = 1e300;
    for (int i = 1; i <= 1000; ++i) {
      const double q = static_cast<double>(i) / 1000.0;
      const double v = d.value_at(q);
      CHECK(prev >= v - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("virtual values") {
  auto u = QuantileDistribution::uniform(0.0, 1.0);
  CHECK(u.virtual_value_at(0.25) == doctest::Approx(0.5).epsilon(1e-12));

  auto e = QuantileDistribution::exponential(1.0);
  CHECK(e.virtual_value_at(0.5) == doctest::Approx(-std::log(0.5) - 1.0).epsilon(1e-12));

  auto er = QuantileDistribution::equal_revenue(0.01);
  CHECK(er.virtual_value_at(0.3) == 0.0);
  CHECK(er.virtual_value_at(0.9) == 0.0);

  auto wc = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kWelfare, 1, 2);
  CHECK_THROWS_AS(wc.virtual_value_at(0.5), NonDifferentiablePoint);
}

TEST_CASE("virtual value matches finite difference of the revenue curve") {
  for (const auto& d : registered()) {
    INFO(d.label());
    for (int i = 1; i < 200; ++i) {
      const double q = static_cast<double>(i) / 200.0;
      if (q >= 1.0) continue;
      bool near_kink = false;
      for (double kink : d.kinks()) {
        if (std::abs(q - kink) < 5e-3) near_kink = true;
      }
      if (near_kink) continue;
      const double h = 1e-6;
      const double fd = (d.revenue_curve(q + h) - d.revenue_curve(q - h)) / (2.0 * h);
      CHECK(d.virtual_value_at(q) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("cumulative value and revenue curve") {
  auto u = QuantileDistribution::uniform(0.0, 1.0);
  CHECK(u.cumulative_value(1.0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(u.revenue_curve(0.5) == doctest::Approx(0.25).epsilon(1e-12));

  for (auto [k, n] : std::vector<std::pair<int, int>>{{1, 2}, {2, 5}, {3, 7}}) {
    auto w = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kWelfare, k, n);
    auto r = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kRevenue, k, n);
    CHECK(w.cumulative_value(static_cast<double>(k) / n) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.cumulative_value(static_cast<double>(k) / n) == doctest::Approx(1.0).epsilon(1e-9));
  }

  // Closed forms agree with direct quadrature of v.
  for (const auto& d : registered()) {
    if (std::isinf(d.support().second)) continue;
    INFO(d.label());
    for (double q : {0.2, 0.7, 1.0}) {
      const double direct = integrate([&](double z) { return d.value_at(z); }, 0.0, q, 1e-10);
      CHECK(d.cumulative_value(q) == doctest::Approx(direct).epsilon(1e-7));
    }
  }
}

TEST_CASE("inverse-quantile sampling is reproducible and correctly distributed") {
  auto u = QuantileDistribution::uniform(0.0, 1.0);
  CHECK(u.value_at(0.37) == doctest::Approx(0.63).epsilon(1e-12));

  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(u.sample(a) == u.sample(b));

  RngStream rng(7);
  Accumulator acc;
  for (int i = 0; i < 100000; ++i) acc.add(u.sample(rng));
  CHECK(std::abs(acc.mean - 0.5) < 0.01);

  auto wc = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kWelfare, 1, 2);
  RngStream rng2(8);
  int at_two = 0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) {
    if (wc.sample(rng2) == 2.0) ++at_two;
  }
  CHECK(std::abs(static_cast<double>(at_two) / trials - 0.5) < 0.01);
}

TEST_CASE("expected order statistics") {
  auto u = QuantileDistribution::uniform(0.0, 1.0);
  // Independent simulation oracle agrees with the frozen classical values.
  double se = 0.0;
  const double mc_top = order_stat_mc(u, 1, 2, 200000, 11, &se);
  CHECK(std::abs(mc_top - 2.0 / 3.0) < 3.0 * se);
  CHECK(expected_order_stat(u, {1, 2}, OrderStatOf::kValue) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(expected_order_stat(u, {2, 2}, OrderStatOf::kVirtualValue) ==
        doctest::Approx(-1.0 / 3.0).epsilon(1e-9));

  // Single draw reduces to the mean.
  CHECK(expected_order_stat(u, {1, 1}, OrderStatOf::kValue) ==
        doctest::Approx(0.5).epsilon(1e-9));
  auto e = QuantileDistribution::exponential(1.0);
  CHECK(expected_order_stat(e, {1, 1}, OrderStatOf::kValue) ==
        doctest::Approx(1.0).epsilon(1e-7));

  // Top order statistic of the untruncated equal-revenue distribution.
  auto er0 = QuantileDistribution::equal_revenue(0.0);
  CHECK_THROWS_AS(expected_order_stat(er0, {1, 3}, OrderStatOf::kValue), DivergentIntegral);
  auto er = QuantileDistribution::equal_revenue(0.01);
  CHECK(expected_order_stat(er, {1, 3}, OrderStatOf::kValue) > 0.0);
}

TEST_CASE("order statistics satisfy the law of total expectation") {
  for (const auto& d : registered()) {
    if (std::isinf(d.support().second)) {
      // Skip only the distributions whose mean itself needs the closed form.
    }
    INFO(d.label());
    const int T = 4;
    double sum = 0.0;
    for (int j = 1; j <= T; ++j) {
      sum += expected_order_stat(d, {j, T}, OrderStatOf::kValue);
    }
    const double mean = expected_order_stat(d, {1, 1}, OrderStatOf::kValue);
    CHECK(sum / T == doctest::Approx(mean).epsilon(1e-6));
  }
}

TEST_CASE("conditional virtual values") {
  auto u = QuantileDistribution::uniform(0.0, 1.0);
  CHECK(conditional_virtual_value(u, 0.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(conditional_virtual_value(u, 0.5, 1.0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(conditional_virtual_value(u, 0.0, 1.0) ==
        doctest::Approx(u.revenue_curve(1.0)).epsilon(1e-12));
  CHECK_THROWS_AS(conditional_virtual_value(u, 0.6, 0.6), EmptyInterval);
  CHECK_THROWS_AS(conditional_virtual_value(u, 0.7, 0.2), EmptyInterval);
}

TEST_CASE("conditional virtual values average to total virtual mass") {
  for (const auto& d : registered()) {
    INFO(d.label());
    const int T = 8;
    double avg = 0.0;
    for (int j = 1; j <= T; ++j) {
      avg += conditional_virtual_value(d, static_cast<double>(j - 1) / T,
                                       static_cast<double>(j) / T);
    }
    avg /= T;
    CHECK(avg == doctest::Approx(d.revenue_curve(1.0)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("worst-case constructors") {
  auto w = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kWelfare, 1, 2);
  CHECK(w.value_at(0.5) == 2.0);
  CHECK(w.value_at(0.51) == 0.0);

  auto r = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kRevenue, 1, 2);
  CHECK(r.revenue_curve(0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.revenue_curve(1e-9) == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  CHECK(r.revenue_curve(1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  // Linear pieces on both sides of the apex.
  CHECK(r.revenue_curve(0.25) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.revenue_curve(0.75) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.value_at(0.5) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.regular());

  CHECK_THROWS_AS(
      QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kWelfare, 2, 2), InvalidK);
  CHECK_THROWS_AS(
      QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kRevenue, 0, 4), InvalidK);
}

TEST_CASE("regular distributions have revenue curves concave through the origin") {
  for (const auto& d : registered()) {
    if (!d.regular()) continue;
    INFO(d.label());
    for (int i = 1; i <= 50; ++i) {
      const double q = static_cast<double>(i) / 50.0;
      for (int a = 1; a <= 9; ++a) {
        const double alpha = static_cast<double>(a) / 10.0;
        CHECK(d.revenue_curve(alpha * q) >= alpha * d.revenue_curve(q) - 1e-9);
      }
    }
  }
}

TEST_CASE("quantile lookup inverts the value function") {
  auto u = QuantileDistribution::uniform(0.0, 2.0);
  CHECK(u.quantile_of(1.5) == doctest::Approx(0.25).epsilon(1e-9));
  auto e = QuantileDistribution::exponential(1.0);
  CHECK(e.quantile_of(std::log(4.0)) == doctest::Approx(0.25).epsilon(1e-9));

  // Flat stretch: the returned quantile is uniform over the atom's interval.
  auto wc = QuantileDistribution::worst_case(QuantileDistribution::WorstCase::kWelfare, 1, 2);
  RngStream rng(5);
  Accumulator acc;
  for (int i = 0; i < 20000; ++i) {
    const double q = wc.quantile_of(2.0, &rng);
    CHECK(q >= 0.0);
    CHECK(q <= 0.5 + 1e-9);
    acc.add(q);
  }
  CHECK(std::abs(acc.mean - 0.25) < 0.005);
}

TEST_CASE("monopoly revenue") {
  auto u = QuantileDistribution::uniform(0.0, 1.0);
  CHECK(u.monopoly_revenue() == doctest::Approx(0.25).epsilon(1e-6));
  auto e = QuantileDistribution::exponential(1.0);
  CHECK(e.monopoly_revenue() == doctest::Approx(1.0 / std::exp(1.0)).epsilon(1e-6));
  auto er = QuantileDistribution::equal_revenue(0.01);
  CHECK(er.monopoly_revenue() == doctest::Approx(1.0).epsilon(1e-6));
}
