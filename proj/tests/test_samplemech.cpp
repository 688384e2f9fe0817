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
#include "rankmech/env.hpp"
#include "rankmech/errors.hpp"
#include "rankmech/numeric.hpp"
#include "rankmech/samplemech.hpp"

using namespace rankmech;

TEST_CASE("breakpoint estimation indexing") {
  const std::vector<double> sorted = {0.9, 0.7, 0.5, 0.3, 0.1};
  const auto jm = estimate_breakpoints(sorted, 2, 3, BreakpointIndexing::kJM);
  REQUIRE(jm.size() == 1);
  CHECK(jm[0] == doctest::Approx(0.5));
  const auto jm1 = estimate_breakpoints(sorted, 2, 3, BreakpointIndexing::kJMMinusOne);
  CHECK(jm1[0] == doctest::Approx(0.7));
  CHECK_THROWS_AS(estimate_breakpoints({0.1, 0.2}, 2, 3), InsufficientSamples);
}

TEST_CASE("breakpoint quantiles center on j/T") {
  const auto u = QuantileDistribution::uniform(0.0, 1.0);
  const int T = 2, m = 3;
  RngStream rng(61);
  Accumulator quantile_of_estimate;
  std::vector<double> samples(m * T - 1);
  for (int rep = 0; rep < 20000; ++rep) {
    for (auto& s : samples) s = u.sample(rng);
    const auto bp = estimate_breakpoints(samples, T, m);
    quantile_of_estimate.add(1.0 - bp[0]);  // uniform: q(v) = 1 - v
  }
  CHECK(std::abs(quantile_of_estimate.mean - 0.5) <= 3.0 * quantile_of_estimate.se());
}

TEST_CASE("breakpoint concentration") {
  const auto u = QuantileDistribution::uniform(0.0, 1.0);
  const int T = 4, m = 200;
  RngStream rng(62);
  int bad_sets = 0;
  const int sets = 200;
  std::vector<double> samples(m * T - 1);
  for (int rep = 0; rep < sets; ++rep) {
    for (auto& s : samples) s = u.sample(rng);
    const auto bp = estimate_breakpoints(samples, T, m);
    bool off = false;
    for (int j = 1; j < T; ++j) {
      const double q = 1.0 - bp[j - 1];
      if (std::abs(q - static_cast<double>(j) / T) > 0.05) off = true;
    }
    if (off) ++bad_sets;
  }
  CHECK(static_cast<double>(bad_sets) / sets < 0.05);
}

TEST_CASE("surrogate estimates from breakpoints") {
  const auto ideal = estimate_surrogates({0.5}, 2);
  CHECK_FALSE(ideal.degenerate);
  CHECK(ideal.psi[0] == doctest::Approx(0.5));
  CHECK(ideal.psi[1] == doctest::Approx(-0.5));
  CHECK(ideal.inverted.empty());

  // Algebraic identity: psi^j = T (v^j j/T - v^(j-1) (j-1)/T).
  RngStream rng(63);
  for (int rep = 0; rep < 100; ++rep) {
    const int T = 2 + rng.uniform_int(6);
    std::vector<double> bp(T - 1);
    double level = rng.uniform(0.5, 2.0);
    for (auto& b : bp) {
      b = level;
      level *= rng.uniform(0.5, 1.0);
    }
    const auto est = estimate_surrogates(bp, T);
    auto v_at = [&](int j) { return j <= 0 || j >= T ? 0.0 : bp[j - 1]; };
    for (int j = 1; j <= T; ++j) {
      const double direct = T * (v_at(j) * j / static_cast<double>(T) -
                                 v_at(j - 1) * (j - 1) / static_cast<double>(T));
      CHECK(est.psi[j - 1] == doctest::Approx(direct).epsilon(1e-12).scale(1.0));
    }
  }

  // Degenerate single-bin case.
  const auto single = estimate_surrogates({}, 1);
  CHECK(single.degenerate);
  CHECK(single.psi[0] == 0.0);

  // Inversions are flagged, not repaired.
  const auto inverted = estimate_surrogates({1.0, 0.5, 0.5}, 4);
  CHECK(inverted.psi[1] == doctest::Approx(0.0));
  CHECK(inverted.psi[2] == doctest::Approx(0.5));
  CHECK(std::find(inverted.inverted.begin(), inverted.inverted.end(), 3) !=
        inverted.inverted.end());
}

TEST_CASE("surrogate estimates are bounded by the largest sample") {
  RngStream rng(64);
  for (int rep = 0; rep < 50; ++rep) {
    const int T = 2 + rng.uniform_int(8);
    const int m = 2 + rng.uniform_int(5);
    std::vector<double> samples(m * T - 1);
    for (auto& s : samples) s = rng.uniform(0.0, 5.0);
    const auto bp = estimate_breakpoints(samples, T, m);
    const auto est = estimate_surrogates(bp, T);
    const double top = *std::max_element(samples.begin(), samples.end());
    for (double psi : est.psi) {
      CHECK(std::abs(psi) <= (T + 1) * top + 1e-12);
    }
  }
}

TEST_CASE("estimation error obeys the additive bound") {
  for (const auto& d :
       {QuantileDistribution::uniform(0.0, 1.0), QuantileDistribution::exponential(1.0)}) {
    const double r_star = d.monopoly_revenue();
    for (int T : {4, 8}) {
      const double gamma = 1.0 / (4.0 * T * T);  // within the eps <= 1/(2T) regime
      RngStream rng(65);
      for (int rep = 0; rep < 40; ++rep) {
        // Perturb each target quantile j/T by +/- gamma (random signs plus
        // the all-down and alternating patterns).
        std::vector<double> q_hat(T - 1);
        for (int j = 1; j < T; ++j) {
          double sign = rep == 0 ? -1.0 : (rep == 1 ? (j % 2 ? 1.0 : -1.0) : 0.0);
          if (sign == 0.0) sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
          q_hat[j - 1] = static_cast<double>(j) / T + sign * gamma;
        }
        std::vector<double> v_hat(T - 1);
        for (int j = 0; j < T - 1; ++j) v_hat[j] = d.value_at(q_hat[j]);
        const auto est = estimate_surrogates(v_hat, T);
        double worst = 0.0;
        for (int j = 1; j <= T; ++j) {
          const double lo = j == 1 ? 0.0 : q_hat[j - 2];
          const double hi = j == T ? 1.0 : q_hat[j - 1];
          const double truth = conditional_virtual_value(d, lo, hi);
          worst = std::max(worst, std::abs(est.psi[j - 1] - truth));
        }
        const double bound = (6.0 * gamma * T * T + 4.0 * gamma * gamma * T * T * T) * r_star;
        CHECK(worst <= bound);
      }
    }
  }
}

TEST_CASE("mechanism assembly and evaluation") {
  const auto u = QuantileDistribution::uniform(0.0, 1.0);
  auto env = StageEnvironment::single_item(1);
  const auto samples = SampleSet::draw({u}, 200000, 66);
  SampleMechParams params;
  // One agent with eps chosen so the mechanism uses two bins.
  const auto mech = build_sample_mechanism(samples, env, 0.75, params);
  CHECK(mech.stages() == 2);
  CHECK(mech.breakpoint_values()[0][0] == doctest::Approx(0.5).epsilon(0.02));

  const auto served = mech.evaluate({0.8});
  CHECK(served.alloc == Allocation{1.0});
  CHECK(served.payments[0] == doctest::Approx(0.5).epsilon(0.02));

  const auto excluded = mech.evaluate({0.2});
  CHECK(excluded.alloc == Allocation{0.0});
  CHECK(excluded.payments[0] == 0.0);

  SampleSet tiny;
  tiny.values = {{0.5}};
  CHECK_THROWS_AS(build_sample_mechanism(tiny, env, 0.1, params), InsufficientSamples);

  SampleSet bad;
  bad.values = {{0.5, -1.0, 0.25}};
  CHECK_THROWS_AS(build_sample_mechanism(bad, env, 0.75, params), Error);
}

TEST_CASE("profiles below every breakpoint with negative floor surrogates get nothing") {
  auto env = StageEnvironment::single_item(2);
  EstimatedMechanism mech(env, {{0.7, 0.4}, {0.8, 0.5}},
                          {{0.7, 0.1, -0.4}, {0.8, 0.2, -0.5}}, {{}, {}}, false,
                          BreakpointIndexing::kJM);
  const auto out = mech.evaluate({0.1, 0.2});
  CHECK(out.alloc == Allocation{0.0, 0.0});
  CHECK(out.payments == std::vector<double>{0.0, 0.0});
  CHECK(out.bins == std::vector<int>{3, 3});
}

TEST_CASE("payments are the lowest winning bin edge") {
  auto env = StageEnvironment::single_item(2);
  EstimatedMechanism mech(env, {{0.7, 0.4}, {0.8, 0.5}},
                          {{0.7, 0.1, -0.4}, {0.8, 0.2, -0.5}}, {{}, {}}, false,
                          BreakpointIndexing::kJM);
  // Population 2 in its top bin (0.9 >= 0.8) beats population 1's middle
  // bin; it would still win from its middle bin (0.2 > 0.1), so it pays the
  // middle bin's lower edge.
  const auto out = mech.evaluate({0.5, 0.9});
  CHECK(out.alloc == Allocation{0.0, 1.0});
  CHECK(out.payments[1] == doctest::Approx(0.5));
}

TEST_CASE("mechanism dump round trip") {
  auto env = StageEnvironment::single_item(2);
  EstimatedMechanism mech(env, {{0.7, 0.4}, {0.8, 0.5}},
                          {{0.7, 0.1, -0.4}, {0.8, 0.2, -0.5}}, {{}, {2}}, false,
                          BreakpointIndexing::kJM);
  const auto text = mech.to_json();
  const auto back = EstimatedMechanism::from_json(text, env);
  CHECK(back.breakpoint_values() == mech.breakpoint_values());
  CHECK(back.surrogates() == mech.surrogates());
  CHECK(back.inverted_rows() == mech.inverted_rows());
  CHECK(back.stages() == 3);
}

TEST_CASE("estimation error propagates to at most twice the summed error") {
  const auto u = QuantileDistribution::uniform(0.0, 1.0);
  auto env = StageEnvironment::single_item(2);
  const int T = 4;
  std::vector<std::vector<double>> psi_true(2, std::vector<double>(T));
  for (int i = 0; i < 2; ++i) {
    for (int j = 1; j <= T; ++j) {
      psi_true[i][j - 1] =
          conditional_virtual_value(u, static_cast<double>(j - 1) / T, static_cast<double>(j) / T);
    }
  }

  RngStream rng(67);
  // Identical estimates: revenues agree within noise.
  auto same = propagation_audit(psi_true, psi_true, env, {u, u}, 40000, rng);
  CHECK(same.holds);
  CHECK(same.gamma_sum == 0.0);
  CHECK(same.rev_hat == doctest::Approx(same.rev_true).epsilon(1e-12));

  // One entry shifted by +gamma.
  auto shifted = psi_true;
  shifted[0][1] += 0.05;
  auto one = propagation_audit(psi_true, shifted, env, {u, u}, 40000, rng);
  CHECK(one.gamma_sum == doctest::Approx(0.05));
  CHECK(one.holds);

  // Adversarial +/- gamma on every entry.
  auto noisy = psi_true;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < T; ++j) noisy[i][j] += ((i + j) % 2 ? 0.04 : -0.04);
  }
  auto all = propagation_audit(psi_true, noisy, env, {u, u}, 40000, rng);
  CHECK(all.gamma_sum == doctest::Approx(0.08));
  CHECK(all.holds);
}
