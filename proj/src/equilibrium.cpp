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

#include "rankmech/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rankmech/errors.hpp"

namespace rankmech {
namespace {

// Binomial coefficients C(m, 0..m).
std::vector<double> binomial_row(int m) {
  std::vector<double> row(m + 1, 1.0);
  for (int j = 1; j <= m; ++j) row[j] = row[j - 1] * (m - j + 1) / j;
  return row;
}

double pow_or_one(double x, int e) { return e == 0 ? 1.0 : std::pow(x, e); }

}  // namespace

void PositionAuctionSpec::validate() const {
  if (weights.empty()) throw Error("position auction: need at least one weight");
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] < 0.0 || weights[j] > 1.0) throw Error("position weights must lie in [0,1]");
    if (j > 0 && weights[j] > weights[j - 1] + 1e-12) {
      throw Error("position weights must be weakly decreasing");
    }
  }
}

double interim_allocation_q(const std::vector<double>& weights, double q) {
  const int T = static_cast<int>(weights.size());
  const auto binom = binomial_row(T - 1);
  double x = 0.0;
  for (int j = 1; j <= T; ++j) {
    x += weights[j - 1] * binom[j - 1] * pow_or_one(q, j - 1) * pow_or_one(1.0 - q, T - j);
  }
  return x;
}

namespace {

// d/dq of interim_allocation_q.
double interim_allocation_q_prime(const std::vector<double>& weights, double q) {
  const int T = static_cast<int>(weights.size());
  const auto binom = binomial_row(T - 1);
  double d = 0.0;
  for (int j = 1; j <= T; ++j) {
    const double c = weights[j - 1] * binom[j - 1];
    if (c == 0.0) continue;
    if (j - 1 > 0) d += c * (j - 1) * pow_or_one(q, j - 2) * pow_or_one(1.0 - q, T - j);
    if (T - j > 0) d -= c * (T - j) * pow_or_one(q, j - 1) * pow_or_one(1.0 - q, T - j - 1);
  }
  return d;
}

}  // namespace

double interim_allocation(const PositionAuctionSpec& spec, double value) {
  return interim_allocation_q(spec.weights, spec.dist.quantile_of(value));
}

BidFunction BidFunction::from_grid(std::vector<double> values, std::vector<double> bids,
                                   PaymentSemantics semantics) {
  BidFunction fn;
  fn.semantics = semantics;
  // Drop duplicate grid values (flat stretches of the value function).
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!fn.values.empty() && values[i] <= fn.values.back() + 1e-15) continue;
    fn.values.push_back(values[i]);
    fn.bids.push_back(bids[i]);
  }
  fn.interp = MonotoneCubic(fn.values, fn.bids);
  return fn;
}

BidFunction equilibrium_bid(const PositionAuctionSpec& spec, int grid_points) {
  spec.validate();
  if (grid_points < 8) throw Error("equilibrium_bid: grid too small");
  const bool unbounded = std::isinf(spec.dist.support().second);
  const double q_top = unbounded ? 1e-6 : 0.0;

  std::vector<double> qs(grid_points);
  std::vector<double> values(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    // Descending quantiles give an ascending value grid.
    qs[i] = 1.0 - (1.0 - q_top) * static_cast<double>(i) / (grid_points - 1);
    values[i] = spec.dist.value_at(qs[i]);
  }

  // Expected payment p(v(q)) = int_q^1 v(u) (-x'(u)) du, accumulated from
  // the bottom of the support.
  std::vector<double> pay(grid_points, 0.0);
  auto integrand = [&](double u) {
    return spec.dist.value_at(u) * (-interim_allocation_q_prime(spec.weights, u));
  };
  for (int i = 1; i < grid_points; ++i) {
    pay[i] = pay[i - 1] + integrate(integrand, qs[i], qs[i - 1], 1e-10);
  }

  std::vector<double> bids(grid_points, 0.0);
  if (spec.semantics == PaymentSemantics::kAllPay) {
    bids = pay;
  } else {
    int first_positive = -1;
    for (int i = 0; i < grid_points; ++i) {
      const double x = interim_allocation_q(spec.weights, qs[i]);
      if (x > 1e-14) {
        bids[i] = pay[i] / x;
        if (first_positive < 0) first_positive = i;
      } else {
        bids[i] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    // Where the agent never wins, pin the bid to the infimum winning bid,
    // which is the value at the top of the never-winning region (the lowest
    // type bids its own value).
    const double floor_bid = first_positive > 0 ? values[first_positive - 1] : 0.0;
    for (int i = 0; i < grid_points && std::isnan(bids[i]); ++i) bids[i] = floor_bid;
  }
  for (int i = 1; i < grid_points; ++i) bids[i] = std::max(bids[i], bids[i - 1]);
  return BidFunction::from_grid(std::move(values), std::move(bids), spec.semantics);
}

BestResponseGap best_response_gap(const PositionAuctionSpec& spec, const BidFunction& bid_fn,
                                  int trials, int deviation_grid, RngStream& rng) {
  spec.validate();
  if (trials < 1 || deviation_grid < 2) throw Error("best_response_gap: bad sizes");
  const int T = static_cast<int>(spec.weights.size());
  const int G = deviation_grid;

  std::vector<double> test_values(G);
  std::vector<double> own_bids(G);
  double max_bid = 0.0;
  for (int i = 0; i < G; ++i) {
    const double q = (i + 0.5) / G;
    test_values[i] = spec.dist.value_at(q);
    own_bids[i] = bid_fn(test_values[i]);
    max_bid = std::max(max_bid, own_bids[i]);
  }
  std::vector<double> deviations(G);
  for (int i = 0; i < G; ++i) {
    deviations[i] = max_bid * 1.05 * static_cast<double>(i) / (G - 1);
  }

  // Candidate bids = equilibrium bids at the grid values + deviation grid;
  // precompute the position weight won per (candidate, trial) once.
  std::vector<double> candidates = own_bids;
  candidates.insert(candidates.end(), deviations.begin(), deviations.end());
  const int C = static_cast<int>(candidates.size());

  std::vector<std::vector<float>> won(C, std::vector<float>(trials));
  std::vector<double> opp(std::max(0, T - 1));
  for (int t = 0; t < trials; ++t) {
    for (auto& b : opp) b = bid_fn(spec.dist.sample(rng));
    std::sort(opp.begin(), opp.end(), std::greater<double>());
    for (int c = 0; c < C; ++c) {
      // Rank = 1 + number of strictly higher opponent bids.
      const auto it = std::lower_bound(opp.begin(), opp.end(), candidates[c],
                                       [](double a, double b) { return a > b; });
      const int higher = static_cast<int>(it - opp.begin());
      won[c][t] = static_cast<float>(spec.weights[higher]);
    }
  }

  const bool wpb = spec.semantics == PaymentSemantics::kWinnerPaysBid;
  BestResponseGap best;
  bool first = true;
  for (int i = 0; i < G; ++i) {
    const double v = test_values[i];
    const double sb = own_bids[i];
    for (int j = 0; j < G; ++j) {
      const double db = deviations[j];
      double sum = 0.0, sumsq = 0.0;
      const auto& wd = won[G + j];
      const auto& ws = won[i];
      for (int t = 0; t < trials; ++t) {
        const double u_dev = wpb ? wd[t] * (v - db) : wd[t] * v - db;
        const double u_eq = wpb ? ws[t] * (v - sb) : ws[t] * v - sb;
        const double d = u_dev - u_eq;
        sum += d;
        sumsq += d * d;
      }
      const double mean = sum / trials;
      const double var = std::max(0.0, (sumsq - sum * mean) / std::max(1, trials - 1));
      const double se = std::sqrt(var / trials);
      if (first || mean > best.gap) {
        first = false;
        best.gap = mean;
        best.se = se;
        best.value = v;
        best.deviation = db;
      }
    }
  }
  return best;
}

bool check_revelation_equivalence(const SurrogateProfile& profile, const StageAlgorithm& stage_alg,
                                  const std::vector<QuantileDistribution>& d_list,
                                  const std::vector<std::function<double(double)>>& bid_maps,
                                  int trials, RngStream& rng) {
  profile.validate();
  const int n = profile.populations();
  const int T = profile.stages();
  if (static_cast<int>(d_list.size()) != n || static_cast<int>(bid_maps.size()) != n) {
    throw Error("check_revelation_equivalence: need one distribution and one map per population");
  }
  std::vector<std::vector<double>> values(n, std::vector<double>(T));
  std::vector<std::vector<double>> bids(n, std::vector<double>(T));
  for (int trial = 0; trial < trials; ++trial) {
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < T; ++t) {
        values[i][t] = d_list[i].sample(rng);
        bids[i][t] = bid_maps[i](values[i][t]);
      }
    }
    // Tie randomization synchronized through cloned substreams.
    RngStream tie = rng.substream(0x52455645u + static_cast<std::uint64_t>(trial));
    RngStream tie_a = tie.clone();
    RngStream tie_b = tie.clone();
    const auto on_values = run_sra(profile, stage_alg, values, tie_a);
    const auto on_bids = run_sra(profile, stage_alg, bids, tie_b);
    for (int t = 0; t < T; ++t) {
      if (on_values[t] != on_bids[t]) return false;
    }
  }
  return true;
}

BidFunction unrevelation_allpay_bid(const std::vector<QuantileDistribution>& d_list,
                                    const StageEnvironment& env, int agent,
                                    const std::vector<double>& value_grid, int trials,
                                    RngStream& rng) {
  const int n = env.agents();
  if (static_cast<int>(d_list.size()) != n) {
    throw Error("unrevelation_allpay_bid: need one distribution per agent");
  }
  if (agent < 0 || agent >= n) throw Error("unrevelation_allpay_bid: bad agent index");
  std::vector<double> bids(value_grid.size(), 0.0);
  std::vector<double> values(n, 0.0);
  for (std::size_t g = 0; g < value_grid.size(); ++g) {
    Accumulator acc;
    RngStream sub = rng.substream(g);
    for (int t = 0; t < trials; ++t) {
      for (int i = 0; i < n; ++i) {
        values[i] = (i == agent) ? value_grid[g] : d_list[i].sample(sub);
      }
      const Allocation x = surplus_max(env, values);
      acc.add(x[agent] > 0.5 ? threshold_payment(env, values, agent) : 0.0);
    }
    bids[g] = acc.mean;
  }
  // Expected payments inherit monotonicity up to Monte Carlo noise.
  for (std::size_t g = 1; g < bids.size(); ++g) bids[g] = std::max(bids[g], bids[g - 1]);
  return BidFunction::from_grid(std::vector<double>(value_grid), std::move(bids),
                                PaymentSemantics::kAllPay);
}

}  // namespace rankmech
