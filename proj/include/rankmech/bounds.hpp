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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rankmech/dist.hpp"
#include "rankmech/rng.hpp"
#include "rankmech/surrogate.hpp"

namespace rankmech {

/// Probability that an agent at quantile q is among the k highest of n:
/// sum_{j=0}^{k-1} C(n-1,j) q^j (1-q)^{n-1-j}.
double topk_rule(int k, int n, double q);

/// -d/dq of topk_rule: (n-1) C(n-2,k-1) q^(k-1) (1-q)^(n-1-k); zero at k = n.
double topk_rule_drop(int k, int n, double q);

/// Stirling-approximation expressions for the ranking-vs-pricing guarantee.
double rho(int k, int n);
double eta(int k, int n);

/// The tabulated per-agent multiplicative loss sums, evaluated verbatim with
/// exact rational arithmetic for n <= 60 (log-space beyond). These are
/// reported for adjudication only; the quadrature oracle below is the
/// authority and the two disagree at small (k, n).
double loss_w_exact(int k, int n);
double loss_r_exact(int k, int n);

/// Final closed-form loss bounds: C(n,k)(k/n)^k((n-k)/n)^(n-k) for welfare
/// and the n/(n-k)-prefactored analogue for revenue.
double loss_bound_welfare(int k, int n);
double loss_bound_revenue(int k, int n);

/// Weakly decreasing interim allocation rule on a quantile grid, piecewise
/// linear between knots; repeated quantiles encode jumps.
class AllocationRule {
 public:
  AllocationRule(std::vector<double> quantiles, std::vector<double> levels);
  /// Piecewise-constant rule: levels[i] on [drops[i-1], drops[i]) with
  /// drops[-1] = 0 and drops[levels.size()-1] = 1 implied.
  static AllocationRule step(const std::vector<double>& drops,
                             const std::vector<double>& levels);

  double operator()(double q) const;
  /// Generalized inverse sup{q : x(q) >= z} (1 when z <= x(1), 0 when
  /// z > x(0)).
  double inverse(double z) const;
  double at_one() const { return xs_.back(); }

 private:
  std::vector<double> qs_, xs_;
};

/// Ratio of the top-k-of-n rule's expected per-agent surplus to the
/// k/n-price-posting surplus, by quadrature against V (welfare) or R
/// (revenue) so that atoms need no derivative. k = n returns 1 exactly.
double oracle_topk_vs_price(const QuantileDistribution& d, int k, int n, Objective objective);

struct McRatio {
  double ratio = 0.0;
  double se = 0.0;
};
/// Independent check of the oracle: literal n-agent simulation (draw
/// quantiles, allocate the top k, charge the (k+1)-th highest value for the
/// revenue objective) against literal price posting, with shared draws.
McRatio mc_topk_vs_price(const QuantileDistribution& d, int k, int n, Objective objective,
                         int trials, RngStream& rng);

/// Surplus ratio of a probability mixture over top-k rules to the matching
/// mixture over k/n price postings. Weights must sum to 1; k = 0 components
/// contribute nothing on either side.
double mixture_ratio(const QuantileDistribution& d,
                     const std::vector<std::pair<int, double>>& weight_deltas, int n,
                     Objective objective);

struct SandwichCheck {
  enum class Outcome { kHolds, kFails, kHypothesisViolated };
  Outcome outcome = Outcome::kHolds;
  double lhs = 0.0;  // E[phi(q) x_hat(q)]
  double rhs = 0.0;  // (1/alpha) E[phi(q) x_tilde(q)]
};

/// Checks E[phi x_hat] >= (1/alpha) E[phi x_tilde] (alpha >= 1) after
/// verifying on a grid that R crosses rays from the origin from below and
/// that x_tilde^{-1} >= x_hat^{-1} >= x_tilde^{-1}/alpha. A violated
/// hypothesis is a reported outcome, not an error. Both sides are evaluated
/// as int_0^1 R(x^{-1}(z)) dz.
SandwichCheck sandwich_surplus_check(const AllocationRule& x_tilde, const AllocationRule& x_hat, double alpha,
                         const std::function<double(double)>& cumulative_virtual);

struct BoundsRow {
  int k = 0;
  int n = 0;
  std::string objective;
  double printed_formula = 0.0;
  double printed_bound = 0.0;
  double oracle_ratio = 0.0;
  double monte_carlo_ratio = 0.0;
  double se = 0.0;
};

/// Worst-case sweep over 2 <= n <= n_max, 1 <= k <= n-1, both objectives.
std::vector<BoundsRow> bounds_sweep(int n_max, int trials, std::uint64_t seed);

void write_bounds_csv(std::ostream& os, const std::vector<BoundsRow>& rows,
                      const std::string& header_comment);

}  // namespace rankmech
