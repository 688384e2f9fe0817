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

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rankmech/numeric.hpp"
#include "rankmech/rng.hpp"

namespace rankmech {

/// A value distribution represented in quantile space.
///
/// The quantile of a value v is q = 1 - F(v): the probability that a fresh
/// draw exceeds v. The distribution is described by its value function v(q),
/// which is non-negative and weakly decreasing on [0, 1]. The revenue curve
/// is R(q) = q * v(q) and the cumulative value is V(q) = int_0^q v(z) dz.
///
/// Conventions: v(1) is the infimum of the support (0 for every built-in);
/// for distributions unbounded above, value_at(0) is +infinity.
class QuantileDistribution {
 public:
  /// v(q). Total on [0, 1].
  double value_at(double q) const;

  /// phi(q) = R'(q), the expected marginal revenue at quantile q. Uses the
  /// registered closed form when available, otherwise a symmetric finite
  /// difference of R with step `fd_step`. Throws NonDifferentiablePoint at
  /// registered kinks of R and requires q strictly inside (0, 1).
  double virtual_value_at(double q, double fd_step = 1e-6) const;

  /// Like virtual_value_at but without the kink signal; at a kink of R the
  /// result is a one-sided limit. Intended for quadrature whose panels are
  /// already split at the kinks.
  double virtual_value_unchecked(double q, double fd_step = 1e-6) const;

  /// V(q) = int_0^q v(z) dz, by adaptive quadrature unless a closed form is
  /// registered.
  double cumulative_value(double q, double rel_tol = kDefaultQuadTol) const;

  /// R(q) = q * v(q).
  double revenue_curve(double q) const;

  /// Inverse-quantile sample: draws q ~ U(0,1) and returns value_at(q).
  double sample(RngStream& rng) const { return value_at(rng.uniform_open()); }

  /// Quantile of a value. Flat stretches of v (atoms) map a value to an
  /// interval of quantiles; with `rng` the result is uniform on that
  /// interval, without it the midpoint is returned.
  double quantile_of(double value, RngStream* rng = nullptr) const;

  /// Monopoly revenue R* = max_q R(q).
  double monopoly_revenue() const;

  bool regular() const { return regular_; }
  const std::string& label() const { return label_; }
  /// Value-space support [v(1), v(0)]; upper end may be +infinity.
  std::pair<double, double> support() const;
  const std::vector<double>& kinks() const { return kinks_; }

  // Builders. Distribution parameters match the experiment-config names.
  static QuantileDistribution uniform(double lo, double hi);
  static QuantileDistribution exponential(double rate);
  /// v(q) = 1 / max(q, q_min). q_min = 0 gives the untruncated version whose
  /// top order statistics have divergent expectations.
  static QuantileDistribution equal_revenue(double q_min);
  enum class WorstCase { kWelfare, kRevenue };
  /// Extremal instances for the top-k-of-n vs price-posting comparison:
  /// welfare kind puts mass k/n on the value n/k; revenue kind has the
  /// triangular revenue curve with apex (k/n, 1).
  static QuantileDistribution worst_case(WorstCase kind, int k, int n);
  /// Piecewise-linear v(q) through the given (q, v) points.
  static QuantileDistribution piecewise_value(std::vector<std::pair<double, double>> points);

  QuantileDistribution() = default;

 private:
  std::string label_;
  std::function<double(double)> value_;
  std::function<double(double)> virtual_value_;  // optional closed form
  std::function<double(double)> cumulative_;     // optional closed form
  std::vector<double> kinks_;
  bool regular_ = false;
  mutable std::optional<double> monopoly_cache_;
};

struct OrderStatSpec {
  int j;  // rank, 1 = highest
  int T;  // population size
};

enum class OrderStatOf { kValue, kVirtualValue };

/// E[g(v) | v is the j-th highest of T i.i.d. draws], computed by integrating
/// g against the Beta(j, T-j+1) density of the j-th highest draw's quantile.
/// Throws DivergentIntegral when the top order statistic of a distribution
/// with R(0+) > 0 (e.g. untruncated equal-revenue) is requested.
double expected_order_stat(const QuantileDistribution& d, OrderStatSpec spec,
                           OrderStatOf of, double rel_tol = kDefaultQuadTol);

/// (R(q_hi) - R(q_lo)) / (q_hi - q_lo): the expected virtual value of a draw
/// conditioned on its quantile lying in [q_lo, q_hi].
double conditional_virtual_value(const QuantileDistribution& d, double q_lo, double q_hi);

}  // namespace rankmech
