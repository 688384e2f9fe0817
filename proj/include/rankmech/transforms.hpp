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

#include <vector>

#include "rankmech/dist.hpp"
#include "rankmech/env.hpp"
#include "rankmech/rng.hpp"
#include "rankmech/surrogate.hpp"

namespace rankmech {

/// Per-population quantile breakpoints 0 < q^1 <= ... <= q^(T-1) < 1, with
/// implicit q^0 = 0 and q^T = 1.
struct Breakpoints {
  std::vector<std::vector<double>> q;

  int populations() const { return static_cast<int>(q.size()); }
  int stages() const { return q.empty() ? 1 : static_cast<int>(q.front().size()) + 1; }
  void validate() const;
  /// Uniform breakpoints j/T for every population.
  static Breakpoints uniform(int populations, int T);
};

/// Sends the top k/T quantile mass to 0 and linearly rescales the rest;
/// k = 0 is the identity.
double top_promote_quantile(double q, int k, int T);

/// Same transform with an estimated k-th breakpoint instead of k/T.
double k_top_promote_quantile(double q, const std::vector<double>& breakpoint_row, int k);

/// Runs the stage algorithm at the profile promoted in quantile space and
/// mapped back through each population's value function; a promoted
/// quantile of 0 maps to the supremum of the support.
Allocation run_top_promotion(const StageAlgorithm& stage_alg,
                             const std::vector<QuantileDistribution>& d_list, int k, int T,
                             const std::vector<double>& values, RngStream& rng);

/// Quantiles after the per-bin conditional redraw that precedes promotion:
/// uniform within the agent's bin for bins 1..T-k, and for the bottom k bins
/// the matching entry of k jointly drawn, sorted conditional draws.
std::vector<double> resample_quantiles(const std::vector<QuantileDistribution>& d_list, int k,
                                       int T, const std::vector<double>& values, RngStream& rng);

/// Quantile-space core of the conditional redraw, for callers that already
/// hold quantiles.
std::vector<double> resample_quantiles_q(int k, int T, const std::vector<double>& quantiles,
                                         RngStream& rng);

/// Promotes quantiles and maps them through the value functions (quantile 0
/// maps to the supremum of the support).
std::vector<double> promoted_values(const std::vector<QuantileDistribution>& d_list,
                                    const std::vector<double>& quantiles, int k, int T);

/// Conditional redraw composed with top promotion.
Allocation run_resampling(const StageAlgorithm& stage_alg,
                          const std::vector<QuantileDistribution>& d_list, int k, int T,
                          const std::vector<double>& values, RngStream& rng);

struct BinnedOutcome {
  Allocation alloc;
  std::vector<double> payments;
  std::vector<int> bins;  // 1-based bin per agent (1 = highest values)
};

/// Bins each agent by the quantile of its value, substitutes the interval's
/// conditional virtual value, maximizes surplus, and charges each winner the
/// value at the lower edge of the lowest bin at which it still wins.
BinnedOutcome run_optimal_binning(const StageEnvironment& env,
                                  const std::vector<QuantileDistribution>& d_list,
                                  const Breakpoints& bp, const std::vector<double>& values);

}  // namespace rankmech
