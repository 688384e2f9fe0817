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
#include <functional>
#include <utility>
#include <vector>

#include "rankmech/dist.hpp"
#include "rankmech/env.hpp"
#include "rankmech/rng.hpp"

namespace rankmech {

enum class Objective { kWelfare, kRevenue };

/// A stage allocation algorithm: maps one surrogate value per population to
/// a feasible allocation. Takes values (never ranks); translating ranks or
/// bins to surrogate values is the selection rule's job.
using StageAlgorithm = std::function<Allocation(const std::vector<double>&)>;

/// Highest-surrogates-win stage algorithm for an environment.
StageAlgorithm surplus_max_alg(StageEnvironment env);

/// Sorted surrogate values, one row of T per population: psi[i][0] is the
/// surrogate of the highest rank (rank 1).
struct SurrogateProfile {
  std::vector<std::vector<double>> psi;

  int populations() const { return static_cast<int>(psi.size()); }
  int stages() const { return psi.empty() ? 0 : static_cast<int>(psi.front().size()); }
  /// Throws unless rows share a length and are weakly decreasing.
  void validate() const;
};

/// The allocation probability each surrogate receives when every other
/// population's surrogate is drawn uniformly at random.
struct CharacteristicWeights {
  enum class Method { kExact, kMonteCarlo };

  std::vector<std::vector<double>> w;   // [n][T]
  std::vector<std::vector<double>> se;  // standard errors; empty when exact
  Method method = Method::kExact;
  std::uint64_t profiles_evaluated = 0;  // reproducibility metadata
};

/// Exact enumeration over the T^(n-1) opposing rank profiles when that count
/// is within `enumeration_budget`, otherwise Monte Carlo over `mc_profiles`
/// uniformly ranked profiles with per-cell standard errors.
CharacteristicWeights characteristic_weights(const SurrogateProfile& profile,
                                             const StageAlgorithm& stage_alg, RngStream& rng,
                                             std::uint64_t enumeration_budget = 1000000,
                                             std::int64_t mc_profiles = 200000);

/// Maps one population's bids to surrogate values, either by ranking the bid
/// against samples of a reference distribution (or bid pool) or by locating
/// the bid in a partition of the reference's support into T intervals of
/// equal probability.
class SelectionRule {
 public:
  static SelectionRule sample_ranking(std::vector<double> psi_row, QuantileDistribution reference);
  static SelectionRule sample_ranking_pool(std::vector<double> psi_row, std::vector<double> pool);
  static SelectionRule binning(std::vector<double> psi_row, const QuantileDistribution& reference);

  /// Draws T-1 samples, returns (rank, surrogate); rank 1 means the bid beat
  /// every sample, exact ties are broken uniformly at random.
  std::pair<int, double> select_sample_ranking(double bid, RngStream& rng) const;

  /// Returns (bin, surrogate) for the interval containing the bid; boundary
  /// points belong to the higher-value interval. Throws OutOfSupport outside
  /// the partition.
  std::pair<int, double> select_binning(double bid) const;

  bool is_binning() const { return binning_; }
  int stages() const { return static_cast<int>(psi_.size()); }
  const std::vector<double>& surrogates() const { return psi_; }
  const std::vector<double>& bin_thresholds() const { return thresholds_; }

 private:
  std::vector<double> psi_;
  bool binning_ = false;
  QuantileDistribution reference_;
  bool has_reference_ = false;
  std::vector<double> pool_;
  std::vector<double> thresholds_;  // descending bin-edge values, size T-1
  double support_lo_ = 0.0, support_hi_ = 0.0;
};

/// Batched run: ranks each population's T bids against each other (ties
/// uniformly randomized) and allocates every stage at the rank-indexed
/// surrogates. Returns one allocation per stage.
std::vector<Allocation> run_sra(const SurrogateProfile& profile, const StageAlgorithm& stage_alg,
                                const std::vector<std::vector<double>>& bids, RngStream& rng);

/// Single-stage variant: ranks each agent's bid against T-1 samples drawn
/// without replacement from that population's bid pool.
Allocation run_ssra(const SurrogateProfile& profile, const StageAlgorithm& stage_alg,
                    const std::vector<double>& bids,
                    const std::vector<std::vector<double>>& bid_pools, RngStream& rng);

/// Deterministic single-stage run through per-population binning rules.
Allocation run_surrogate_binning(const SurrogateProfile& profile,
                                 const StageAlgorithm& stage_alg,
                                 const std::vector<SelectionRule>& rules,
                                 const std::vector<double>& bids);

/// Conditional-expectation surrogates: psi[i][j] is the expected value (or
/// virtual value) of the j-th highest of T draws from d_list[i].
SurrogateProfile optimal_surrogates(const std::vector<QuantileDistribution>& d_list, int T,
                                    Objective objective);

}  // namespace rankmech
