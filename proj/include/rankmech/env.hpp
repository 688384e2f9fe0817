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
#include <string>
#include <vector>

namespace rankmech {

/// Per-agent service levels. 0/1 for set systems; position environments
/// assign fractional service equal to the weight of the agent's position.
using Allocation = std::vector<double>;

/// A stage feasibility system over n agents. Set systems are materialized as
/// an explicit list of feasible winner sets in lexicographic winner-index
/// order (which is also the tie-break order for surplus maximization); the
/// system is not required to be downward closed. Position environments are
/// solved by assortative matching instead of enumeration.
class StageEnvironment {
 public:
  static StageEnvironment single_item(int n);
  /// At most k winners (downward closed).
  static StageEnvironment k_unit(int n, int k);
  /// Exactly k winners (not downward closed).
  static StageEnvironment exact_k_unit(int n, int k);
  static StageEnvironment position(std::vector<double> weights);
  /// Bidder i wants the fixed bundle bundles[i] (1-based item ids in
  /// [1, items]); a winner set is feasible iff bundles are pairwise disjoint.
  static StageEnvironment single_minded(int items, std::vector<std::vector<int>> bundles,
                                        std::uint64_t enumeration_budget = kDefaultBudget);
  /// Explicit 0/1 allocation vectors.
  static StageEnvironment explicit_allocations(std::vector<std::vector<int>> allocations);

  int agents() const { return n_; }
  bool is_position() const { return position_; }
  const std::vector<double>& position_weights() const { return weights_; }
  /// Feasible winner sets (ascending agent indices). Not for position envs.
  const std::vector<std::vector<int>>& feasible_sets() const { return sets_; }
  const std::string& label() const { return label_; }

  static constexpr std::uint64_t kDefaultBudget = 1u << 20;

 private:
  int n_ = 0;
  bool position_ = false;
  std::vector<double> weights_;          // position environments only
  std::vector<std::vector<int>> sets_;   // set systems only
  std::string label_;
};

/// Feasible allocation maximizing sum_i weights[i] * x_i. Weights may be
/// negative or +infinity (totals compare by infinity count, then finite
/// part). Ties go to the lexicographically smallest winner-index sequence,
/// so the empty set wins exact ties and lower-indexed agents are preferred.
Allocation surplus_max(const StageEnvironment& env, const std::vector<double>& weights);

/// Smallest weight at which `winner` (currently served under `weights`)
/// remains served, holding the other weights fixed; found by bisection to
/// 1e-9. Throws NotAWinner if the precondition fails and UnboundedThreshold
/// if the agent stays served at arbitrarily negative weight.
double threshold_payment(const StageEnvironment& env, const std::vector<double>& weights,
                         int winner);

}  // namespace rankmech
