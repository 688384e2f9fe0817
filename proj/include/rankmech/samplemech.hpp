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

#include "rankmech/dist.hpp"
#include "rankmech/env.hpp"
#include "rankmech/rng.hpp"

namespace rankmech {

/// Value samples per population, with the seed they were drawn from.
struct SampleSet {
  std::vector<std::vector<double>> values;
  std::uint64_t seed = 0;

  static SampleSet draw(const std::vector<QuantileDistribution>& d_list, std::int64_t profiles,
                        std::uint64_t seed);
};

/// Which order statistic estimates the value at quantile j/T from N = mT-1
/// samples. kJM (the r = j*m-th highest, whose expected quantile is exactly
/// j/T) is the default; kJMMinusOne is kept selectable for comparison.
enum class BreakpointIndexing { kJM, kJMMinusOne };

/// Breakpoint values v^1 >= ... >= v^(T-1) estimated from the first mT-1
/// samples. Throws InsufficientSamples if fewer are supplied.
std::vector<double> estimate_breakpoints(const std::vector<double>& samples, int T, int m,
                                         BreakpointIndexing indexing = BreakpointIndexing::kJM);

struct SurrogateEstimate {
  std::vector<double> psi;
  bool degenerate = false;    // T == 1
  std::vector<int> inverted;  // 1-based ranks j with psi[j-1] > psi[j-2]
};

/// Conditional virtual value estimates psi^j = j v^j - (j-1) v^(j-1) with
/// the bottom value floored at 0. Monotonicity is not enforced; inverted
/// adjacent entries are flagged, never re-sorted.
SurrogateEstimate estimate_surrogates(const std::vector<double>& breakpoints, int T);

struct SampleMechParams {
  double c_T = 1.0;  // T = ceil(c_T * n / eps^2)
  BreakpointIndexing indexing = BreakpointIndexing::kJM;
};

/// Value-space binning mechanism estimated from samples: per-population
/// breakpoint values and conditional virtual value estimates, evaluated by
/// bin lookup, surplus maximization on the estimated surrogates, and
/// bin-edge threshold payments.
class EstimatedMechanism {
 public:
  struct Outcome {
    Allocation alloc;
    std::vector<double> payments;
    std::vector<int> bins;
  };

  EstimatedMechanism(StageEnvironment env, std::vector<std::vector<double>> breakpoint_values,
                     std::vector<std::vector<double>> surrogates,
                     std::vector<std::vector<int>> inverted_rows, bool degenerate,
                     BreakpointIndexing indexing);

  Outcome evaluate(const std::vector<double>& values) const;

  int populations() const { return static_cast<int>(surrogates_.size()); }
  int stages() const { return T_; }
  const std::vector<std::vector<double>>& breakpoint_values() const { return breakpoints_; }
  const std::vector<std::vector<double>>& surrogates() const { return surrogates_; }
  const std::vector<std::vector<int>>& inverted_rows() const { return inverted_; }
  bool degenerate() const { return degenerate_; }
  const StageEnvironment& environment() const { return env_; }

  /// Structured dump (JSON) of breakpoints and surrogates for reuse.
  std::string to_json() const;
  static EstimatedMechanism from_json(const std::string& text, StageEnvironment env);

 private:
  StageEnvironment env_;
  std::vector<std::vector<double>> breakpoints_;  // [n][T-1], descending
  std::vector<std::vector<double>> surrogates_;   // [n][T]
  std::vector<std::vector<int>> inverted_;
  bool degenerate_ = false;
  BreakpointIndexing indexing_ = BreakpointIndexing::kJM;
  int T_ = 0;
};

/// Assembles the mechanism: T = ceil(c_T * n / eps^2), m as large as the
/// supplied samples allow (throws InsufficientSamples when m < 1).
EstimatedMechanism build_sample_mechanism(const SampleSet& samples, const StageEnvironment& env,
                                          double eps, SampleMechParams params = {});

struct PropagationAudit {
  double rev_true = 0.0;   // conditional virtual surplus with true surrogates
  double rev_hat = 0.0;    // same allocation objective under the estimates
  double gamma_sum = 0.0;  // sum_i max_j |psi_hat - psi|
  double diff_se = 0.0;    // standard error of rev_true - rev_hat
  bool holds = false;      // rev_hat >= rev_true - 2*gamma_sum - 3*diff_se
};

/// Monte Carlo check that surrogate estimation error degrades revenue by at
/// most twice the summed per-population error: runs the uniform-bin optimal
/// binning allocation under both surrogate matrices on shared value draws
/// and compares the true-surrogate-weighted objective.
PropagationAudit propagation_audit(const std::vector<std::vector<double>>& psi_true,
                                   const std::vector<std::vector<double>>& psi_hat,
                                   const StageEnvironment& env,
                                   const std::vector<QuantileDistribution>& d_list,
                                   std::int64_t trials, RngStream& rng);

}  // namespace rankmech
