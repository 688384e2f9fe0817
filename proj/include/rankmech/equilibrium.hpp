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
#include <vector>

#include "rankmech/dist.hpp"
#include "rankmech/env.hpp"
#include "rankmech/numeric.hpp"
#include "rankmech/rng.hpp"
#include "rankmech/surrogate.hpp"

namespace rankmech {

enum class PaymentSemantics { kWinnerPaysBid, kAllPay };

/// A rank-by-bid position auction among T i.i.d. agents: the j-th highest
/// bid is served with probability weights[j-1].
struct PositionAuctionSpec {
  std::vector<double> weights;  // weakly decreasing, in [0,1]
  QuantileDistribution dist;
  PaymentSemantics semantics = PaymentSemantics::kWinnerPaysBid;

  void validate() const;
};

/// A monotone symmetric-equilibrium strategy on a value grid with
/// shape-preserving interpolation between grid points.
struct BidFunction {
  std::vector<double> values;  // increasing
  std::vector<double> bids;    // weakly increasing
  PaymentSemantics semantics = PaymentSemantics::kWinnerPaysBid;
  MonotoneCubic interp;

  double operator()(double value) const { return interp(value); }
  double inverse(double bid) const { return interp.inverse(bid); }
  static BidFunction from_grid(std::vector<double> values, std::vector<double> bids,
                               PaymentSemantics semantics);
};

/// Interim service probability of an agent at quantile q when the T-1
/// opponents bid symmetrically: the agent's rank is 1 + Binomial(T-1, q).
double interim_allocation_q(const std::vector<double>& weights, double q);

/// Same, parameterized by value.
double interim_allocation(const PositionAuctionSpec& spec, double value);

/// The symmetric-equilibrium bid function, from the payment identity
/// p(v) = v x(v) - int_0^v x(z) dz with p at the bottom of the support 0:
/// all-pay bids equal p(v); winner-pays-bid bids equal p(v)/x(v) where
/// x(v) > 0 and the infimum winning bid where x(v) = 0.
BidFunction equilibrium_bid(const PositionAuctionSpec& spec, int grid_points = 2048);

struct BestResponseGap {
  double gap = 0.0;        // largest estimated gain from deviating
  double se = 0.0;         // standard error of that estimate
  double value = 0.0;      // value achieving the gap
  double deviation = 0.0;  // deviating bid achieving the gap
};

/// Monte Carlo certificate that bid_fn is (close to) a best response to
/// itself: maximizes the estimated utility gain over a grid of values and
/// deviating bids against T-1 opponents playing bid_fn.
BestResponseGap best_response_gap(const PositionAuctionSpec& spec, const BidFunction& bid_fn,
                                  int trials, int deviation_grid, RngStream& rng);

/// Draws `trials` value matrices and checks that the batched ranking run on
/// raw values matches the run on mapped bids exactly, with tie randomization
/// synchronized through cloned substreams. Strictly increasing maps must
/// yield true; non-monotone maps are expected to fail.
bool check_revelation_equivalence(const SurrogateProfile& profile, const StageAlgorithm& stage_alg,
                                  const std::vector<QuantileDistribution>& d_list,
                                  const std::vector<std::function<double(double)>>& bid_maps,
                                  int trials, RngStream& rng);

/// Expected-payment strategy of the truthful welfare-maximizing mechanism
/// (surplus maximization with threshold payments), estimated by Monte Carlo
/// on the given value grid. This undoes the revelation principle for the
/// all-pay semantics; it is a test oracle, not a practical mechanism.
BidFunction unrevelation_allpay_bid(const std::vector<QuantileDistribution>& d_list,
                                    const StageEnvironment& env, int agent,
                                    const std::vector<double>& value_grid, int trials,
                                    RngStream& rng);

}  // namespace rankmech
