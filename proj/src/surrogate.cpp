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

#include "rankmech/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rankmech/errors.hpp"
#include "rankmech/numeric.hpp"

namespace rankmech {

StageAlgorithm surplus_max_alg(StageEnvironment env) {
  return [env = std::move(env)](const std::vector<double>& values) {
    return surplus_max(env, values);
  };
}

void SurrogateProfile::validate() const {
  if (psi.empty()) throw Error("surrogate profile: no populations");
  const std::size_t T = psi.front().size();
  for (const auto& row : psi) {
    if (row.size() != T || T == 0) throw Error("surrogate profile: ragged rows");
    for (std::size_t j = 1; j < T; ++j) {
      if (row[j] > row[j - 1] + 1e-12) {
        throw Error("surrogate profile: rows must be weakly decreasing");
      }
    }
  }
}

CharacteristicWeights characteristic_weights(const SurrogateProfile& profile,
                                             const StageAlgorithm& stage_alg, RngStream& rng,
                                             std::uint64_t enumeration_budget,
                                             std::int64_t mc_profiles) {
  profile.validate();
  const int n = profile.populations();
  const int T = profile.stages();

  double profiles = 1.0;
  for (int i = 0; i + 1 < n; ++i) profiles *= T;
  const bool exact = profiles <= static_cast<double>(enumeration_budget);

  CharacteristicWeights out;
  out.w.assign(n, std::vector<double>(T, 0.0));

  std::vector<double> surro(n, 0.0);
  if (exact) {
    out.method = CharacteristicWeights::Method::kExact;
    const std::uint64_t count = static_cast<std::uint64_t>(profiles);
    out.profiles_evaluated = count * static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(T);
    std::vector<int> others(std::max(0, n - 1), 0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < T; ++j) {
        std::fill(others.begin(), others.end(), 0);
        double total = 0.0;
        for (std::uint64_t c = 0; c < count; ++c) {
          int slot = 0;
          for (int p = 0; p < n; ++p) {
            surro[p] = (p == i) ? profile.psi[i][j] : profile.psi[p][others[slot++]];
          }
          total += stage_alg(surro)[i];
          for (int s = 0; s < n - 1; ++s) {
            if (++others[s] < T) break;
            others[s] = 0;
          }
        }
        out.w[i][j] = total / static_cast<double>(count);
      }
    }
    return out;
  }

  out.method = CharacteristicWeights::Method::kMonteCarlo;
  out.profiles_evaluated = static_cast<std::uint64_t>(mc_profiles);
  std::vector<std::vector<Accumulator>> cells(n, std::vector<Accumulator>(T));
  std::vector<int> ranks(n, 0);
  for (std::int64_t trial = 0; trial < mc_profiles; ++trial) {
    for (int p = 0; p < n; ++p) {
      ranks[p] = rng.uniform_int(T);
      surro[p] = profile.psi[p][ranks[p]];
    }
    const Allocation x = stage_alg(surro);
    for (int p = 0; p < n; ++p) cells[p][ranks[p]].add(x[p]);
  }
  out.se.assign(n, std::vector<double>(T, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < T; ++j) {
      out.w[i][j] = cells[i][j].mean;
      out.se[i][j] = cells[i][j].se();
    }
  }
  return out;
}

SelectionRule SelectionRule::sample_ranking(std::vector<double> psi_row,
                                            QuantileDistribution reference) {
  SelectionRule rule;
  rule.psi_ = std::move(psi_row);
  rule.reference_ = std::move(reference);
  rule.has_reference_ = true;
  return rule;
}

SelectionRule SelectionRule::sample_ranking_pool(std::vector<double> psi_row,
                                                 std::vector<double> pool) {
  SelectionRule rule;
  rule.psi_ = std::move(psi_row);
  rule.pool_ = std::move(pool);
  return rule;
}

SelectionRule SelectionRule::binning(std::vector<double> psi_row,
                                     const QuantileDistribution& reference) {
  SelectionRule rule;
  rule.psi_ = std::move(psi_row);
  rule.binning_ = true;
  const int T = rule.stages();
  if (T < 1) throw Error("binning rule: empty surrogate row");
  rule.thresholds_.reserve(T - 1);
  for (int j = 1; j < T; ++j) {
    rule.thresholds_.push_back(reference.value_at(static_cast<double>(j) / T));
  }
  rule.support_lo_ = reference.value_at(1.0);
  rule.support_hi_ = reference.value_at(0.0);
  return rule;
}

std::pair<int, double> SelectionRule::select_sample_ranking(double bid, RngStream& rng) const {
  if (binning_) throw Error("select_sample_ranking: rule is a binning rule");
  const int T = stages();
  int higher = 0;
  int ties = 0;
  if (has_reference_) {
    for (int s = 0; s < T - 1; ++s) {
      const double draw = reference_.sample(rng);
      if (draw > bid) {
        ++higher;
      } else if (draw == bid) {
        ++ties;
      }
    }
  } else {
    if (static_cast<int>(pool_.size()) < T - 1) {
      throw InsufficientSamples("sample ranking: pool smaller than T-1");
    }
    // Partial Fisher-Yates: T-1 distinct pool entries.
    std::vector<std::size_t> idx(pool_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (int s = 0; s < T - 1; ++s) {
      const std::size_t pick =
          static_cast<std::size_t>(s) +
          static_cast<std::size_t>(rng.uniform_int(static_cast<int>(idx.size() - s)));
      std::swap(idx[s], idx[pick]);
      const double draw = pool_[idx[s]];
      if (draw > bid) {
        ++higher;
      } else if (draw == bid) {
        ++ties;
      }
    }
  }
  const int rank = 1 + higher + (ties > 0 ? rng.uniform_int(ties + 1) : 0);
  return {rank, psi_[rank - 1]};
}

std::pair<int, double> SelectionRule::select_binning(double bid) const {
  if (!binning_) throw Error("select_binning: rule is a sample-ranking rule");
  if (bid < support_lo_ || bid > support_hi_) {
    throw OutOfSupport("select_binning: bid outside the reference support");
  }
  int bin = 1;
  for (double threshold : thresholds_) {
    if (bid < threshold) ++bin;
  }
  return {bin, psi_[bin - 1]};
}

namespace {

// Ranks within one population: rank 1 = highest bid; exact ties are ordered
// by independent uniform keys, which randomizes them uniformly.
std::vector<int> rank_population(const std::vector<double>& bids,
                                 const std::vector<double>& keys) {
  const int T = static_cast<int>(bids.size());
  std::vector<int> order(T);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (bids[a] != bids[b]) return bids[a] > bids[b];
    return keys[a] < keys[b];
  });
  std::vector<int> rank(T);
  for (int pos = 0; pos < T; ++pos) rank[order[pos]] = pos + 1;
  return rank;
}

}  // namespace

std::vector<Allocation> run_sra(const SurrogateProfile& profile, const StageAlgorithm& stage_alg,
                                const std::vector<std::vector<double>>& bids, RngStream& rng) {
  profile.validate();
  const int n = profile.populations();
  const int T = profile.stages();
  if (static_cast<int>(bids.size()) != n) throw Error("run_sra: bid matrix needs n rows");
  for (const auto& row : bids) {
    if (static_cast<int>(row.size()) != T) throw Error("run_sra: bid matrix needs T columns");
  }
  // Tie keys are drawn in a fixed order so paired runs with cloned streams
  // break ties identically.
  std::vector<std::vector<double>> keys(n, std::vector<double>(T));
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < T; ++t) keys[i][t] = rng.uniform();
  }
  std::vector<std::vector<int>> ranks(n);
  for (int i = 0; i < n; ++i) ranks[i] = rank_population(bids[i], keys[i]);

  std::vector<Allocation> out;
  out.reserve(T);
  std::vector<double> surro(n);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) surro[i] = profile.psi[i][ranks[i][t] - 1];
    out.push_back(stage_alg(surro));
  }
  return out;
}

Allocation run_ssra(const SurrogateProfile& profile, const StageAlgorithm& stage_alg,
                    const std::vector<double>& bids,
                    const std::vector<std::vector<double>>& bid_pools, RngStream& rng) {
  profile.validate();
  const int n = profile.populations();
  const int T = profile.stages();
  if (static_cast<int>(bids.size()) != n || static_cast<int>(bid_pools.size()) != n) {
    throw Error("run_ssra: need one bid and one pool per population");
  }
  std::vector<double> surro(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(bid_pools[i].size()) < T - 1) {
      throw InsufficientSamples("run_ssra: pool smaller than T-1");
    }
    const auto rule = SelectionRule::sample_ranking_pool(profile.psi[i], bid_pools[i]);
    surro[i] = rule.select_sample_ranking(bids[i], rng).second;
  }
  return stage_alg(surro);
}

Allocation run_surrogate_binning(const SurrogateProfile& profile,
                                 const StageAlgorithm& stage_alg,
                                 const std::vector<SelectionRule>& rules,
                                 const std::vector<double>& bids) {
  profile.validate();
  const int n = profile.populations();
  if (static_cast<int>(rules.size()) != n || static_cast<int>(bids.size()) != n) {
    throw Error("run_surrogate_binning: need one rule and one bid per population");
  }
  std::vector<double> surro(n);
  for (int i = 0; i < n; ++i) {
    if (!rules[i].is_binning() || rules[i].surrogates() != profile.psi[i]) {
      throw Error("run_surrogate_binning: rules must be binning rules over the profile rows");
    }
    surro[i] = rules[i].select_binning(bids[i]).second;
  }
  return stage_alg(surro);
}

SurrogateProfile optimal_surrogates(const std::vector<QuantileDistribution>& d_list, int T,
                                    Objective objective) {
  if (T < 1) throw Error("optimal_surrogates: need T >= 1");
  SurrogateProfile profile;
  profile.psi.reserve(d_list.size());
  for (const auto& d : d_list) {
    if (objective == Objective::kRevenue && !d.regular()) {
      throw Error("optimal_surrogates: revenue objective needs regular distributions");
    }
    std::vector<double> row(T);
    for (int j = 1; j <= T; ++j) {
      row[j - 1] = expected_order_stat(
          d, {j, T},
          objective == Objective::kWelfare ? OrderStatOf::kValue : OrderStatOf::kVirtualValue);
    }
    profile.psi.push_back(std::move(row));
  }
  profile.validate();
  return profile;
}

}  // namespace rankmech
