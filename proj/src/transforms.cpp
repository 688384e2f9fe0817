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

#include "rankmech/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "rankmech/errors.hpp"

namespace rankmech {

void Breakpoints::validate() const {
  if (q.empty()) throw Error("breakpoints: no populations");
  const std::size_t len = q.front().size();
  for (const auto& row : q) {
    if (row.size() != len) throw Error("breakpoints: ragged rows");
    double prev = 0.0;
    for (double b : row) {
      if (!(b > 0.0 && b < 1.0)) throw Error("breakpoints must lie strictly inside (0,1)");
      if (b < prev) throw Error("breakpoints must be weakly increasing");
      prev = b;
    }
  }
}

Breakpoints Breakpoints::uniform(int populations, int T) {
  if (populations < 1 || T < 1) throw Error("breakpoints: bad sizes");
  Breakpoints bp;
  bp.q.assign(populations, {});
  for (auto& row : bp.q) {
    row.reserve(T - 1);
    for (int j = 1; j < T; ++j) row.push_back(static_cast<double>(j) / T);
  }
  return bp;
}

double top_promote_quantile(double q, int k, int T) {
  if (!(q >= 0.0 && q <= 1.0)) throw Error("top_promote_quantile: quantile outside [0,1]");
  if (k == 0) return q;
  if (!(k >= 1 && k < T)) throw InvalidK("top_promote_quantile: need 0 <= k < T");
  const double cut = static_cast<double>(k) / T;
  if (q <= cut) return 0.0;
  return (q - cut) / (1.0 - cut);
}

double k_top_promote_quantile(double q, const std::vector<double>& breakpoint_row, int k) {
  if (!(q >= 0.0 && q <= 1.0)) throw Error("k_top_promote_quantile: quantile outside [0,1]");
  if (k == 0) return q;
  if (k < 1 || k > static_cast<int>(breakpoint_row.size())) {
    throw InvalidK("k_top_promote_quantile: need 0 <= k <= T-1");
  }
  const double cut = breakpoint_row[k - 1];
  if (q <= cut) return 0.0;
  return (q - cut) / (1.0 - cut);
}

namespace {

double value_at_promoted(const QuantileDistribution& d, double q) {
  // Promoted quantile 0 maps to the supremum of the support (which may be
  // +infinity; surplus maximization handles that exactly).
  return d.value_at(q);
}

}  // namespace

Allocation run_top_promotion(const StageAlgorithm& stage_alg,
                             const std::vector<QuantileDistribution>& d_list, int k, int T,
                             const std::vector<double>& values, RngStream& rng) {
  const int n = static_cast<int>(d_list.size());
  if (static_cast<int>(values.size()) != n) throw Error("run_top_promotion: size mismatch");
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i) q[i] = d_list[i].quantile_of(values[i], &rng);
  return stage_alg(promoted_values(d_list, q, k, T));
}

std::vector<double> resample_quantiles_q(int k, int T, const std::vector<double>& quantiles,
                                         RngStream& rng) {
  if (k < 0 || 2 * k >= T) throw InvalidK("resample_quantiles: need 0 <= k < T/2");
  std::vector<double> out(quantiles.size());
  std::vector<double> joint;
  for (std::size_t i = 0; i < quantiles.size(); ++i) {
    const double q = quantiles[i];
    int bin = static_cast<int>(std::ceil(q * T));
    bin = std::min(std::max(bin, 1), T);
    if (bin <= T - k) {
      out[i] = rng.uniform(static_cast<double>(bin - 1) / T, static_cast<double>(bin) / T);
    } else {
      // Bottom k bins share one jointly drawn, sorted sample; the agent
      // takes the entry matching its bin order.
      joint.resize(k);
      for (int s = 0; s < k; ++s) {
        joint[s] = rng.uniform(static_cast<double>(T - k) / T, 1.0);
      }
      std::sort(joint.begin(), joint.end());
      out[i] = joint[bin - (T - k) - 1];
    }
  }
  return out;
}

std::vector<double> resample_quantiles(const std::vector<QuantileDistribution>& d_list, int k,
                                       int T, const std::vector<double>& values, RngStream& rng) {
  const int n = static_cast<int>(d_list.size());
  if (static_cast<int>(values.size()) != n) throw Error("resample_quantiles: size mismatch");
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i) q[i] = d_list[i].quantile_of(values[i], &rng);
  return resample_quantiles_q(k, T, q, rng);
}

std::vector<double> promoted_values(const std::vector<QuantileDistribution>& d_list,
                                    const std::vector<double>& quantiles, int k, int T) {
  std::vector<double> out(quantiles.size());
  for (std::size_t i = 0; i < quantiles.size(); ++i) {
    out[i] = value_at_promoted(d_list[i], top_promote_quantile(quantiles[i], k, T));
  }
  return out;
}

Allocation run_resampling(const StageAlgorithm& stage_alg,
                          const std::vector<QuantileDistribution>& d_list, int k, int T,
                          const std::vector<double>& values, RngStream& rng) {
  const std::vector<double> q = resample_quantiles(d_list, k, T, values, rng);
  return stage_alg(promoted_values(d_list, q, k, T));
}

BinnedOutcome run_optimal_binning(const StageEnvironment& env,
                                  const std::vector<QuantileDistribution>& d_list,
                                  const Breakpoints& bp, const std::vector<double>& values) {
  bp.validate();
  const int n = env.agents();
  const int T = bp.stages();
  if (static_cast<int>(d_list.size()) != n || static_cast<int>(values.size()) != n ||
      bp.populations() != n) {
    throw Error("run_optimal_binning: size mismatch");
  }

  // Conditional virtual value per bin, plus the value at each bin's lower
  // edge (the payment ladder).
  std::vector<std::vector<double>> psi(n, std::vector<double>(T));
  std::vector<std::vector<double>> edge_value(n, std::vector<double>(T));
  BinnedOutcome out;
  out.bins.assign(n, 0);
  std::vector<double> surro(n);
  for (int i = 0; i < n; ++i) {
    const auto& row = bp.q[i];
    for (int j = 1; j <= T; ++j) {
      const double lo = (j == 1) ? 0.0 : row[j - 2];
      const double hi = (j == T) ? 1.0 : row[j - 1];
      psi[i][j - 1] = conditional_virtual_value(d_list[i], lo, hi);
      edge_value[i][j - 1] = d_list[i].value_at(hi);
    }
    // Boundary values belong to the higher-value bin.
    int bin = 1;
    for (int j = 1; j < T; ++j) {
      if (values[i] < d_list[i].value_at(row[j - 1])) ++bin;
    }
    out.bins[i] = bin;
    surro[i] = psi[i][bin - 1];
  }

  out.alloc = surplus_max(env, surro);
  out.payments.assign(n, 0.0);
  std::vector<double> probe = surro;
  for (int i = 0; i < n; ++i) {
    if (out.alloc[i] < 0.5) continue;
    // Lowest bin at which the agent still wins, applying the environment's
    // own tie-breaking at every step.
    int lowest = out.bins[i];
    for (int j = T; j >= 1; --j) {
      probe[i] = psi[i][j - 1];
      if (surplus_max(env, probe)[i] > 0.5) {
        lowest = j;
        break;
      }
    }
    probe[i] = surro[i];
    out.payments[i] = edge_value[i][lowest - 1];
  }
  return out;
}

}  // namespace rankmech
