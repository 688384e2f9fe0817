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

#include "rankmech/samplemech.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "rankmech/errors.hpp"
#include "rankmech/numeric.hpp"

namespace rankmech {

SampleSet SampleSet::draw(const std::vector<QuantileDistribution>& d_list, std::int64_t profiles,
                          std::uint64_t seed) {
  SampleSet out;
  out.seed = seed;
  RngStream rng(seed);
  out.values.resize(d_list.size());
  for (std::size_t i = 0; i < d_list.size(); ++i) {
    RngStream sub = rng.substream(i);
    out.values[i].resize(profiles);
    for (std::int64_t s = 0; s < profiles; ++s) out.values[i][s] = d_list[i].sample(sub);
  }
  return out;
}

std::vector<double> estimate_breakpoints(const std::vector<double>& samples, int T, int m,
                                         BreakpointIndexing indexing) {
  if (T < 1 || m < 1) throw Error("estimate_breakpoints: need T >= 1 and m >= 1");
  const std::int64_t needed = static_cast<std::int64_t>(m) * T - 1;
  if (static_cast<std::int64_t>(samples.size()) < needed) {
    throw InsufficientSamples("estimate_breakpoints: need at least mT-1 samples");
  }
  std::vector<double> sorted(samples.begin(), samples.begin() + needed);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  std::vector<double> out(T - 1);
  for (int j = 1; j < T; ++j) {
    const std::int64_t r =
        indexing == BreakpointIndexing::kJM ? static_cast<std::int64_t>(j) * m
                                            : static_cast<std::int64_t>(j) * m - 1;
    out[j - 1] = sorted[r - 1];  // r-th highest, 1-based
  }
  return out;
}

SurrogateEstimate estimate_surrogates(const std::vector<double>& breakpoints, int T) {
  if (T < 1) throw Error("estimate_surrogates: need T >= 1");
  if (static_cast<int>(breakpoints.size()) != T - 1) {
    throw Error("estimate_surrogates: need T-1 breakpoints");
  }
  SurrogateEstimate out;
  out.degenerate = (T == 1);
  out.psi.resize(T);
  auto v_at = [&](int j) {  // v^0 is unused by the j=1 term; v^T floors at 0
    if (j <= 0) return 0.0;
    if (j >= T) return 0.0;
    return breakpoints[j - 1];
  };
  for (int j = 1; j <= T; ++j) {
    out.psi[j - 1] = j * v_at(j) - (j - 1) * v_at(j - 1);
  }
  for (int j = 2; j <= T; ++j) {
    if (out.psi[j - 1] > out.psi[j - 2] + 1e-12) out.inverted.push_back(j);
  }
  return out;
}

EstimatedMechanism::EstimatedMechanism(StageEnvironment env,
                                       std::vector<std::vector<double>> breakpoint_values,
                                       std::vector<std::vector<double>> surrogates,
                                       std::vector<std::vector<int>> inverted_rows, bool degenerate,
                                       BreakpointIndexing indexing)
    : env_(std::move(env)),
      breakpoints_(std::move(breakpoint_values)),
      surrogates_(std::move(surrogates)),
      inverted_(std::move(inverted_rows)),
      degenerate_(degenerate),
      indexing_(indexing) {
  if (surrogates_.empty()) throw Error("estimated mechanism: no populations");
  T_ = static_cast<int>(surrogates_.front().size());
  if (static_cast<int>(surrogates_.size()) != env_.agents()) {
    throw Error("estimated mechanism: population count must match the environment");
  }
  for (std::size_t i = 0; i < surrogates_.size(); ++i) {
    if (static_cast<int>(surrogates_[i].size()) != T_ ||
        static_cast<int>(breakpoints_[i].size()) != T_ - 1) {
      throw Error("estimated mechanism: ragged rows");
    }
  }
}

EstimatedMechanism::Outcome EstimatedMechanism::evaluate(const std::vector<double>& values) const {
  const int n = populations();
  if (static_cast<int>(values.size()) != n) throw Error("evaluate: value profile size mismatch");
  Outcome out;
  out.bins.resize(n);
  std::vector<double> surro(n);
  for (int i = 0; i < n; ++i) {
    int bin = 1;  // boundary values go to the higher bin
    for (double threshold : breakpoints_[i]) {
      if (values[i] < threshold) ++bin;
    }
    out.bins[i] = bin;
    surro[i] = surrogates_[i][bin - 1];
  }
  out.alloc = surplus_max(env_, surro);
  out.payments.assign(n, 0.0);
  std::vector<double> probe = surro;
  for (int i = 0; i < n; ++i) {
    if (out.alloc[i] < 0.5) continue;
    // Lowest (largest-index) bin whose surrogate still wins; scanning from
    // the bottom also copes with non-monotone estimated rows.
    int lowest = out.bins[i];
    for (int j = T_; j >= 1; --j) {
      probe[i] = surrogates_[i][j - 1];
      if (surplus_max(env_, probe)[i] > 0.5) {
        lowest = j;
        break;
      }
    }
    probe[i] = surro[i];
    out.payments[i] = lowest == T_ ? 0.0 : breakpoints_[i][lowest - 1];
  }
  return out;
}

std::string EstimatedMechanism::to_json() const {
  nlohmann::json j;
  j["n"] = populations();
  j["T"] = T_;
  j["env"] = env_.label();
  j["index_rule"] = indexing_ == BreakpointIndexing::kJM ? "jm" : "jm_minus_1";
  j["degenerate"] = degenerate_;
  j["populations"] = nlohmann::json::array();
  for (int i = 0; i < populations(); ++i) {
    nlohmann::json pop;
    pop["breakpoints"] = breakpoints_[i];
    pop["surrogates"] = surrogates_[i];
    pop["inverted"] = inverted_[i];
    j["populations"].push_back(pop);
  }
  return j.dump(2);
}

EstimatedMechanism EstimatedMechanism::from_json(const std::string& text, StageEnvironment env) {
  const auto j = nlohmann::json::parse(text);
  std::vector<std::vector<double>> breakpoints;
  std::vector<std::vector<double>> surrogates;
  std::vector<std::vector<int>> inverted;
  for (const auto& pop : j.at("populations")) {
    breakpoints.push_back(pop.at("breakpoints").get<std::vector<double>>());
    surrogates.push_back(pop.at("surrogates").get<std::vector<double>>());
    inverted.push_back(pop.at("inverted").get<std::vector<int>>());
  }
  const auto indexing = j.at("index_rule").get<std::string>() == "jm"
                            ? BreakpointIndexing::kJM
                            : BreakpointIndexing::kJMMinusOne;
  return EstimatedMechanism(std::move(env), std::move(breakpoints), std::move(surrogates),
                            std::move(inverted), j.at("degenerate").get<bool>(), indexing);
}

EstimatedMechanism build_sample_mechanism(const SampleSet& samples, const StageEnvironment& env,
                                          double eps, SampleMechParams params) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error("build_sample_mechanism: need 0 < eps < 1");
  const int n = env.agents();
  if (static_cast<int>(samples.values.size()) != n) {
    throw Error("build_sample_mechanism: need one sample list per agent");
  }
  const int T = std::max(
      2, static_cast<int>(std::ceil(params.c_T * static_cast<double>(n) / (eps * eps))));
  std::int64_t available = samples.values.front().size();
  for (const auto& pool : samples.values) {
    if (pool.empty()) throw InsufficientSamples("build_sample_mechanism: empty sample list");
    for (double v : pool) {
      if (!std::isfinite(v) || v < 0.0) {
        throw Error("build_sample_mechanism: samples must be finite and non-negative");
      }
    }
    available = std::min(available, static_cast<std::int64_t>(pool.size()));
  }
  const int m = static_cast<int>((available + 1) / T);
  if (m < 1) throw InsufficientSamples("build_sample_mechanism: need at least T samples");

  std::vector<std::vector<double>> breakpoints(n);
  std::vector<std::vector<double>> psi(n);
  std::vector<std::vector<int>> inverted(n);
  bool degenerate = false;
  for (int i = 0; i < n; ++i) {
    breakpoints[i] = estimate_breakpoints(samples.values[i], T, m, params.indexing);
    auto est = estimate_surrogates(breakpoints[i], T);
    degenerate = degenerate || est.degenerate;
    psi[i] = std::move(est.psi);
    inverted[i] = std::move(est.inverted);
  }
  return EstimatedMechanism(env, std::move(breakpoints), std::move(psi), std::move(inverted),
                            degenerate, params.indexing);
}

PropagationAudit propagation_audit(const std::vector<std::vector<double>>& psi_true,
                                   const std::vector<std::vector<double>>& psi_hat,
                                   const StageEnvironment& env,
                                   const std::vector<QuantileDistribution>& d_list,
                                   std::int64_t trials, RngStream& rng) {
  const int n = env.agents();
  if (static_cast<int>(psi_true.size()) != n || static_cast<int>(psi_hat.size()) != n ||
      static_cast<int>(d_list.size()) != n) {
    throw Error("propagation_audit: size mismatch");
  }
  const int T = static_cast<int>(psi_true.front().size());
  PropagationAudit out;
  for (int i = 0; i < n; ++i) {
    double gamma = 0.0;
    for (int j = 0; j < T; ++j) gamma = std::max(gamma, std::abs(psi_hat[i][j] - psi_true[i][j]));
    out.gamma_sum += gamma;
  }

  Accumulator rev_true, rev_hat, diff;
  std::vector<double> surro_true(n), surro_hat(n);
  std::vector<int> bins(n);
  for (std::int64_t t = 0; t < trials; ++t) {
    for (int i = 0; i < n; ++i) {
      const double q = rng.uniform_open();
      bins[i] = std::min(T, 1 + static_cast<int>(q * T));
      surro_true[i] = psi_true[i][bins[i] - 1];
      surro_hat[i] = psi_hat[i][bins[i] - 1];
    }
    const Allocation x_true = surplus_max(env, surro_true);
    const Allocation x_hat = surplus_max(env, surro_hat);
    // Both allocations are scored by the true conditional virtual values.
    double a = 0.0, b = 0.0;
    for (int i = 0; i < n; ++i) {
      a += surro_true[i] * x_true[i];
      b += surro_true[i] * x_hat[i];
    }
    rev_true.add(a);
    rev_hat.add(b);
    diff.add(a - b);
  }
  out.rev_true = rev_true.mean;
  out.rev_hat = rev_hat.mean;
  out.diff_se = diff.se();
  out.holds = out.rev_hat >= out.rev_true - 2.0 * out.gamma_sum - 3.0 * out.diff_se;
  return out;
}

}  // namespace rankmech
