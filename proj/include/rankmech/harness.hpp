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
#include <limits>
#include <string>
#include <vector>

#include "rankmech/dist.hpp"
#include "rankmech/env.hpp"
#include "rankmech/surrogate.hpp"

namespace rankmech {

enum class ExperimentKind {
  kSraConvergence,
  kBoundsSweep,
  kSampleMech,
  kEquilibriumAudit,
  kInferenceLoop,
};

/// Parsed experiment configuration. The on-disk format is line-oriented
/// `key = value` text; `dist` may repeat (one line per population), list
/// values are space separated, and `#` starts a comment.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kSraConvergence;
  std::string env_spec = "single_item";
  std::vector<std::string> dist_specs;
  std::string objective = "welfare";  // welfare | revenue | both
  std::vector<int> T_list;
  std::string k_rule = "auto";  // auto | fixed <k> | none
  std::int64_t trials = 10000;
  std::int64_t eval_trials = 0;  // 0: same as trials
  std::uint64_t seed = 1;
  std::string out_path;
  double eps = 0.25;
  std::vector<std::int64_t> budgets;
  int rounds = 5;
  int n_max = 12;                 // bounds sweep
  std::string index_rule = "jm";  // jm | jm_minus_1

  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_text(const std::string& text);
  /// Canonical key=value rendering used for the reproducibility hash.
  std::string canonical_text() const;
  std::uint64_t hash() const;
};

/// Builders for the config-file environment and distribution grammars:
///   single_item | k_unit K | exact_k_unit K | position W1 W2 ... |
///   single_minded M B1|B2|... (bundles are comma-free item lists) |
///   explicit 0/1-strings
StageEnvironment make_environment(const std::string& spec, int n);
///   uniform LO HI | exponential RATE | equal_revenue QMIN |
///   worst_case {welfare|revenue} K N | piecewise_value q v q v ...
QuantileDistribution make_distribution(const std::string& spec);

struct ResultRow {
  std::string experiment;
  std::string params;  // key=value pairs joined with ';'
  double estimate = 0.0;
  double se = 0.0;
  double oracle = std::numeric_limits<double>::quiet_NaN();  // when applicable
  double wall_ms = 0.0;
};

void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows,
                    const std::string& header_comment);

/// Performance of the conditional-expectation ranking mechanism against the
/// exact per-stage optimum, over the configured T schedule, with a
/// scheduled-k resampling arm when k_rule != none; appends a fitted
/// log-log slope row per objective.
std::vector<ResultRow> run_sra_convergence(const ExperimentConfig& cfg);

/// Re-estimates surrogate values from equilibrium bids round over round:
/// plays the symmetric equilibrium of the current mechanism, inverts the bid
/// functions, re-estimates order statistics, and rebuilds the surrogates.
/// The default starting point is an evenly spaced surrogate ladder; pass
/// `initial` to start elsewhere (e.g. at the conditional-expectation
/// optimum, which should be a fixed point).
std::vector<ResultRow> run_inference_loop(const ExperimentConfig& cfg,
                                          const SurrogateProfile* initial = nullptr);

/// Best-response gaps, revenue equivalence, and payment/virtual-surplus
/// identity checks for the configured position environment.
std::vector<ResultRow> run_equilibrium_audit(const ExperimentConfig& cfg);

struct SampleMechRow {
  std::int64_t budget = 0;
  double rev_hat = 0.0;
  double rev_opt = 0.0;
  double ratio = 0.0;
  double se = 0.0;
  std::string mechanism_json;
};

std::vector<SampleMechRow> run_samplemech_experiment(const ExperimentConfig& cfg);

void write_samplemech_csv(std::ostream& os, const std::vector<SampleMechRow>& rows,
                          const std::string& header_comment);

/// Dispatches on cfg.kind, writes the output CSV (and any mechanism dumps)
/// to cfg.out_path or stdout. Returns a process exit code.
int run_experiment(const ExperimentConfig& cfg, std::ostream& diagnostics);

/// Proof-schedule promotion depth: round((n/T)^(2/3) * T) clipped to
/// [1, T/2 - 1].
int scheduled_k(int n, int T);

}  // namespace rankmech
