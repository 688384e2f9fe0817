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

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rankmech/errors.hpp"
#include "rankmech/harness.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  std::int64_t seed = -1;
  std::int64_t trials = -1;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "experiment config file (key = value lines)");
    app->add_option("--out", out_path, "output CSV path (default: stdout)");
    app->add_option("--seed", seed, "master seed override");
    app->add_option("--trials", trials, "trial count override");
  }

  void apply(rankmech::ExperimentConfig& cfg) const {
    if (!out_path.empty()) cfg.out_path = out_path;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (trials > 0) cfg.trials = trials;
  }

  /// Loads the config; a forced kind overrides whatever the file says (the
  /// `simulate` subcommand runs the file's own kind).
  rankmech::ExperimentConfig load(std::optional<rankmech::ExperimentKind> kind) const {
    rankmech::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = rankmech::ExperimentConfig::parse_file(config_path);
    if (kind) cfg.kind = *kind;
    apply(cfg);
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"batched-auction simulation harness"};
  app.require_subcommand(1);

  CommonFlags simulate_flags, bounds_flags, sample_flags, eq_flags, infer_flags;

  auto* simulate = app.add_subcommand(
      "simulate", "ranking-mechanism convergence sweep against the exact optimum");
  simulate_flags.attach(simulate);

  auto* bounds = app.add_subcommand(
      "bounds", "pricing-vs-ranking worst-case sweep (oracle, Monte Carlo, tabulated formulas)");
  bounds_flags.attach(bounds);
  int n_max = 12;
  bounds->add_option("--n-max", n_max, "largest population count in the sweep");

  auto* samplemech = app.add_subcommand(
      "samplemech", "build the mechanism from samples and score it against the optimum");
  sample_flags.attach(samplemech);
  std::vector<std::string> sm_dists;
  std::vector<std::int64_t> sm_budgets;
  std::string sm_env;
  std::string sm_index_rule;
  double sm_eps = 0.0;
  samplemech->add_option("--env", sm_env, "stage environment spec");
  samplemech->add_option("--dist", sm_dists, "distribution spec (repeat per population)");
  samplemech->add_option("--eps", sm_eps, "target loss parameter");
  samplemech->add_option("--budget", sm_budgets, "sample budget (repeatable)");
  samplemech->add_option("--index-rule", sm_index_rule, "breakpoint indexing: jm | jm_minus_1");

  auto* equilibrium = app.add_subcommand(
      "equilibrium", "bid-function audit: best-response gaps and revenue equivalence");
  eq_flags.attach(equilibrium);

  auto* infer = app.add_subcommand(
      "infer", "re-estimate surrogate values from equilibrium bids, round over round");
  infer_flags.attach(infer);
  int rounds = 0;
  infer->add_option("--rounds", rounds, "number of re-estimation rounds");

  CLI11_PARSE(app, argc, argv);

  try {
    rankmech::ExperimentConfig cfg;
    if (simulate->parsed()) {
      cfg = simulate_flags.load(std::nullopt);
    } else if (bounds->parsed()) {
      cfg = bounds_flags.load(rankmech::ExperimentKind::kBoundsSweep);
      if (bounds->count("--n-max") > 0) cfg.n_max = n_max;
    } else if (samplemech->parsed()) {
      cfg = sample_flags.load(rankmech::ExperimentKind::kSampleMech);
      if (!sm_env.empty()) cfg.env_spec = sm_env;
      if (!sm_dists.empty()) cfg.dist_specs = sm_dists;
      if (sm_eps > 0.0) cfg.eps = sm_eps;
      if (!sm_budgets.empty()) cfg.budgets = sm_budgets;
      if (!sm_index_rule.empty()) cfg.index_rule = sm_index_rule;
    } else if (equilibrium->parsed()) {
      cfg = eq_flags.load(rankmech::ExperimentKind::kEquilibriumAudit);
    } else {
      cfg = infer_flags.load(rankmech::ExperimentKind::kInferenceLoop);
      if (rounds > 0) cfg.rounds = rounds;
    }
    return rankmech::run_experiment(cfg, std::cerr);
  } catch (const rankmech::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
