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

#include "rankmech/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "rankmech/bounds.hpp"
#include "rankmech/equilibrium.hpp"
#include "rankmech/errors.hpp"
#include "rankmech/numeric.hpp"
#include "rankmech/samplemech.hpp"
#include "rankmech/transforms.hpp"

namespace rankmech {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double to_double(const std::string& s) {
  try {
    return std::stod(s);
  } catch (...) {
    throw ConfigError("bad numeric value: " + s);
  }
}

std::int64_t to_int(const std::string& s) {
  try {
    return std::stoll(s);
  } catch (...) {
    throw ConfigError("bad integer value: " + s);
  }
}

ExperimentKind parse_kind(const std::string& s) {
  if (s == "sra_convergence") return ExperimentKind::kSraConvergence;
  if (s == "bounds_sweep") return ExperimentKind::kBoundsSweep;
  if (s == "samplemech") return ExperimentKind::kSampleMech;
  if (s == "equilibrium_audit") return ExperimentKind::kEquilibriumAudit;
  if (s == "inference_loop") return ExperimentKind::kInferenceLoop;
  throw ConfigError("unknown experiment kind: " + s);
}

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kSraConvergence: return "sra_convergence";
    case ExperimentKind::kBoundsSweep: return "bounds_sweep";
    case ExperimentKind::kSampleMech: return "samplemech";
    case ExperimentKind::kEquilibriumAudit: return "equilibrium_audit";
    case ExperimentKind::kInferenceLoop: return "inference_loop";
  }
  return "?";
}

std::vector<Objective> parse_objectives(const std::string& s) {
  if (s == "welfare") return {Objective::kWelfare};
  if (s == "revenue") return {Objective::kRevenue};
  if (s == "both") return {Objective::kWelfare, Objective::kRevenue};
  throw ConfigError("objective must be welfare, revenue, or both");
}

const char* objective_name(Objective o) {
  return o == Objective::kWelfare ? "welfare" : "revenue";
}

double wall_ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError("empty value for key: " + key);
    if (key == "kind") {
      cfg.kind = parse_kind(value);
    } else if (key == "env") {
      cfg.env_spec = value;
    } else if (key == "dist") {
      cfg.dist_specs.push_back(value);
    } else if (key == "objective") {
      parse_objectives(value);
      cfg.objective = value;
    } else if (key == "T") {
      cfg.T_list.clear();
      for (const auto& tok : split_ws(value)) cfg.T_list.push_back(static_cast<int>(to_int(tok)));
    } else if (key == "k_rule") {
      cfg.k_rule = value;
    } else if (key == "trials") {
      cfg.trials = to_int(value);
    } else if (key == "eval_trials") {
      cfg.eval_trials = to_int(value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_int(value));
    } else if (key == "out") {
      cfg.out_path = value;
    } else if (key == "eps") {
      cfg.eps = to_double(value);
    } else if (key == "budgets") {
      cfg.budgets.clear();
      for (const auto& tok : split_ws(value)) cfg.budgets.push_back(to_int(tok));
    } else if (key == "rounds") {
      cfg.rounds = static_cast<int>(to_int(value));
    } else if (key == "n_max") {
      cfg.n_max = static_cast<int>(to_int(value));
    } else if (key == "index_rule") {
      if (value != "jm" && value != "jm_minus_1") throw ConfigError("index_rule: jm | jm_minus_1");
      cfg.index_rule = value;
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream os;
  os << "kind = " << kind_name(kind) << "\n";
  os << "env = " << env_spec << "\n";
  for (const auto& d : dist_specs) os << "dist = " << d << "\n";
  os << "objective = " << objective << "\n";
  if (!T_list.empty()) {
    os << "T =";
    for (int T : T_list) os << ' ' << T;
    os << "\n";
  }
  os << "k_rule = " << k_rule << "\n";
  os << "trials = " << trials << "\n";
  if (eval_trials > 0) os << "eval_trials = " << eval_trials << "\n";
  os << "seed = " << seed << "\n";
  os << "eps = " << eps << "\n";
  if (!budgets.empty()) {
    os << "budgets =";
    for (auto b : budgets) os << ' ' << b;
    os << "\n";
  }
  os << "rounds = " << rounds << "\n";
  os << "n_max = " << n_max << "\n";
  os << "index_rule = " << index_rule << "\n";
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string text = canonical_text();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

StageEnvironment make_environment(const std::string& spec, int n) {
  auto toks = split_ws(spec);
  if (toks.empty()) throw ConfigError("empty environment spec");
  const std::string& name = toks[0];
  if (name == "single_item") return StageEnvironment::single_item(n);
  if (name == "k_unit" || name == "exact_k_unit") {
    if (toks.size() != 2) throw ConfigError(name + " needs one parameter");
    const int k = static_cast<int>(to_int(toks[1]));
    return name == "k_unit" ? StageEnvironment::k_unit(n, k)
                            : StageEnvironment::exact_k_unit(n, k);
  }
  if (name == "position") {
    std::vector<double> w;
    for (std::size_t i = 1; i < toks.size(); ++i) w.push_back(to_double(toks[i]));
    if (static_cast<int>(w.size()) != n) {
      throw ConfigError("position weights must match the population count");
    }
    return StageEnvironment::position(std::move(w));
  }
  if (name == "single_minded") {
    if (toks.size() < 3) throw ConfigError("single_minded needs items and bundles");
    const int items = static_cast<int>(to_int(toks[1]));
    std::vector<std::vector<int>> bundles(1);
    for (std::size_t i = 2; i < toks.size(); ++i) {
      if (toks[i] == "|") {
        bundles.emplace_back();
      } else {
        bundles.back().push_back(static_cast<int>(to_int(toks[i])));
      }
    }
    if (static_cast<int>(bundles.size()) != n) {
      throw ConfigError("single_minded bundle count must match the population count");
    }
    return StageEnvironment::single_minded(items, std::move(bundles));
  }
  if (name == "explicit") {
    std::vector<std::vector<int>> allocations;
    for (std::size_t i = 1; i < toks.size(); ++i) {
      std::vector<int> x;
      for (char c : toks[i]) {
        if (c != '0' && c != '1') throw ConfigError("explicit allocations must be 0/1 strings");
        x.push_back(c - '0');
      }
      if (static_cast<int>(x.size()) != n) {
        throw ConfigError("explicit allocation length must match the population count");
      }
      allocations.push_back(std::move(x));
    }
    return StageEnvironment::explicit_allocations(std::move(allocations));
  }
  throw ConfigError("unknown environment: " + name);
}

QuantileDistribution make_distribution(const std::string& spec) {
  auto toks = split_ws(spec);
  if (toks.empty()) throw ConfigError("empty distribution spec");
  const std::string& name = toks[0];
  if (name == "uniform") {
    if (toks.size() != 3) throw ConfigError("uniform needs lo and hi");
    return QuantileDistribution::uniform(to_double(toks[1]), to_double(toks[2]));
  }
  if (name == "exponential") {
    if (toks.size() != 2) throw ConfigError("exponential needs a rate");
    return QuantileDistribution::exponential(to_double(toks[1]));
  }
  if (name == "equal_revenue") {
    if (toks.size() != 2) throw ConfigError("equal_revenue needs q_min");
    return QuantileDistribution::equal_revenue(to_double(toks[1]));
  }
  if (name == "worst_case") {
    if (toks.size() != 4) throw ConfigError("worst_case needs kind, k, n");
    QuantileDistribution::WorstCase kind;
    if (toks[1] == "welfare") {
      kind = QuantileDistribution::WorstCase::kWelfare;
    } else if (toks[1] == "revenue") {
      kind = QuantileDistribution::WorstCase::kRevenue;
    } else {
      throw ConfigError("worst_case kind must be welfare or revenue");
    }
    return QuantileDistribution::worst_case(kind, static_cast<int>(to_int(toks[2])),
                                            static_cast<int>(to_int(toks[3])));
  }
  if (name == "piecewise_value") {
    if (toks.size() < 5 || toks.size() % 2 == 0) {
      throw ConfigError("piecewise_value needs (q, v) pairs");
    }
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 1; i + 1 < toks.size(); i += 2) {
      pts.emplace_back(to_double(toks[i]), to_double(toks[i + 1]));
    }
    return QuantileDistribution::piecewise_value(std::move(pts));
  }
  throw ConfigError("unknown distribution: " + name);
}

// Wall-clock stays on the in-memory rows only: identical config and seed
// must reproduce the output stream byte for byte.
void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows,
                    const std::string& header_comment) {
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << "experiment,params,estimate,se,oracle\n";
  os.precision(12);
  for (const auto& r : rows) {
    os << r.experiment << ',' << r.params << ',' << r.estimate << ',' << r.se << ',';
    if (!std::isnan(r.oracle)) os << r.oracle;
    os << "\n";
  }
}

int scheduled_k(int n, int T) {
  const int hi = std::max(1, T / 2 - 1);
  const int k = static_cast<int>(
      std::lround(std::pow(static_cast<double>(n) / T, 2.0 / 3.0) * T));
  return std::clamp(k, 1, hi);
}

namespace {

std::vector<QuantileDistribution> config_distributions(const ExperimentConfig& cfg) {
  if (cfg.dist_specs.empty()) throw ConfigError("config needs at least one dist line");
  std::vector<QuantileDistribution> out;
  out.reserve(cfg.dist_specs.size());
  for (const auto& s : cfg.dist_specs) out.push_back(make_distribution(s));
  return out;
}

double objective_weight(const QuantileDistribution& d, Objective obj, double q) {
  return obj == Objective::kWelfare ? d.value_at(q) : d.virtual_value_unchecked(q);
}

}  // namespace

std::vector<ResultRow> run_sra_convergence(const ExperimentConfig& cfg) {
  const auto d_list = config_distributions(cfg);
  const int n = static_cast<int>(d_list.size());
  const StageEnvironment env = make_environment(cfg.env_spec, n);
  const auto objectives = parse_objectives(cfg.objective);
  if (cfg.T_list.empty()) throw ConfigError("sra_convergence needs a T list");
  for (Objective obj : objectives) {
    if (obj == Objective::kRevenue) {
      for (const auto& d : d_list) {
        if (!d.regular()) throw ConfigError("revenue objective needs regular distributions");
      }
    }
  }
  const StageAlgorithm alg = surplus_max_alg(env);
  RngStream master(cfg.seed);

  std::vector<ResultRow> rows;
  int obj_index = 0;
  for (Objective obj : objectives) {
    std::vector<double> log_nt, log_loss;
    for (int T : cfg.T_list) {
      const auto start = std::chrono::steady_clock::now();
      if (T < 2) throw ConfigError("T must be >= 2");
      const SurrogateProfile profile = optimal_surrogates(d_list, T, obj);

      int k = -1;
      const auto k_toks = split_ws(cfg.k_rule);
      if (cfg.k_rule == "auto") {
        k = scheduled_k(n, T);
      } else if (!k_toks.empty() && k_toks[0] == "fixed") {
        if (k_toks.size() != 2) throw ConfigError("k_rule fixed needs a value");
        k = std::clamp(static_cast<int>(to_int(k_toks[1])), 0, std::max(0, (T - 1) / 2));
      } else if (cfg.k_rule != "none") {
        throw ConfigError("k_rule must be auto, none, or fixed <k>");
      }

      RngStream stream = master.substream(1000 + obj_index).substream(T);
      // Slots: (srm, opt, resample) totals per trial; reduced sequentially
      // so output is independent of thread scheduling.
      std::vector<std::array<double, 3>> slot(cfg.trials);
      parallel_for(cfg.trials, [&](std::int64_t trial) {
        RngStream rng = stream.substream(static_cast<std::uint64_t>(trial));
        std::vector<std::vector<double>> q(n, std::vector<double>(T));
        std::vector<std::vector<double>> values(n, std::vector<double>(T));
        for (int i = 0; i < n; ++i) {
          for (int t = 0; t < T; ++t) {
            q[i][t] = rng.uniform_open();
            values[i][t] = d_list[i].value_at(q[i][t]);
          }
        }
        RngStream tie = rng.substream(1);
        const auto srm_alloc = run_sra(profile, alg, values, tie);
        double srm = 0.0, opt = 0.0, res = 0.0;
        std::vector<double> weights(n), stage_q(n);
        for (int t = 0; t < T; ++t) {
          for (int i = 0; i < n; ++i) {
            const double g = objective_weight(d_list[i], obj, q[i][t]);
            srm += g * srm_alloc[t][i];
            weights[i] = obj == Objective::kWelfare ? values[i][t]
                                                    : d_list[i].virtual_value_unchecked(q[i][t]);
          }
          const Allocation x_opt = surplus_max(env, weights);
          for (int i = 0; i < n; ++i) {
            opt += objective_weight(d_list[i], obj, q[i][t]) * x_opt[i];
          }
          if (k >= 0) {
            for (int i = 0; i < n; ++i) stage_q[i] = q[i][t];
            RngStream rs = rng.substream(100 + t);
            const auto rq = resample_quantiles_q(k, T, stage_q, rs);
            for (int i = 0; i < n; ++i) {
              const double pq = top_promote_quantile(rq[i], k, T);
              weights[i] = pq == 0.0 ? std::numeric_limits<double>::infinity()
                                     : objective_weight(d_list[i], obj, pq);
            }
            const Allocation x_res = surplus_max(env, weights);
            for (int i = 0; i < n; ++i) {
              res += objective_weight(d_list[i], obj, q[i][t]) * x_res[i];
            }
          }
        }
        slot[trial] = {srm, opt, res};
      });

      RatioAccumulator srm_ratio, res_ratio;
      for (const auto& s : slot) {
        srm_ratio.add(s[0], s[1]);
        if (k >= 0) res_ratio.add(s[2], s[1]);
      }
      const double ms = wall_ms_since(start);
      {
        std::ostringstream params;
        params << "arm=optimal_srm;objective=" << objective_name(obj) << ";n=" << n << ";T=" << T;
        rows.push_back({"sra_convergence", params.str(), srm_ratio.ratio(), srm_ratio.ratio_se(),
                        std::numeric_limits<double>::quiet_NaN(), ms});
      }
      if (k >= 0) {
        std::ostringstream params;
        params << "arm=resampling;objective=" << objective_name(obj) << ";n=" << n << ";T=" << T
               << ";k=" << k;
        const double bound = std::pow(1.0 - static_cast<double>(k) / T, 2.0) *
                             (1.0 - static_cast<double>(k) * (n - 1) / T);
        rows.push_back({"sra_convergence", params.str(), res_ratio.ratio(), res_ratio.ratio_se(),
                        bound, ms});
      }
      if (srm_ratio.ratio() < 1.0) {
        log_nt.push_back(std::log(static_cast<double>(n) / T));
        log_loss.push_back(std::log(1.0 - srm_ratio.ratio()));
      }
    }
    if (log_nt.size() >= 2) {
      const LineFit fit = fit_line(log_nt, log_loss);
      std::ostringstream params;
      params << "arm=loss_fit;objective=" << objective_name(obj) << ";n=" << n;
      rows.push_back({"sra_convergence", params.str(), fit.slope, 0.0, 1.0 / 3.0, 0.0});
    }
    ++obj_index;
  }
  return rows;
}

std::vector<ResultRow> run_inference_loop(const ExperimentConfig& cfg,
                                          const SurrogateProfile* initial) {
  const auto d_list = config_distributions(cfg);
  const int n = static_cast<int>(d_list.size());
  const StageEnvironment env = make_environment(cfg.env_spec, n);
  const StageAlgorithm alg = surplus_max_alg(env);
  const Objective obj = parse_objectives(cfg.objective).front();
  const int T = cfg.T_list.empty() ? 4 : cfg.T_list.front();
  if (T < 2) throw ConfigError("inference loop needs T >= 2");
  const std::int64_t eval_trials = cfg.eval_trials > 0 ? cfg.eval_trials : cfg.trials;
  RngStream master(cfg.seed);

  // Default starting point: evenly spaced surrogates, identical across
  // populations.
  SurrogateProfile profile;
  if (initial != nullptr) {
    profile = *initial;
    if (profile.populations() != n || profile.stages() != T) {
      throw ConfigError("inference loop: initial profile shape mismatch");
    }
  } else {
    profile.psi.assign(n, std::vector<double>(T));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < T; ++j) {
        profile.psi[i][j] = static_cast<double>(T - j) / T;
      }
    }
  }

  std::vector<ResultRow> rows;
  for (int round = 0; round < cfg.rounds; ++round) {
    const auto start = std::chrono::steady_clock::now();
    RngStream round_rng = master.substream(round);

    RngStream cw_rng = round_rng.substream(0);
    const CharacteristicWeights cw = characteristic_weights(profile, alg, cw_rng);
    for (int i = 0; i < n; ++i) {
      const auto [lo, hi] = std::minmax_element(cw.w[i].begin(), cw.w[i].end());
      if (*hi - *lo < 1e-9) {
        throw DegenerateProfile("inference loop: all characteristic weights equal");
      }
    }

    // Performance of the current mechanism vs the exact per-stage optimum.
    RngStream eval_rng = round_rng.substream(1);
    RatioAccumulator perf;
    {
      std::vector<std::vector<double>> q(n, std::vector<double>(T));
      std::vector<std::vector<double>> values(n, std::vector<double>(T));
      std::vector<double> weights(n);
      for (std::int64_t trial = 0; trial < eval_trials; ++trial) {
        for (int i = 0; i < n; ++i) {
          for (int t = 0; t < T; ++t) {
            q[i][t] = eval_rng.uniform_open();
            values[i][t] = d_list[i].value_at(q[i][t]);
          }
        }
        RngStream tie = eval_rng.substream(trial);
        const auto alloc = run_sra(profile, alg, values, tie);
        double mech = 0.0, opt = 0.0;
        for (int t = 0; t < T; ++t) {
          for (int i = 0; i < n; ++i) {
            weights[i] = obj == Objective::kWelfare ? values[i][t]
                                                    : d_list[i].virtual_value_unchecked(q[i][t]);
          }
          const Allocation x_opt = surplus_max(env, weights);
          for (int i = 0; i < n; ++i) {
            const double g = objective_weight(d_list[i], obj, q[i][t]);
            mech += g * alloc[t][i];
            opt += g * x_opt[i];
          }
        }
        perf.add(mech, opt);
      }
    }
    {
      std::ostringstream params;
      params << "round=" << round << ";objective=" << objective_name(obj) << ";T=" << T
             << ";weights="
             << (cw.method == CharacteristicWeights::Method::kExact ? "exact" : "monte_carlo");
      rows.push_back({"inference_loop", params.str(), perf.ratio(), perf.ratio_se(), 1.0,
                      wall_ms_since(start)});
    }

    // Observe equilibrium bids, invert, and re-estimate the surrogates from
    // block order statistics of the recovered values.
    RngStream obs_rng = round_rng.substream(2);
    const std::int64_t blocks = std::max<std::int64_t>(64, cfg.trials / T);
    SurrogateProfile next = profile;
    for (int i = 0; i < n; ++i) {
      PositionAuctionSpec spec{cw.w[i], d_list[i], PaymentSemantics::kWinnerPaysBid};
      const BidFunction fn = equilibrium_bid(spec, 512);
      std::vector<double> rank_mean(T + 1, 0.0);  // rank_mean[T] stays 0
      std::vector<double> block_vals(T);
      for (std::int64_t b = 0; b < blocks; ++b) {
        for (int t = 0; t < T; ++t) {
          const double v = d_list[i].sample(obs_rng);
          const double bid = fn(v);
          block_vals[t] = fn.inverse(bid);
        }
        std::sort(block_vals.begin(), block_vals.end(), std::greater<double>());
        for (int j = 0; j < T; ++j) rank_mean[j] += block_vals[j];
      }
      for (int j = 0; j < T; ++j) rank_mean[j] /= static_cast<double>(blocks);
      std::vector<double> row(T);
      for (int j = 1; j <= T; ++j) {
        if (obj == Objective::kWelfare) {
          row[j - 1] = rank_mean[j - 1];
        } else {
          // E[marginal revenue | rank j] from the k-unit auction revenue
          // differences: j E[v_(j+1)] - (j-1) E[v_(j)].
          row[j - 1] = j * rank_mean[j] - (j - 1) * rank_mean[j - 1];
        }
      }
      std::sort(row.begin(), row.end(), std::greater<double>());
      next.psi[i] = std::move(row);
    }
    profile = next;
  }
  return rows;
}

std::vector<ResultRow> run_equilibrium_audit(const ExperimentConfig& cfg) {
  const auto d_list = config_distributions(cfg);
  const int n = static_cast<int>(d_list.size());
  const StageEnvironment env = make_environment(cfg.env_spec, n);
  if (!env.is_position()) throw ConfigError("equilibrium_audit needs a position environment");
  const std::vector<double>& weights = env.position_weights();
  RngStream master(cfg.seed);

  std::vector<ResultRow> rows;
  for (int i = 0; i < n; ++i) {
    const auto start = std::chrono::steady_clock::now();
    const QuantileDistribution& d = d_list[i];
    PositionAuctionSpec wpb{weights, d, PaymentSemantics::kWinnerPaysBid};
    PositionAuctionSpec ap{weights, d, PaymentSemantics::kAllPay};
    const BidFunction fn_wpb = equilibrium_bid(wpb);
    const BidFunction fn_ap = equilibrium_bid(ap);

    for (const auto* semantics : {"winner_pays_bid", "all_pay"}) {
      const bool is_wpb = std::string(semantics) == "winner_pays_bid";
      RngStream rng = master.substream(i * 2 + (is_wpb ? 0 : 1));
      const BestResponseGap gap = best_response_gap(is_wpb ? wpb : ap, is_wpb ? fn_wpb : fn_ap,
                                                    static_cast<int>(cfg.trials), 32, rng);
      std::ostringstream params;
      params << "pop=" << i << ";semantics=" << semantics << ";check=best_response_gap";
      rows.push_back({"equilibrium_audit", params.str(), gap.gap, gap.se, 0.0,
                      wall_ms_since(start)});
    }

    // Expected payments per agent under both semantics, and the virtual
    // surplus they should both equal.
    const double q_top = std::isinf(d.support().second) ? 1e-9 : 0.0;
    const double ep_wpb = integrate(
        [&](double q) {
          return fn_wpb(d.value_at(std::max(q, q_top))) * interim_allocation_q(weights, q);
        },
        q_top, 1.0, 1e-9);
    const double ep_ap = integrate(
        [&](double q) { return fn_ap(d.value_at(std::max(q, q_top))); }, q_top, 1.0, 1e-9);
    std::vector<double> pts{std::max(q_top, 1e-9)};
    for (double kink : d.kinks()) {
      if (kink > pts.front() && kink < 1.0) pts.push_back(kink);
    }
    pts.push_back(1.0);
    std::sort(pts.begin(), pts.end());
    const double vsurplus = integrate_segments(
        [&](double q) {
          return d.virtual_value_unchecked(q) * interim_allocation_q(weights, q);
        },
        pts, 1e-9);
    {
      std::ostringstream params;
      params << "pop=" << i << ";check=revenue_equivalence";
      rows.push_back({"equilibrium_audit", params.str(), ep_wpb - ep_ap, 0.0, 0.0,
                      wall_ms_since(start)});
    }
    {
      std::ostringstream params;
      params << "pop=" << i << ";check=payment_vs_virtual_surplus";
      rows.push_back({"equilibrium_audit", params.str(), ep_ap, 0.0, vsurplus,
                      wall_ms_since(start)});
    }
  }
  return rows;
}

std::vector<SampleMechRow> run_samplemech_experiment(const ExperimentConfig& cfg) {
  const auto d_list = config_distributions(cfg);
  const int n = static_cast<int>(d_list.size());
  const StageEnvironment env = make_environment(cfg.env_spec, n);
  for (const auto& d : d_list) {
    if (!d.regular()) throw ConfigError("samplemech needs regular distributions");
  }
  if (cfg.budgets.empty()) throw ConfigError("samplemech needs a budgets list");
  const std::int64_t eval_trials = cfg.eval_trials > 0 ? cfg.eval_trials : cfg.trials;
  SampleMechParams params;
  params.indexing = cfg.index_rule == "jm" ? BreakpointIndexing::kJM
                                           : BreakpointIndexing::kJMMinusOne;
  RngStream master(cfg.seed);

  std::vector<SampleMechRow> rows;
  for (std::size_t b = 0; b < cfg.budgets.size(); ++b) {
    const std::int64_t budget = cfg.budgets[b];
    const SampleSet samples =
        SampleSet::draw(d_list, budget, master.substream(10 + b).next_u64());
    const EstimatedMechanism mech = build_sample_mechanism(samples, env, cfg.eps, params);

    RngStream eval = master.substream(1000 + b);
    std::vector<std::array<double, 2>> slot(eval_trials);
    parallel_for(eval_trials, [&](std::int64_t trial) {
      RngStream rng = eval.substream(static_cast<std::uint64_t>(trial));
      std::vector<double> values(n), phi(n);
      for (int i = 0; i < n; ++i) {
        const double q = rng.uniform_open();
        values[i] = d_list[i].value_at(q);
        phi[i] = d_list[i].virtual_value_unchecked(q);
      }
      const auto outcome = mech.evaluate(values);
      double pay = 0.0;
      for (double p : outcome.payments) pay += p;
      const Allocation x_opt = surplus_max(env, phi);
      double opt = 0.0;
      for (int i = 0; i < n; ++i) opt += phi[i] * x_opt[i];
      slot[trial] = {pay, opt};
    });
    RatioAccumulator acc;
    for (const auto& s : slot) acc.add(s[0], s[1]);

    SampleMechRow row;
    row.budget = budget;
    row.rev_hat = acc.mean_a;
    row.rev_opt = acc.mean_b;
    row.ratio = acc.ratio();
    row.se = acc.ratio_se();
    row.mechanism_json = mech.to_json();
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_samplemech_csv(std::ostream& os, const std::vector<SampleMechRow>& rows,
                          const std::string& header_comment) {
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << "budget,rev_hat,rev_opt,ratio,se\n";
  os.precision(12);
  for (const auto& r : rows) {
    os << r.budget << ',' << r.rev_hat << ',' << r.rev_opt << ',' << r.ratio << ',' << r.se
       << "\n";
  }
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& diagnostics) {
  std::ostringstream header;
  header << "config_hash=" << std::hex << cfg.hash() << std::dec << " seed=" << cfg.seed;

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!cfg.out_path.empty()) {
    file.open(cfg.out_path, std::ios::trunc);
    if (!file) {
      diagnostics << "cannot open output path: " << cfg.out_path << "\n";
      return 2;
    }
    os = &file;
  }

  switch (cfg.kind) {
    case ExperimentKind::kSraConvergence:
      write_rows_csv(*os, run_sra_convergence(cfg), header.str());
      break;
    case ExperimentKind::kInferenceLoop:
      write_rows_csv(*os, run_inference_loop(cfg), header.str());
      break;
    case ExperimentKind::kEquilibriumAudit:
      write_rows_csv(*os, run_equilibrium_audit(cfg), header.str());
      break;
    case ExperimentKind::kBoundsSweep: {
      const auto rows = bounds_sweep(cfg.n_max, static_cast<int>(cfg.trials), cfg.seed);
      write_bounds_csv(*os, rows, header.str());
      break;
    }
    case ExperimentKind::kSampleMech: {
      const auto rows = run_samplemech_experiment(cfg);
      write_samplemech_csv(*os, rows, header.str());
      const std::string base = cfg.out_path.empty() ? "samplemech" : cfg.out_path;
      for (const auto& r : rows) {
        std::ostringstream path;
        path << base << ".mech" << r.budget << ".json";
        std::ofstream mech_file(path.str(), std::ios::trunc);
        if (!mech_file) {
          diagnostics << "cannot write mechanism dump: " << path.str() << "\n";
          return 2;
        }
        mech_file << r.mechanism_json << "\n";
      }
      break;
    }
  }
  return 0;
}

}  // namespace rankmech
