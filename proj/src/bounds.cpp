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

#include "rankmech/bounds.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "rankmech/errors.hpp"
#include "rankmech/numeric.hpp"

namespace rankmech {
namespace {

void check_k_range(int k, int n) {
  if (!(k >= 1 && k <= n - 1)) throw InvalidK("need 1 <= k <= n-1");
}

double binom(int n, int j) {
  double b = 1.0;
  for (int i = 1; i <= j; ++i) b = b * (n - i + 1) / i;
  return b;
}

mpq_class mpq_pow(const mpq_class& base, unsigned e) {
  mpq_class out;
  mpz_pow_ui(out.get_num_mpz_t(), base.get_num_mpz_t(), e);
  mpz_pow_ui(out.get_den_mpz_t(), base.get_den_mpz_t(), e);
  out.canonicalize();
  return out;
}

mpz_class mpz_binom(unsigned n, unsigned j) {
  mpz_class out;
  mpz_bin_uiui(out.get_mpz_t(), n, j);
  return out;
}

// sum_{i=0}^{i_max} C(n,i) (k/n)^i ((n-k)/n)^(n-i) (k-i), exactly.
double loss_sum(int k, int n, int i_max) {
  if (n <= 60) {
    const mpq_class p(k, n);
    const mpq_class q(n - k, n);
    mpq_class sum = 0;
    for (int i = 0; i <= i_max; ++i) {
      mpq_class term(mpz_binom(n, i));
      term *= mpq_pow(p, static_cast<unsigned>(i));
      term *= mpq_pow(q, static_cast<unsigned>(n - i));
      term *= (k - i);
      sum += term;
    }
    return sum.get_d();
  }
  double sum = 0.0;
  for (int i = 0; i <= i_max; ++i) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                            std::lgamma(n - i + 1.0) +
                            i * std::log(static_cast<double>(k) / n) +
                            (n - i) * std::log(static_cast<double>(n - k) / n);
    sum += std::exp(log_term) * (k - i);
  }
  return sum;
}

}  // namespace

double topk_rule(int k, int n, double q) {
  if (!(k >= 1 && k <= n)) throw InvalidK("topk_rule: need 1 <= k <= n");
  if (!(q >= 0.0 && q <= 1.0)) throw Error("topk_rule: quantile outside [0,1]");
  double x = 0.0;
  for (int j = 0; j <= k - 1; ++j) {
    x += binom(n - 1, j) * std::pow(q, j) * std::pow(1.0 - q, n - 1 - j);
  }
  return std::min(x, 1.0);
}

double topk_rule_drop(int k, int n, double q) {
  if (!(k >= 1 && k <= n)) throw InvalidK("topk_rule_drop: need 1 <= k <= n");
  if (k == n) return 0.0;
  return (n - 1) * binom(n - 2, k - 1) * std::pow(q, k - 1) * std::pow(1.0 - q, n - 1 - k);
}

double rho(int k, int n) {
  check_k_range(k, n);
  return 1.0 - std::sqrt(static_cast<double>(n) /
                         (2.0 * std::numbers::pi * k * (n - k)));
}

double eta(int k, int n) {
  check_k_range(k, n);
  return 1.0 - (1.0 / std::sqrt(static_cast<double>(k))) *
                   std::pow(static_cast<double>(n) / (n - k), 1.5);
}

double loss_w_exact(int k, int n) {
  check_k_range(k, n);
  return 1.0 - loss_sum(k, n, k - 1);
}

double loss_r_exact(int k, int n) {
  check_k_range(k, n);
  return static_cast<double>(n) / (static_cast<double>(k) * (n - k)) * loss_sum(k, n, k);
}

double loss_bound_welfare(int k, int n) {
  check_k_range(k, n);
  if (n <= 60) {
    mpq_class b(mpz_binom(n, k));
    b *= mpq_pow(mpq_class(k, n), static_cast<unsigned>(k));
    b *= mpq_pow(mpq_class(n - k, n), static_cast<unsigned>(n - k));
    return b.get_d();
  }
  const double log_b = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                       k * std::log(static_cast<double>(k) / n) +
                       (n - k) * std::log(static_cast<double>(n - k) / n);
  return std::exp(log_b);
}

double loss_bound_revenue(int k, int n) {
  return static_cast<double>(n) / (n - k) * loss_bound_welfare(k, n);
}

AllocationRule::AllocationRule(std::vector<double> quantiles, std::vector<double> levels)
    : qs_(std::move(quantiles)), xs_(std::move(levels)) {
  if (qs_.size() != xs_.size() || qs_.size() < 2) throw Error("allocation rule: bad knots");
  if (qs_.front() != 0.0 || qs_.back() != 1.0) throw Error("allocation rule: must span [0,1]");
  for (std::size_t i = 1; i < qs_.size(); ++i) {
    if (qs_[i] < qs_[i - 1]) throw Error("allocation rule: quantiles must be non-decreasing");
    if (xs_[i] > xs_[i - 1] + 1e-12) throw Error("allocation rule: must be weakly decreasing");
  }
  for (double x : xs_) {
    if (x < -1e-12 || x > 1.0 + 1e-12) throw Error("allocation rule: values outside [0,1]");
  }
}

AllocationRule AllocationRule::step(const std::vector<double>& drops,
                                    const std::vector<double>& levels) {
  if (levels.size() != drops.size() + 1) throw Error("step rule: need one more level than drop");
  std::vector<double> qs{0.0};
  std::vector<double> xs{levels.front()};
  for (std::size_t i = 0; i < drops.size(); ++i) {
    qs.push_back(drops[i]);
    xs.push_back(levels[i]);
    qs.push_back(drops[i]);
    xs.push_back(levels[i + 1]);
  }
  qs.push_back(1.0);
  xs.push_back(levels.back());
  return AllocationRule(std::move(qs), std::move(xs));
}

double AllocationRule::operator()(double q) const {
  if (q <= qs_.front()) return xs_.front();
  if (q >= qs_.back()) return xs_.back();
  auto it = std::upper_bound(qs_.begin(), qs_.end(), q);
  const std::size_t i = static_cast<std::size_t>(it - qs_.begin());
  const double q0 = qs_[i - 1], q1 = qs_[i];
  if (q1 == q0) return xs_[i];
  const double t = (q - q0) / (q1 - q0);
  return xs_[i - 1] + t * (xs_[i] - xs_[i - 1]);
}

double AllocationRule::inverse(double z) const {
  if (z <= xs_.back()) return 1.0;
  if (z > xs_.front()) return 0.0;
  // xs_ is weakly decreasing: first index with x < z.
  std::size_t lo = 0, hi = xs_.size() - 1;
  while (lo + 1 < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (xs_[mid] < z) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double q0 = qs_[lo], q1 = qs_[hi];
  const double x0 = xs_[lo], x1 = xs_[hi];
  if (q1 == q0 || x0 == x1) return q0;
  return q0 + (z - x0) * (q1 - q0) / (x1 - x0);
}

namespace {

double price_surplus(const QuantileDistribution& d, int k, int n, Objective objective) {
  const double q = static_cast<double>(k) / n;
  return objective == Objective::kWelfare ? d.cumulative_value(q) : d.revenue_curve(q);
}

double topk_surplus(const QuantileDistribution& d, int k, int n, Objective objective) {
  auto curve = [&](double q) {
    return objective == Objective::kWelfare ? d.cumulative_value(q) : d.revenue_curve(q);
  };
  if (k == n) return curve(1.0);
  auto integrand = [&](double q) { return topk_rule_drop(k, n, q) * curve(q); };
  std::vector<double> pts{0.0};
  for (double kink : d.kinks()) {
    if (kink > 0.0 && kink < 1.0) pts.push_back(kink);
  }
  pts.push_back(1.0);
  std::sort(pts.begin(), pts.end());
  return integrate_segments(integrand, pts, 1e-11);
}

}  // namespace

double oracle_topk_vs_price(const QuantileDistribution& d, int k, int n, Objective objective) {
  if (!(k >= 1 && k <= n)) throw InvalidK("oracle_topk_vs_price: need 1 <= k <= n");
  if (objective == Objective::kRevenue && !d.regular()) {
    throw Error("oracle_topk_vs_price: revenue objective needs a regular distribution");
  }
  if (k == n) return 1.0;
  const double denom = price_surplus(d, k, n, objective);
  if (std::abs(denom) < 1e-300) throw ZeroDenominator("oracle_topk_vs_price: zero price surplus");
  return topk_surplus(d, k, n, objective) / denom;
}

McRatio mc_topk_vs_price(const QuantileDistribution& d, int k, int n, Objective objective,
                         int trials, RngStream& rng) {
  if (!(k >= 1 && k <= n)) throw InvalidK("mc_topk_vs_price: need 1 <= k <= n");
  const double cut = static_cast<double>(k) / n;
  RatioAccumulator acc;
  std::vector<double> q(n);
  for (int t = 0; t < trials; ++t) {
    for (auto& qi : q) qi = rng.uniform_open();
    std::vector<double> sorted = q;
    std::sort(sorted.begin(), sorted.end());
    double top = 0.0, price = 0.0;
    if (objective == Objective::kWelfare) {
      // Top k by value = k lowest quantiles.
      for (int j = 0; j < k; ++j) top += d.value_at(sorted[j]);
      for (auto qi : q) {
        if (qi < cut) price += d.value_at(qi);
      }
    } else {
      // Winners pay the (k+1)-th highest value; the posted price is v(k/n).
      const double threshold = k < n ? d.value_at(sorted[k]) : d.value_at(1.0);
      top = k * threshold;
      int buyers = 0;
      for (auto qi : q) {
        if (qi < cut) ++buyers;
      }
      price = d.value_at(cut) * buyers;
    }
    acc.add(top, price);
  }
  return {acc.ratio(), acc.ratio_se()};
}

double mixture_ratio(const QuantileDistribution& d,
                     const std::vector<std::pair<int, double>>& weight_deltas, int n,
                     Objective objective) {
  double total_p = 0.0;
  for (const auto& [k, p] : weight_deltas) {
    if (p < -1e-12) throw Error("mixture_ratio: negative probability");
    if (k < 0 || k > n) throw InvalidK("mixture_ratio: component k outside [0,n]");
    total_p += p;
  }
  if (std::abs(total_p - 1.0) > 1e-9) throw Error("mixture_ratio: probabilities must sum to 1");
  double num = 0.0, den = 0.0;
  for (const auto& [k, p] : weight_deltas) {
    if (p <= 0.0 || k == 0) continue;
    num += p * topk_surplus(d, k, n, objective);
    den += p * price_surplus(d, k, n, objective);
  }
  if (std::abs(den) < 1e-300) throw ZeroDenominator("mixture_ratio: zero price surplus");
  return num / den;
}

SandwichCheck sandwich_surplus_check(const AllocationRule& x_tilde, const AllocationRule& x_hat, double alpha,
                         const std::function<double(double)>& cumulative_virtual) {
  if (!(alpha >= 1.0)) throw Error("sandwich_surplus_check: need alpha >= 1");
  SandwichCheck out;

  const int grid = 256;
  for (int i = 1; i <= grid; ++i) {
    const double q = static_cast<double>(i) / grid;
    const double rq = cumulative_virtual(q);
    for (int a = 1; a <= 19; ++a) {
      const double beta = static_cast<double>(a) / 20.0;
      if (cumulative_virtual(beta * q) < beta * rq - 1e-9 * std::max(1.0, std::abs(rq))) {
        out.outcome = SandwichCheck::Outcome::kHypothesisViolated;
        return out;
      }
    }
  }
  for (int i = 1; i <= grid; ++i) {
    const double z = static_cast<double>(i) / grid;
    const double ti = x_tilde.inverse(z);
    const double hi = x_hat.inverse(z);
    if (!(ti >= hi - 1e-9 && hi >= ti / alpha - 1e-9)) {
      out.outcome = SandwichCheck::Outcome::kHypothesisViolated;
      return out;
    }
  }

  out.lhs = integrate([&](double z) { return cumulative_virtual(x_hat.inverse(z)); }, 0.0, 1.0,
                      1e-8);
  out.rhs = integrate([&](double z) { return cumulative_virtual(x_tilde.inverse(z)); }, 0.0, 1.0,
                      1e-8) /
            alpha;
  out.outcome = out.lhs >= out.rhs - 1e-7 * std::max(1.0, std::abs(out.rhs))
                    ? SandwichCheck::Outcome::kHolds
                    : SandwichCheck::Outcome::kFails;
  return out;
}

std::vector<BoundsRow> bounds_sweep(int n_max, int trials, std::uint64_t seed) {
  std::vector<BoundsRow> rows;
  RngStream rng(seed);
  for (int n = 2; n <= n_max; ++n) {
    for (int k = 1; k <= n - 1; ++k) {
      for (Objective objective : {Objective::kWelfare, Objective::kRevenue}) {
        const bool welfare = objective == Objective::kWelfare;
        BoundsRow row;
        row.k = k;
        row.n = n;
        row.objective = welfare ? "welfare" : "revenue";
        row.printed_formula = welfare ? loss_w_exact(k, n) : loss_r_exact(k, n);
        row.printed_bound = welfare ? loss_bound_welfare(k, n) : loss_bound_revenue(k, n);
        const auto d = QuantileDistribution::worst_case(
            welfare ? QuantileDistribution::WorstCase::kWelfare
                    : QuantileDistribution::WorstCase::kRevenue,
            k, n);
        row.oracle_ratio = oracle_topk_vs_price(d, k, n, objective);
        RngStream sub = rng.substream(static_cast<std::uint64_t>(n) * 1000 + k * 2 + (welfare ? 0 : 1));
        const McRatio mc = mc_topk_vs_price(d, k, n, objective, trials, sub);
        row.monte_carlo_ratio = mc.ratio;
        row.se = mc.se;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_bounds_csv(std::ostream& os, const std::vector<BoundsRow>& rows,
                      const std::string& header_comment) {
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << "k,n,objective,printed_formula,printed_bound,oracle_ratio,monte_carlo_ratio,se\n";
  os.precision(12);
  for (const auto& r : rows) {
    os << r.k << ',' << r.n << ',' << r.objective << ',' << r.printed_formula << ','
       << r.printed_bound << ',' << r.oracle_ratio << ',' << r.monte_carlo_ratio << ',' << r.se
       << "\n";
  }
}

}  // namespace rankmech
