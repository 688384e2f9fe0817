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

#include "rankmech/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "rankmech/errors.hpp"

namespace rankmech {
namespace {

constexpr double kQuantileFloor = 1e-12;  // quadrature never evaluates below this
constexpr double kKinkEps = 1e-12;

void check_quantile(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw Error("quantile outside [0,1]");
}

}  // namespace

double QuantileDistribution::value_at(double q) const {
  check_quantile(q);
  return value_(q);
}

double QuantileDistribution::virtual_value_at(double q, double fd_step) const {
  if (!(q > 0.0 && q < 1.0)) throw Error("virtual value needs q strictly inside (0,1)");
  for (double kink : kinks_) {
    if (std::abs(q - kink) <= kKinkEps) {
      std::ostringstream msg;
      msg << label_ << ": revenue curve not differentiable at q=" << kink;
      throw NonDifferentiablePoint(msg.str());
    }
  }
  return virtual_value_unchecked(q, fd_step);
}

double QuantileDistribution::virtual_value_unchecked(double q, double fd_step) const {
  if (virtual_value_) return virtual_value_(q);
  const double h = std::min({fd_step, 0.5 * q, 0.5 * (1.0 - q)});
  return (revenue_curve(q + h) - revenue_curve(q - h)) / (2.0 * h);
}

double QuantileDistribution::cumulative_value(double q, double rel_tol) const {
  check_quantile(q);
  if (cumulative_) return cumulative_(q);
  if (q <= kQuantileFloor) return 0.0;
  std::vector<double> pts{kQuantileFloor};
  for (double kink : kinks_) {
    if (kink > kQuantileFloor && kink < q) pts.push_back(kink);
  }
  pts.push_back(q);
  std::sort(pts.begin(), pts.end());
  return integrate_segments([this](double z) { return value_(z); }, pts, rel_tol);
}

double QuantileDistribution::revenue_curve(double q) const {
  check_quantile(q);
  if (q == 0.0) return 0.0;  // R(0) = 0 as a limit, even for unbounded values
  return q * value_(q);
}

double QuantileDistribution::quantile_of(double value, RngStream* rng) const {
  // v is weakly decreasing: find the quantile interval {q : v(q) == value}.
  auto above = [&](double q) { return value_(q) > value; };
  // lo = inf{q : v(q) <= value}
  double lo = 0.0, hi = 1.0;
  if (!above(0.0)) {
    lo = 0.0;
  } else if (above(1.0)) {
    lo = 1.0;
  } else {
    double a = 0.0, b = 1.0;
    for (int i = 0; i < 100; ++i) {
      const double m = 0.5 * (a + b);
      if (above(m)) {
        a = m;
      } else {
        b = m;
      }
    }
    lo = b;
  }
  auto below = [&](double q) { return value_(q) < value; };
  // hi = sup{q : v(q) >= value}
  if (below(0.0)) {
    hi = 0.0;
  } else if (!below(1.0)) {
    hi = 1.0;
  } else {
    double a = 0.0, b = 1.0;
    for (int i = 0; i < 100; ++i) {
      const double m = 0.5 * (a + b);
      if (below(m)) {
        b = m;
      } else {
        a = m;
      }
    }
    hi = a;
  }
  if (hi < lo) hi = lo;
  if (hi - lo < 1e-12) return 0.5 * (lo + hi);
  return rng ? rng->uniform(lo, hi) : 0.5 * (lo + hi);
}

double QuantileDistribution::monopoly_revenue() const {
  if (monopoly_cache_) return *monopoly_cache_;
  double best = 0.0;
  const int grid = 4096;
  double best_q = 0.5;
  for (int i = 1; i <= grid; ++i) {
    const double q = static_cast<double>(i) / grid;
    const double r = revenue_curve(q);
    if (r > best) {
      best = r;
      best_q = q;
    }
  }
  // Local refinement around the best grid point.
  double a = std::max(0.0, best_q - 1.0 / grid);
  double b = std::min(1.0, best_q + 1.0 / grid);
  for (int i = 0; i < 80; ++i) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (revenue_curve(m1) < revenue_curve(m2)) {
      a = m1;
    } else {
      b = m2;
    }
  }
  best = std::max(best, revenue_curve(0.5 * (a + b)));
  monopoly_cache_ = best;
  return best;
}

std::pair<double, double> QuantileDistribution::support() const {
  return {value_(1.0), value_(0.0)};
}

QuantileDistribution QuantileDistribution::uniform(double lo, double hi) {
  if (!(lo >= 0.0 && hi > lo)) throw Error("uniform: need 0 <= lo < hi");
  QuantileDistribution d;
  std::ostringstream name;
  name << "uniform[" << lo << "," << hi << "]";
  d.label_ = name.str();
  const double span = hi - lo;
  d.value_ = [=](double q) { return hi - span * q; };
  d.virtual_value_ = [=](double q) { return hi - 2.0 * span * q; };
  d.cumulative_ = [=](double q) { return hi * q - 0.5 * span * q * q; };
  d.regular_ = true;
  return d;
}

QuantileDistribution QuantileDistribution::exponential(double rate) {
  if (!(rate > 0.0)) throw Error("exponential: rate must be positive");
  QuantileDistribution d;
  std::ostringstream name;
  name << "exponential[" << rate << "]";
  d.label_ = name.str();
  d.value_ = [=](double q) {
    if (q <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(q) / rate;
  };
  d.virtual_value_ = [=](double q) { return (-std::log(q) - 1.0) / rate; };
  d.cumulative_ = [=](double q) {
    if (q <= 0.0) return 0.0;
    return (q - q * std::log(q)) / rate;
  };
  d.regular_ = true;
  return d;
}

QuantileDistribution QuantileDistribution::equal_revenue(double q_min) {
  if (!(q_min >= 0.0 && q_min < 1.0)) throw Error("equal_revenue: need 0 <= q_min < 1");
  QuantileDistribution d;
  std::ostringstream name;
  name << "equal_revenue[" << q_min << "]";
  d.label_ = name.str();
  d.value_ = [=](double q) {
    const double qq = std::max(q, q_min);
    if (qq <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / qq;
  };
  d.virtual_value_ = [=](double q) { return q < q_min ? 1.0 / q_min : 0.0; };
  d.cumulative_ = [=](double q) {
    if (q_min <= 0.0) {
      // Untruncated: V(q) = int 1/z dz diverges at the top.
      return q <= 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    if (q <= q_min) return q / q_min;
    return 1.0 + std::log(q / q_min);
  };
  if (q_min > 0.0) d.kinks_ = {q_min};
  d.regular_ = true;
  return d;
}

QuantileDistribution QuantileDistribution::worst_case(WorstCase kind, int k, int n) {
  if (!(k >= 1 && k <= n - 1)) throw InvalidK("worst_case: need 1 <= k <= n-1");
  QuantileDistribution d;
  const double kn = static_cast<double>(k) / n;
  const double slope = static_cast<double>(n) / k;
  std::ostringstream name;
  if (kind == WorstCase::kWelfare) {
    name << "worst_case_welfare[k=" << k << ",n=" << n << "]";
    d.label_ = name.str();
    d.value_ = [=](double q) { return q <= kn ? slope : 0.0; };
    d.cumulative_ = [=](double q) { return std::min(slope * q, 1.0); };
    d.virtual_value_ = [=](double q) { return q < kn ? slope : 0.0; };
    d.kinks_ = {kn};
    d.regular_ = false;  // R drops discontinuously at k/n
  } else {
    name << "worst_case_revenue[k=" << k << ",n=" << n << "]";
    d.label_ = name.str();
    const double down = static_cast<double>(n) / (n - k);
    d.value_ = [=](double q) {
      if (q <= 0.0) return slope;  // finite top: v is bounded by n/k
      return q <= kn ? slope : down * (1.0 - q) / q;
    };
    d.cumulative_ = [=](double q) {
      if (q <= kn) return slope * q;
      return 1.0 + down * (std::log(q / kn) - (q - kn));
    };
    d.virtual_value_ = [=](double q) { return q < kn ? slope : -down; };
    d.kinks_ = {kn};
    d.regular_ = true;  // triangular R is concave
  }
  return d;
}

QuantileDistribution QuantileDistribution::piecewise_value(
    std::vector<std::pair<double, double>> points) {
  if (points.size() < 2) throw Error("piecewise_value: need at least two points");
  std::sort(points.begin(), points.end());
  if (points.front().first != 0.0 || points.back().first != 1.0) {
    throw Error("piecewise_value: breakpoints must span q = 0 to q = 1");
  }
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (points[i + 1].first <= points[i].first) {
      throw Error("piecewise_value: quantile breakpoints must be strictly increasing");
    }
    if (points[i + 1].second > points[i].second + 1e-12) {
      throw Error("piecewise_value: value function must be weakly decreasing");
    }
  }
  if (points.back().second < 0.0) throw Error("piecewise_value: values must be non-negative");

  QuantileDistribution d;
  d.label_ = "piecewise_value";
  auto pts = std::make_shared<std::vector<std::pair<double, double>>>(std::move(points));
  auto segment = [pts](double q) {
    auto it = std::upper_bound(pts->begin(), pts->end(), std::make_pair(q, 1e300));
    std::size_t i = static_cast<std::size_t>(it - pts->begin());
    if (i == 0) i = 1;
    if (i == pts->size()) i = pts->size() - 1;
    return i - 1;  // q lies in [pts[i-1].first, pts[i].first]
  };
  d.value_ = [pts, segment](double q) {
    const std::size_t i = segment(q);
    const auto& [q0, v0] = (*pts)[i];
    const auto& [q1, v1] = (*pts)[i + 1];
    const double t = (q - q0) / (q1 - q0);
    return v0 + t * (v1 - v0);
  };
  d.cumulative_ = [pts, segment](double q) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < pts->size(); ++i) {
      const auto& [q0, v0] = (*pts)[i];
      const auto& [q1, v1] = (*pts)[i + 1];
      const double upper = std::min(q, q1);
      if (upper <= q0) break;
      const double t = (upper - q0) / (q1 - q0);
      const double v_upper = v0 + t * (v1 - v0);
      acc += 0.5 * (v0 + v_upper) * (upper - q0);
    }
    return acc;
  };
  // phi = d/dq [q v(q)] = v(q) + q v'(q) within each linear segment.
  d.virtual_value_ = [pts, segment, value = d.value_](double q) {
    const std::size_t i = segment(q);
    const auto& [q0, v0] = (*pts)[i];
    const auto& [q1, v1] = (*pts)[i + 1];
    const double dv = (v1 - v0) / (q1 - q0);
    return value(q) + q * dv;
  };
  for (std::size_t i = 1; i + 1 < pts->size(); ++i) d.kinks_.push_back((*pts)[i].first);
  // Regular iff R is concave; check second differences on a grid.
  bool regular = true;
  const int grid = 512;
  auto revenue = [&](double q) { return q * d.value_(q); };
  for (int i = 1; i + 1 <= grid && regular; ++i) {
    const double q = static_cast<double>(i) / grid;
    const double h = 1.0 / grid;
    if (revenue(q - h) + revenue(q + h) - 2.0 * revenue(q) > 1e-9) regular = false;
  }
  d.regular_ = regular;
  return d;
}

double expected_order_stat(const QuantileDistribution& d, OrderStatSpec spec,
                           OrderStatOf of, double rel_tol) {
  const int j = spec.j;
  const int T = spec.T;
  if (!(j >= 1 && j <= T)) throw Error("expected_order_stat: need 1 <= j <= T");
  if (of == OrderStatOf::kVirtualValue && !d.regular()) {
    throw Error("expected_order_stat: virtual-value order statistics need a regular distribution");
  }
  // The j-th highest of T draws has the j-th lowest quantile, Beta(j, T-j+1).
  const double log_norm = std::lgamma(T + 1.0) - std::lgamma(static_cast<double>(j)) -
                          std::lgamma(static_cast<double>(T - j + 1));
  const double norm = std::exp(log_norm);
  auto density = [=](double q) {
    return norm * std::pow(q, j - 1) * std::pow(1.0 - q, T - j);
  };
  if (j == 1 && of == OrderStatOf::kValue) {
    // The density is positive at q = 0, so the integral diverges whenever
    // q * v(q) does not vanish at the top (R(0+) > 0).
    const double probe = 1e-10;
    if (probe * d.value_at(probe) > 1e-8) {
      throw DivergentIntegral(d.label() + ": top order statistic has divergent expectation");
    }
  }
  auto integrand = [&](double q) -> double {
    const double g = (of == OrderStatOf::kValue)
                         ? d.value_at(q)
                         : d.virtual_value_unchecked(q);
    return g * density(q);
  };
  // Kinks of R become panel edges, nudged so each panel sees one branch;
  // the skipped slivers are far below the quadrature tolerance. The Beta
  // density concentrates in an O(1/sqrt(T)) window around j/(T+1), so panel
  // edges are anchored there or the adaptive rule would see zeros
  // everywhere and stop early.
  std::vector<double> pts{1e-12};
  for (double kink : d.kinks()) {
    if (kink > 1e-9 && kink < 1.0 - 1e-9) {
      pts.push_back(kink - 1e-12);
      pts.push_back(kink + 1e-12);
    }
  }
  const double mean = static_cast<double>(j) / (T + 1);
  const double sd = std::sqrt(mean * (1.0 - mean) / (T + 2));
  for (double offset : {-12.0, -6.0, -3.0, 0.0, 3.0, 6.0, 12.0}) {
    const double anchor = mean + offset * sd;
    if (anchor > 1e-9 && anchor < 1.0 - 1e-9) pts.push_back(anchor);
  }
  pts.push_back(1.0 - 1e-12);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] - pts[i] <= 5e-12) continue;
    total += integrate(integrand, pts[i], pts[i + 1], rel_tol);
  }
  return total;
}

double conditional_virtual_value(const QuantileDistribution& d, double q_lo, double q_hi) {
  if (!(q_lo >= 0.0 && q_hi <= 1.0 && q_lo < q_hi)) {
    throw EmptyInterval("conditional_virtual_value: need 0 <= q_lo < q_hi <= 1");
  }
  return (d.revenue_curve(q_hi) - d.revenue_curve(q_lo)) / (q_hi - q_lo);
}

}  // namespace rankmech
