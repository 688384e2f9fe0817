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

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace rankmech {

inline constexpr double kDefaultQuadTol = 1e-9;

/// Adaptive Simpson integration of f over [a, b] to relative tolerance
/// `rel_tol` (with a small absolute floor so integrals near zero terminate).
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = kDefaultQuadTol);

/// Integrates across the given breakpoints so kinks land on panel edges.
/// `points` must be ascending and bracket the domain (first = a, last = b).
double integrate_segments(const std::function<double(double)>& f,
                          const std::vector<double>& points,
                          double rel_tol = kDefaultQuadTol);

/// Streaming mean/variance accumulator (Welford); merge is associative.
struct Accumulator {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  /// Standard error of the mean.
  double se() const { return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }

  void merge(const Accumulator& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double d = o.mean - mean;
    const std::int64_t tot = n + o.n;
    mean += d * static_cast<double>(o.n) / static_cast<double>(tot);
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / static_cast<double>(tot);
    n = tot;
  }
};

/// Accumulates paired samples (a_t, b_t) and reports the ratio of means
/// mean(a)/mean(b) with a delta-method standard error that honors the
/// covariance; used for common-random-number performance ratios.
struct RatioAccumulator {
  std::int64_t n = 0;
  double mean_a = 0.0, mean_b = 0.0;
  double m2_a = 0.0, m2_b = 0.0, cov = 0.0;

  void add(double a, double b);
  void merge(const RatioAccumulator& o);
  double ratio() const { return mean_a / mean_b; }
  double ratio_se() const;
};

/// Upper-tail chi-square statistic for observed counts vs a uniform null.
double chi_square_uniform_stat(const std::vector<std::int64_t>& counts);

/// Upper quantile of the chi-square distribution: returns x with
/// P[X > x] = significance for `dof` degrees of freedom.
double chi_square_critical(int dof, double significance);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

/// Shape-preserving monotone cubic interpolant (Fritsch-Carlson tangents).
/// Evaluation clamps to the grid range. `inverse` requires monotone values.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> xs, std::vector<double> ys);

  double operator()(double x) const;
  double inverse(double y) const;
  const std::vector<double>& grid() const { return xs_; }
  const std::vector<double>& values() const { return ys_; }

 private:
  std::vector<double> xs_, ys_, tangents_;
};

/// Runs fn(i) for i in [0, count) on a small thread pool. Results must be
/// written to preallocated slots indexed by i so that aggregation order is
/// independent of scheduling.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& fn);

}  // namespace rankmech
