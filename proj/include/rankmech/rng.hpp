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
#include <random>

namespace rankmech {

/// Seeded deterministic random stream with cheap independent substreams.
///
/// Substreams are derived from the stream's *origin* seed, not its current
/// state, so `s.substream(i)` yields the same stream no matter how much of
/// `s` has already been consumed. Concurrent tasks must each own a
/// substream; streams are never shared across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : origin_(seed), gen_(splitmix(seed)) {}

  /// Independent child stream identified by `child`.
  RngStream substream(std::uint64_t child) const {
    return RngStream(splitmix(origin_ + 0x9e3779b97f4a7c15ULL * (child + 1)));
  }

  /// Copy of the current state; use to synchronize paired runs.
  RngStream clone() const { return *this; }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1); never returns an exact endpoint.
  double uniform_open() {
    const double u = uniform();
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in {0, ..., n-1}.
  int uniform_int(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t origin_;
  std::mt19937_64 gen_;
};

}  // namespace rankmech
