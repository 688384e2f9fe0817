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

#include <stdexcept>
#include <string>

namespace rankmech {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonDifferentiablePoint : Error {
  using Error::Error;
};
struct DivergentIntegral : Error {
  using Error::Error;
};
struct EmptyInterval : Error {
  using Error::Error;
};
struct InvalidK : Error {
  using Error::Error;
};
struct OutOfSupport : Error {
  using Error::Error;
};
struct TooLarge : Error {
  using Error::Error;
};
struct NotAWinner : Error {
  using Error::Error;
};
struct UnboundedThreshold : Error {
  using Error::Error;
};
struct InsufficientSamples : Error {
  using Error::Error;
};
struct ZeroDenominator : Error {
  using Error::Error;
};
struct DegenerateProfile : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace rankmech
