// Copyright 2026 The otafl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OTAFL_ERRORS_HPP_
#define OTAFL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace otafl {

// Malformed arguments to a library call: bad shapes, empty batches,
// out-of-domain scalars.  Maps to CLI exit code 1 when raised during
// configuration handling.
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configuration file or override that cannot be turned into a runnable
// experiment.  Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A runtime guarantee the simulator promises (power budget, finite
// parameters, ledger reproducibility) failed to hold.  Maps to CLI exit
// code 2.
class InvariantViolationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Privacy accounting was asked to absorb a round with zero effective
// noise; epsilon would diverge.
class DegeneratePrivacyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace otafl

#endif  // OTAFL_ERRORS_HPP_
