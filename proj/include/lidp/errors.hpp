// Copyright 2026 The lidp Authors
//
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

#ifndef LIDP_ERRORS_HPP_
#define LIDP_ERRORS_HPP_

#include <stdexcept>

namespace lidp {

// Thrown when a requested moment or interval order needs more canaries than
// the data provides (e.g. a 4th-order interval on a K=2 matrix).
class OrderExceedsDimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a mechanism input violates the sensitivity bound the
// mechanism's privacy claim is calibrated for.  Inputs are rejected rather
// than clipped: clipping would silently audit a different mechanism.
class SensitivityViolationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lidp

#endif  // LIDP_ERRORS_HPP_
