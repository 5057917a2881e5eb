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

#ifndef LIDP_CI_HPP_
#define LIDP_CI_HPP_

// Confidence bounds on the mean mu_1 of an exchangeable binary vector.
//
// Order-1 methods use only the empirical mean.  Order-2 and order-4 methods
// first bound the higher moments mu_2 (and mu_3, mu_4) from the same data
// and plug them into a variance proxy for the per-trial mean m_1:
//
//   Var(m_1)  = mu_1/K - mu_1^2 + ((K-1)/K) * mu_2
//   Var(m_2)  = sigma2sq(mu_2, mu_3, mu_4)
//             = 2 mu_2 (1 - mu_2) / (K (K-1))
//               + (4 (K-2) / (K (K-1))) * (mu_3 - mu_2^2)
//               + ((K-2)(K-3) / (K (K-1))) * (mu_4 - mu_2^2)
//
// When the coordinates are nearly independent, mu_2 ~ mu_1^2 and the proxy
// shrinks by roughly a factor of K relative to the worst case, which is the
// entire point of collecting K statistics per trial.
//
// The Bernstein variants are finite-sample exact; the Wilson variants are
// asymptotic (CLT) and solve closed-form quadratics.  Each function returns
// both one-sided bounds, each valid with probability >= 1 - beta; the
// joint_failure field records the union-bound budget spent when both sides
// and the auxiliary moment bounds are required to hold simultaneously
// (2*beta, 3*beta/2 and 5*beta/4 for orders 1, 2 and 4).

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include "lidp/xbern.hpp"

namespace lidp {

enum class CiMethod { kBernstein, kWilson };

std::string to_string(CiMethod m);

struct ConfidenceBound {
  double lower = 0.0;
  double upper = 1.0;
  std::string method;         // "bernstein" or "wilson"
  int order = 1;              // 1, 2 or 4
  double beta = 0.0;          // per-side failure probability
  double joint_failure = 0.0; // total budget for simultaneous validity
};

// Finite-sample bounds from Bernstein's inequality.
ConfidenceBound bernstein1(const MomentVector& moments, std::size_t n,
                           double beta);
ConfidenceBound bernstein2(const MomentVector& moments, std::size_t n,
                           std::size_t K, double beta);
ConfidenceBound bernstein4(const MomentVector& moments, std::size_t n,
                           std::size_t K, double beta);

// Asymptotic bounds from the Wilson score construction.
ConfidenceBound wilson1(const MomentVector& moments, std::size_t n,
                        double beta);
ConfidenceBound wilson2(const MomentVector& moments, std::size_t n,
                        std::size_t K, double beta);
ConfidenceBound wilson4(const MomentVector& moments, std::size_t n,
                        std::size_t K, double beta);

// Dispatches to the bound of the given method and order (order must be 1, 2
// or 4; K is ignored by the order-1 methods).
ConfidenceBound apply_ci(CiMethod method, int order, const MomentVector& moments,
                         std::size_t n, std::size_t K, double beta);

// Bisection for a sign change of a continuous f on [a, b].  Returns a root
// located to bracket width <= tol, or nullopt when f(a) and f(b) have the
// same sign (callers clamp to the bracket edge per their algorithm).
// Throws std::invalid_argument when a > b.
std::optional<double> solve_monotone(const std::function<double(double)>& f,
                                     double a, double b, double tol = 1e-12);

// Z_beta: the (1 - beta)-quantile of the standard normal distribution.
// Acklam's rational approximation polished by one Halley step with erfc,
// giving near machine precision.
double z_quantile(double beta);

}  // namespace lidp

#endif  // LIDP_CI_HPP_
