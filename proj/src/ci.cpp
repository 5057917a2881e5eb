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

#include "lidp/ci.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "lidp/errors.hpp"

namespace lidp {
namespace {

void check_beta(double beta) {
  if (!(beta > 0.0) || !(beta < 1.0)) {
    throw std::invalid_argument("beta must be in (0,1), got " +
                                std::to_string(beta));
  }
}

void check_n(std::size_t n) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
}

void check_min_K(std::size_t K, std::size_t needed, const char* method) {
  if (K < needed) {
    throw OrderExceedsDimensionError(
        std::string(method) + " requires K >= " + std::to_string(needed) +
        ", got K = " + std::to_string(K));
  }
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// ---------------------------------------------------------------------------
// Bernstein machinery.
//
// A mean bounded in [0,1] with variance proxy V(x) admits, at log-budget
// L = log(1/beta_side), the one-sided deviation bound
//   |mu_hat - mu| <= sqrt((2 L / n) V(mu)) + (2 L) / (3 n),
// so a confidence limit is the root of the corresponding equation in the
// candidate mean x, with V evaluated at x.
// ---------------------------------------------------------------------------

// Lower limit: root in [0, mu_hat] of
//   mu_hat - x - sqrt((2L/n) V(x)) - 2L/(3n) = 0, or 0 when no sign change.
double bernstein_lower(double mu_hat, std::size_t n, double L,
                       const std::function<double(double)>& variance) {
  const double scale = 2.0 * L / static_cast<double>(n);
  const double slack = 2.0 * L / (3.0 * static_cast<double>(n));
  const auto f = [&](double x) {
    return mu_hat - x - std::sqrt(scale * std::max(0.0, variance(x))) - slack;
  };
  const auto root = solve_monotone(f, 0.0, mu_hat);
  return root ? clamp01(*root) : 0.0;
}

// Upper limit: root in [mu_hat, 1] of
//   x - mu_hat - sqrt((2L/n) V(x)) - 2L/(3n) = 0, or 1 when no sign change.
double bernstein_upper(double mu_hat, std::size_t n, double L,
                       const std::function<double(double)>& variance) {
  const double scale = 2.0 * L / static_cast<double>(n);
  const double slack = 2.0 * L / (3.0 * static_cast<double>(n));
  const auto f = [&](double x) {
    return x - mu_hat - std::sqrt(scale * std::max(0.0, variance(x))) - slack;
  };
  const auto root = solve_monotone(f, mu_hat, 1.0);
  return root ? clamp01(*root) : 1.0;
}

double bernoulli_variance(double x) { return x * (1.0 - x); }

// Variance proxy for the per-trial mean m_1 given an upper bound on mu_2:
//   Var(m_1) = mu_1/K - mu_1^2 + ((K-1)/K) mu_2.
double mean_variance_proxy(double x, std::size_t K, double mu2_bar) {
  const double Kd = static_cast<double>(K);
  return x / Kd - x * x + (Kd - 1.0) / Kd * mu2_bar;
}

// Variance proxy for the per-trial second moment m_2 given upper bounds on
// mu_3 and mu_4 (see the header comment).
double second_moment_variance_proxy(double x, std::size_t K, double mu3_bar,
                                    double mu4_bar) {
  const double Kd = static_cast<double>(K);
  const double pairs = Kd * (Kd - 1.0);
  return 2.0 * x * (1.0 - x) / pairs +
         4.0 * (Kd - 2.0) / pairs * (mu3_bar - x * x) +
         (Kd - 2.0) * (Kd - 3.0) / pairs * (mu4_bar - x * x);
}

// ---------------------------------------------------------------------------
// Wilson machinery: closed-form quadratic roots.
// ---------------------------------------------------------------------------

// Roots of A x^2 + B x + C = 0 (A > 0), sorted.  A tiny negative
// discriminant from floating-point cancellation is treated as zero; a
// genuinely negative one cannot occur for moments of a binary matrix and
// signals an internal error.
std::pair<double, double> quadratic_roots(double A, double B, double C) {
  double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) {
    const double magnitude = std::max(B * B, std::abs(4.0 * A * C));
    if (disc > -1e-9 * std::max(magnitude, 1e-300)) {
      disc = 0.0;
    } else {
      throw std::logic_error(
          "wilson interval: negative discriminant (internal error)");
    }
  }
  const double sqrt_disc = std::sqrt(disc);
  // Citardauq-stable evaluation: avoid cancellation in -B -+ sqrt_disc.
  const double q = B >= 0.0 ? -0.5 * (B + sqrt_disc) : -0.5 * (B - sqrt_disc);
  double r1 = 0.0;
  double r2 = 0.0;
  if (q == 0.0) {
    r1 = r2 = 0.0;
  } else {
    r1 = q / A;
    r2 = C / q;
  }
  return std::minmax(r1, r2);
}

// Larger root of the first-order Wilson quadratic for the order-l moment:
//   (n + Z^2) x^2 - (2 n mu_hat + Z^2) x + n mu_hat^2 = 0.
double wilson_upper_moment(double mu_hat, std::size_t n, double Z) {
  const double nd = static_cast<double>(n);
  const double Z2 = Z * Z;
  const auto [lo, hi] =
      quadratic_roots(nd + Z2, -(2.0 * nd * mu_hat + Z2), nd * mu_hat * mu_hat);
  (void)lo;
  return clamp01(hi);
}

// Final Wilson quadratic shared by the order-2 and order-4 intervals:
//   (n + Z^2) x^2 - (2 n mu1_hat + Z^2 / K) x
//     + n mu1_hat^2 - ((K-1)/K) Z^2 mu2_bar = 0.
std::pair<double, double> wilson_mean_roots(double mu1_hat, std::size_t n,
                                            std::size_t K, double Z,
                                            double mu2_bar) {
  const double nd = static_cast<double>(n);
  const double Kd = static_cast<double>(K);
  const double Z2 = Z * Z;
  return quadratic_roots(nd + Z2, -(2.0 * nd * mu1_hat + Z2 / Kd),
                         nd * mu1_hat * mu1_hat - (Kd - 1.0) / Kd * Z2 * mu2_bar);
}

ConfidenceBound make_bound(double lower, double upper, const char* method,
                           int order, double beta, double joint_factor) {
  ConfidenceBound b;
  b.lower = clamp01(lower);
  b.upper = clamp01(std::max(lower, upper));
  b.method = method;
  b.order = order;
  b.beta = beta;
  b.joint_failure = joint_factor * beta;
  return b;
}

}  // namespace

std::string to_string(CiMethod m) {
  return m == CiMethod::kBernstein ? "bernstein" : "wilson";
}

ConfidenceBound apply_ci(CiMethod method, int order, const MomentVector& moments,
                         std::size_t n, std::size_t K, double beta) {
  if (method == CiMethod::kBernstein) {
    switch (order) {
      case 1:
        return bernstein1(moments, n, beta);
      case 2:
        return bernstein2(moments, n, K, beta);
      case 4:
        return bernstein4(moments, n, K, beta);
      default:
        break;
    }
  } else {
    switch (order) {
      case 1:
        return wilson1(moments, n, beta);
      case 2:
        return wilson2(moments, n, K, beta);
      case 4:
        return wilson4(moments, n, K, beta);
      default:
        break;
    }
  }
  throw std::invalid_argument("ci order must be 1, 2 or 4, got " +
                              std::to_string(order));
}

std::optional<double> solve_monotone(const std::function<double(double)>& f,
                                     double a, double b, double tol) {
  if (a > b) {
    throw std::invalid_argument("solve_monotone: bracket has a > b");
  }
  const double fa = f(a);
  const double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) return std::nullopt;
  const bool low_positive = fa > 0.0;
  double lo = a;
  double hi = b;
  for (int iter = 0; iter < 200 && (hi - lo) > tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == low_positive) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

// Acklam's rational approximation to the inverse normal CDF (relative error
// below 1.15e-9 everywhere).
double acklam_inverse_cdf(double p) {
  static constexpr double A[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double B[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double C[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double D[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x = 0.0;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
        ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) *
        q /
        (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
        ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
  }
  // One Halley step against the exact CDF brings the error near machine
  // precision.
  const double err = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u =
      err * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace

double z_quantile(double beta) {
  check_beta(beta);
  // Phi^{-1}(1 - beta) = -Phi^{-1}(beta); evaluating at the small argument
  // avoids the rounding of 1 - beta.
  return beta <= 0.5 ? -acklam_inverse_cdf(beta)
                     : acklam_inverse_cdf(1.0 - beta);
}

ConfidenceBound bernstein1(const MomentVector& moments, std::size_t n,
                           double beta) {
  check_n(n);
  check_beta(beta);
  const double mu1 = moments.mu(1);
  const double L = std::log(1.0 / beta);
  const double lower = bernstein_lower(mu1, n, L, bernoulli_variance);
  const double upper = bernstein_upper(mu1, n, L, bernoulli_variance);
  return make_bound(lower, upper, "bernstein", 1, beta, 2.0);
}

ConfidenceBound bernstein2(const MomentVector& moments, std::size_t n,
                           std::size_t K, double beta) {
  check_n(n);
  check_beta(beta);
  check_min_K(K, 2, "bernstein2");
  const double mu1 = moments.mu(1);
  const double mu2 = moments.mu(2);
  // Three Bernstein bounds, each at budget beta/2: the upper bound on mu_2
  // is shared by both sides of the bound on mu_1.
  const double L = std::log(2.0 / beta);
  const double mu2_bar = bernstein_upper(mu2, n, L, bernoulli_variance);
  const auto proxy = [&](double x) { return mean_variance_proxy(x, K, mu2_bar); };
  const double lower = bernstein_lower(mu1, n, L, proxy);
  const double upper = bernstein_upper(mu1, n, L, proxy);
  return make_bound(lower, upper, "bernstein", 2, beta, 1.5);
}

ConfidenceBound bernstein4(const MomentVector& moments, std::size_t n,
                           std::size_t K, double beta) {
  check_n(n);
  check_beta(beta);
  check_min_K(K, 4, "bernstein4");
  const double mu1 = moments.mu(1);
  const double mu2 = moments.mu(2);
  const double mu3 = moments.mu(3);
  const double mu4 = moments.mu(4);
  // Five Bernstein bounds at budget beta/4 each: uppers on mu_3 and mu_4
  // feed the upper on mu_2, which feeds both sides of the bound on mu_1.
  const double L = std::log(4.0 / beta);
  const double mu3_bar = bernstein_upper(mu3, n, L, bernoulli_variance);
  const double mu4_bar = bernstein_upper(mu4, n, L, bernoulli_variance);
  const auto proxy2 = [&](double x) {
    return second_moment_variance_proxy(x, K, mu3_bar, mu4_bar);
  };
  const double mu2_bar = bernstein_upper(mu2, n, L, proxy2);
  const auto proxy1 = [&](double x) { return mean_variance_proxy(x, K, mu2_bar); };
  const double lower = bernstein_lower(mu1, n, L, proxy1);
  const double upper = bernstein_upper(mu1, n, L, proxy1);
  return make_bound(lower, upper, "bernstein", 4, beta, 1.25);
}

ConfidenceBound wilson1(const MomentVector& moments, std::size_t n,
                        double beta) {
  check_n(n);
  check_beta(beta);
  const double mu1 = moments.mu(1);
  const double Z = z_quantile(beta);
  const double nd = static_cast<double>(n);
  const double Z2 = Z * Z;
  const auto [lo, hi] =
      quadratic_roots(nd + Z2, -(2.0 * nd * mu1 + Z2), nd * mu1 * mu1);
  return make_bound(lo, hi, "wilson", 1, beta, 2.0);
}

ConfidenceBound wilson2(const MomentVector& moments, std::size_t n,
                        std::size_t K, double beta) {
  check_n(n);
  check_beta(beta);
  check_min_K(K, 2, "wilson2");
  const double mu1 = moments.mu(1);
  const double mu2 = moments.mu(2);
  const double Z = z_quantile(beta / 2.0);
  const double mu2_bar = wilson_upper_moment(mu2, n, Z);
  const auto [lo, hi] = wilson_mean_roots(mu1, n, K, Z, mu2_bar);
  return make_bound(lo, hi, "wilson", 2, beta, 1.5);
}

ConfidenceBound wilson4(const MomentVector& moments, std::size_t n,
                        std::size_t K, double beta) {
  check_n(n);
  check_beta(beta);
  check_min_K(K, 4, "wilson4");
  const double mu1 = moments.mu(1);
  const double mu2 = moments.mu(2);
  const double mu3 = moments.mu(3);
  const double mu4 = moments.mu(4);
  const double Z = z_quantile(beta / 4.0);
  const double Z2 = Z * Z;
  const double nd = static_cast<double>(n);
  const double Kd = static_cast<double>(K);
  const double pairs = Kd * (Kd - 1.0);
  const double mu3_bar = wilson_upper_moment(mu3, n, Z);
  const double mu4_bar = wilson_upper_moment(mu4, n, Z);
  // Upper bound on mu_2 from the CLT for m_2 with the sigma2sq variance
  // proxy, rearranged into a quadratic in the candidate mu_2.
  const double c_coef =
      (Kd - 2.0) * (Kd - 3.0) / pairs * (mu4_bar - mu3_bar * mu3_bar) +
      4.0 * (Kd - 2.0) / pairs * mu3_bar;
  const double A2 = nd + 2.0 * Z2 * (2.0 * Kd - 3.0) / pairs;
  const double B2 = -(2.0 * nd * mu2 + 2.0 * Z2 / pairs);
  const double C2 = nd * mu2 * mu2 - c_coef * Z2;
  const auto [lo2, hi2] = quadratic_roots(A2, B2, C2);
  (void)lo2;
  const double mu2_bar = clamp01(hi2);
  const auto [lo, hi] = wilson_mean_roots(mu1, n, K, Z, mu2_bar);
  return make_bound(lo, hi, "wilson", 4, beta, 1.25);
}

}  // namespace lidp
