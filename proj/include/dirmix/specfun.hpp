#pragma once

// Log-gamma, digamma and trigamma on the positive reals, plus the curvature
// coefficient of the quadratic upper bound on t -> lnGamma(t + 1).
//
// Arguments below the asymptotic threshold are shifted upward with the
// standard recurrences, then a Stirling-type expansion is applied. lnGamma
// around its zeros at 1 and 2 goes through the Taylor series of
// lnGamma(1 + t) so that the result keeps relative accuracy there.

#include <array>
#include <cmath>
#include <concepts>
#include <string>

#include "dirmix/errors.hpp"

namespace dirmix {

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178032973640561765;
inline constexpr double kAsymptoticThreshold = 10.0;
inline constexpr int kZetaTerms = 30;

// zeta(k) - 1 for 2 <= k <= kZetaTerms (entries 0 and 1 unused).
inline const std::array<double, kZetaTerms + 1>& zeta_minus_one() {
  static const std::array<double, kZetaTerms + 1> table = [] {
    std::array<double, kZetaTerms + 1> t{};
    t[2] = 0.64493406684822643647241516664602519;
    t[3] = 0.20205690315959428539973816151144999;
    t[4] = 0.08232323371113819151600369654116790;
    t[5] = 0.03692775514336992633136548645703417;
    t[6] = 0.01734306198444913971451792979092053;
    t[7] = 0.00834927738192282683979754984979676;
    for (int k = 8; k <= kZetaTerms; ++k) {
      double s = 0.0;
      for (int n = 256; n >= 2; --n) s += std::pow(static_cast<double>(n), -k);
      t[k] = s;
    }
    return t;
  }();
  return table;
}

template <std::floating_point T>
void require_positive(T x, const char* name) {
  if (!(x > T(0)) || !std::isfinite(x)) {
    throw DomainError(std::string(name) + ": argument must be positive and finite, got " +
                      std::to_string(static_cast<double>(x)));
  }
}

// lnGamma(1 + t) for |t| <= 0.5.
template <std::floating_point T>
T ln_gamma_1p(T t) {
  const auto& zm1 = zeta_minus_one();
  T sum = 0;
  T power = -t;
  for (int k = 2; k <= kZetaTerms; ++k) {
    power *= -t;
    sum += T(zm1[k]) * power / T(k);
  }
  return -std::log1p(t) + t * (T(1) - T(kEulerGamma)) + sum;
}

template <std::floating_point T>
T stirling_ln_gamma(T x) {
  const T inv = T(1) / x;
  const T inv2 = inv * inv;
  const T series =
      inv * (T(1) / 12 +
             inv2 * (T(-1) / 360 +
                     inv2 * (T(1) / 1260 +
                             inv2 * (T(-1) / 1680 +
                                     inv2 * (T(1) / 1188 +
                                             inv2 * (T(-691) / 360360 + inv2 * (T(1) / 156)))))));
  return (x - T(0.5)) * std::log(x) - x + T(kHalfLog2Pi) + series;
}

}  // namespace detail

/// Natural logarithm of the Gamma function for x > 0.
template <std::floating_point T>
T ln_gamma(T x) {
  detail::require_positive(x, "ln_gamma");
  if (x < T(0.5)) return detail::ln_gamma_1p(x) - std::log(x);
  if (x < T(1.5)) return detail::ln_gamma_1p(x - T(1));
  if (x < T(2.5)) {
    const T t = x - T(2);
    return detail::ln_gamma_1p(t) + std::log1p(t);
  }
  if (x >= T(detail::kAsymptoticThreshold)) return detail::stirling_ln_gamma(x);
  T product = 1;
  while (x < T(detail::kAsymptoticThreshold)) {
    product *= x;
    x += T(1);
  }
  return detail::stirling_ln_gamma(x) - std::log(product);
}

/// psi(x) = d/dx lnGamma(x) for x > 0.
template <std::floating_point T>
T digamma(T x) {
  detail::require_positive(x, "digamma");
  T shift = 0;
  while (x < T(detail::kAsymptoticThreshold)) {
    shift -= T(1) / x;
    x += T(1);
  }
  const T inv2 = T(1) / (x * x);
  const T series =
      inv2 * (T(1) / 12 -
              inv2 * (T(1) / 120 -
                      inv2 * (T(1) / 252 -
                              inv2 * (T(1) / 240 -
                                      inv2 * (T(1) / 132 -
                                              inv2 * (T(691) / 32760 - inv2 * (T(1) / 12)))))));
  return shift + std::log(x) - T(0.5) / x - series;
}

/// psi'(x) for x > 0.
template <std::floating_point T>
T trigamma(T x) {
  detail::require_positive(x, "trigamma");
  T shift = 0;
  while (x < T(detail::kAsymptoticThreshold)) {
    shift += T(1) / (x * x);
    x += T(1);
  }
  const T inv = T(1) / x;
  const T inv2 = inv * inv;
  const T series =
      inv * (T(1) +
             inv * (T(0.5) +
                    inv * (T(1) / 6 -
                           inv2 * (T(1) / 30 -
                                   inv2 * (T(1) / 42 -
                                           inv2 * (T(1) / 30 -
                                                   inv2 * (T(5) / 66 -
                                                           inv2 * (T(691) / 2730 -
                                                                   inv2 * (T(7) / 6)))))))));
  return shift + series;
}

/// Curvature of the tightest quadratic majorant of phi = lnGamma(. + 1)
/// anchored at t:  c(0) = phi''(0) = pi^2 / 6, otherwise
/// c(t) = 2 (phi(0) - phi(t) + phi'(t) t) / t^2. Always strictly positive.
template <std::floating_point T>
T curvature_c(T t) {
  if (!(t >= T(0)) || !std::isfinite(t)) {
    throw DomainError("curvature_c: argument must be nonnegative and finite, got " +
                      std::to_string(static_cast<double>(t)));
  }
  const auto& zm1 = detail::zeta_minus_one();
  if (t < T(0.25)) {
    // c(t) = sum_{k>=2} 2 (k - 1) / k * zeta(k) (-t)^(k-2).
    T sum = 0;
    T power = 1;
    for (int k = 2; k <= detail::kZetaTerms; ++k) {
      sum += T(2) * T(k - 1) / T(k) * (T(1) + T(zm1[k])) * power;
      power *= -t;
    }
    return sum;
  }
  const T phi = (t <= T(0.5)) ? detail::ln_gamma_1p(t) : ln_gamma(t + T(1));
  const T dphi = digamma(t + T(1));
  return T(2) * (dphi * t - phi) / (t * t);
}

}  // namespace dirmix
