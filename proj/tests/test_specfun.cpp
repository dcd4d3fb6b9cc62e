#include <doctest.h>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "dirmix/specfun.hpp"
#include "support.hpp"

using namespace dirmix;
using testsupport::log_uniform;
using testsupport::uniform;
using big = boost::multiprecision::cpp_bin_float_50;

namespace {

// Error measured against max(1, |reference|): absolute where values are small.
double scaled_error(double value, const big& reference) {
  const big diff = abs(big(value) - reference);
  const big scale = std::max(big(1), abs(reference));
  return static_cast<double>(diff / scale);
}

}  // namespace

TEST_CASE("ln_gamma reference values") {
  CHECK(std::abs(ln_gamma(1.0)) <= 1e-15);
  CHECK(std::abs(ln_gamma(2.0)) <= 1e-15);
  CHECK(std::abs(ln_gamma(0.5) - 0.57236494292470008707) <= 1e-15);
  CHECK(std::abs(ln_gamma(2.5) - 0.28468287047291915963) <= 1e-14);
  CHECK(std::abs(ln_gamma(1e-6) - 13.815509980749431669) <= 1e-13);
  CHECK(std::abs(ln_gamma(1e6) - 12815504.569147611660) <= 1e-12 * 12815504.6);
}

TEST_CASE("ln_gamma against a 50-digit oracle on [1e-6, 1e6]") {
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double x = log_uniform(1e-6, 1e6);
    worst = std::max(worst, scaled_error(ln_gamma(x), boost::math::lgamma(big(x))));
  }
  // Near 1 and 2 the value vanishes; absolute error there.
  for (double x : {0.999999, 1.0 + 1e-9, 1.5, 1.9999999, 2.000001, 2.5, 9.999, 10.0, 10.001}) {
    worst = std::max(worst, scaled_error(ln_gamma(x), boost::math::lgamma(big(x))));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("digamma reference values") {
  CHECK(std::abs(digamma(1.0) + 0.57721566490153286061) <= 1e-15);
  CHECK(std::abs(digamma(2.0) - (1.0 - 0.57721566490153286061)) <= 1e-15);
  CHECK(std::abs(digamma(10.5) - 2.3030010342976863753) <= 1e-14);
  CHECK(std::abs(digamma(0.25) + 4.2274535333762654081) <= 1e-14);
  const double h = 1e-6;
  const double fd = (ln_gamma(10.5 + h) - ln_gamma(10.5 - h)) / (2 * h);
  CHECK(std::abs(digamma(10.5) - fd) <= 1e-6);
}

TEST_CASE("digamma against a 50-digit oracle on [1e-6, 1e6]") {
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double x = log_uniform(1e-6, 1e6);
    worst = std::max(worst, scaled_error(digamma(x), boost::math::digamma(big(x))));
  }
  // Around the positive root of psi the value is tiny; absolute error there.
  for (double x : {1.4616321449683622, 1.46, 1.47}) {
    worst = std::max(worst, scaled_error(digamma(x), boost::math::digamma(big(x))));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("trigamma reference values and oracle") {
  CHECK(std::abs(trigamma(1.0) - 1.6449340668482264365) <= 1e-15);
  CHECK(std::abs(trigamma(2.0) - (trigamma(1.0) - 1.0)) <= 1e-15);
  CHECK(std::abs(trigamma(5.0) - 0.22132295573711532536) <= 1e-15);
  CHECK(std::abs(trigamma(0.1) - 101.43329915079275882) <= 1e-10);
  const double h = 1e-5;
  CHECK(std::abs(trigamma(5.0) - (digamma(5.0 + h) - digamma(5.0 - h)) / (2 * h)) <= 1e-6);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double x = log_uniform(1e-6, 1e6);
    worst = std::max(worst, scaled_error(trigamma(x), boost::math::trigamma(big(x))));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("curvature_c values") {
  CHECK(std::abs(curvature_c(0.0) - 1.6449340668482264365) <= 1e-15);
  CHECK(std::abs(curvature_c(1.0) - 0.84556867019693427879) <= 1e-14);
  CHECK(std::abs(curvature_c(1.0) - 2.0 * digamma(2.0)) <= 1e-14);
  CHECK(std::abs(curvature_c(0.5) - 1.1122177969962678610) <= 1e-14);
  CHECK(std::abs(curvature_c(3.0) - 0.43924300801496587053) <= 1e-14);
  CHECK(std::abs(curvature_c(100.0) - 0.019455361943649049975) <= 1e-15);
  CHECK(std::abs(curvature_c(1e-2) - 1.6290673476580109446) <= 1e-14);
  CHECK(std::abs(curvature_c(1e-4) - 1.6447738088276614147) <= 1e-14);
}

TEST_CASE("curvature_c near zero follows its first-order expansion") {
  // c(t) = c(0) + (2/3) psi''(1) t + O(t^2), psi''(1) = -2 zeta(3).
  const double slope = (2.0 / 3.0) * (-2.0 * 1.2020569031595942854);
  for (double t : {1e-8, 1e-6, 1e-5, 1e-4}) {
    CHECK(std::abs(curvature_c(t) - (curvature_c(0.0) + slope * t)) <= 2.0 * t * t + 1e-15);
  }
  // Continuity across the switch between the series and the closed form.
  const double below = curvature_c(std::nextafter(0.25, 0.0));
  const double above = curvature_c(0.25);
  CHECK(std::abs(below - above) <= 1e-13);
}

TEST_CASE("curvature_c against the closed form in 50 digits") {
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = log_uniform(1e-7, 1e4);
    const big bt(t);
    const big ref = 2 * (boost::math::digamma(bt + 1) * bt - boost::math::lgamma(bt + 1)) / (bt * bt);
    worst = std::max(worst, static_cast<double>(abs(big(curvature_c(t)) - ref) / ref));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("recurrences over random arguments") {
  for (int i = 0; i < 1000; ++i) {
    const double x = uniform(1e-9, 100.0);
    CHECK(std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) <= 1e-10 * std::max(1.0, 1.0 / x));
    CHECK(std::abs(ln_gamma(x + 1.0) - ln_gamma(x) - std::log(x)) <= 1e-10);
    CHECK(std::abs(trigamma(x + 1.0) - trigamma(x) + 1.0 / (x * x)) <=
          1e-10 * std::max(1.0, 1.0 / (x * x)));
  }
}

TEST_CASE("digamma matches a central difference of ln_gamma") {
  const double h = 1e-6;
  for (int i = 0; i < 500; ++i) {
    const double x = uniform(0.1, 100.0);
    const double fd = (ln_gamma(x + h) - ln_gamma(x - h)) / (2 * h);
    CHECK(std::abs(digamma(x) - fd) <= 1e-5);
  }
}

TEST_CASE("curvature_c is positive on a log grid") {
  CHECK(curvature_c(0.0) > 0.0);
  for (int i = 0; i <= 400; ++i) {
    const double t = std::pow(10.0, -12.0 + 16.0 * i / 400.0);
    CHECK(curvature_c(t) > 0.0);
  }
}

TEST_CASE("domain errors") {
  for (double bad : {0.0, -1.0, -0.5, std::numeric_limits<double>::infinity(),
                     std::numeric_limits<double>::quiet_NaN()}) {
    CHECK_THROWS_AS(ln_gamma(bad), DomainError);
    CHECK_THROWS_AS(digamma(bad), DomainError);
    CHECK_THROWS_AS(trigamma(bad), DomainError);
  }
  CHECK_THROWS_AS(curvature_c(-1e-12), DomainError);
  CHECK_THROWS_AS(curvature_c(std::numeric_limits<double>::quiet_NaN()), DomainError);
  CHECK_NOTHROW(curvature_c(0.0));
}

TEST_CASE("templated on the scalar type") {
  CHECK(std::abs(ln_gamma(0.5f) - 0.5723649f) <= 1e-6f);
  CHECK(std::abs(static_cast<double>(digamma(1.0L)) + 0.57721566490153286) <= 1e-15);
}
