#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "fracml/mlf.hpp"

using namespace fracml;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double e_half(double z) { return std::exp(z * z) * (std::erf(z) + 1.0); }

// Large-argument expansion E_a(-x) ~ sum_k (-1)^(k+1) x^(-k) / Gamma(1 - a k), truncated at
// its smallest term. For 0 < a < 1 there are no exponential corrections on the negative axis.
double ml_negative_asymptotic(double a, double x) {
    double sum = 0.0, prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 2000; ++k) {
        const double arg = 1.0 - a * k;
        if (arg <= 0.0 && std::abs(arg - std::round(arg)) < 1e-12) continue;
        int sign = 1;
        const double mag = std::exp(-k * std::log(x) - std::lgamma(arg));
        if (arg < 0.0 && static_cast<long>(std::floor(arg)) % 2 != 0) sign = -sign;
        if (mag > prev) break;
        prev = mag;
        sum += (k % 2 == 1 ? 1.0 : -1.0) * sign * mag;
    }
    return sum;
}

const double kAlphas[] = {0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.75};

}  // namespace

TEST_CASE("series anchors", "[mlf]") {
    for (double z : {-3.0, -0.5, 0.0, 1.0, 4.0})
        CHECK_THAT(ml_series(MLParams::one(1.0), z).value, WithinRel(std::exp(z), 1e-14));
    CHECK_THAT(ml_series(MLParams::one(0.5), 1.0).value, WithinRel(std::numbers::e * (std::erf(1.0) + 1.0), 1e-14));
    CHECK_THAT(ml_series(MLParams::one(0.5), 1.0).value, WithinRel(5.0089800, 1e-7));
    CHECK(ml_series(MLParams{0.3, 1.7, 2.2}, 0.0).value == 1.0 / std::tgamma(1.7));
    CHECK_THROWS_AS(ml_series(MLParams::one(1.5), 1.0), DomainError);
    // Deep negative arguments lose every digit to cancellation, or overflow outright.
    CHECK_THROWS_AS(ml_series(MLParams::one(1.0 / 3.0), -4.0), ConvergenceError);
    CHECK_THROWS_AS(ml_series(MLParams::one(0.5), -40.0), OverflowError);
}

TEST_CASE("E_{1/2} closed form through the dispatcher", "[mlf]") {
    for (int i = 0; i <= 100; ++i) {
        const double z = -3.0 + 5.0 * i / 100.0;
        REQUIRE_THAT(mittag_leffler(0.5, z), WithinRel(e_half(z), 1e-10));
    }
    // Far outside the series regime the integral route takes over.
    auto r = ml_eval(MLParams::one(0.5), -30.0);
    CHECK(r.method == MLMethod::integral);
    CHECK_THAT(r.value, WithinRel(ml_negative_asymptotic(0.5, 30.0), 1e-8));
}

TEST_CASE("integral route", "[mlf]") {
    QuadSpec q{1e-300, 1e-12, 4000, 1.0};
    CHECK_THAT(ml_integral(0.5, -1.0, 1.0, q).value, WithinRel(std::numbers::e * std::erfc(1.0), 1e-10));
    CHECK_THAT(ml_integral(0.5, -1.0, 1.0, q).value, WithinRel(0.4275836, 1e-6));
    CHECK_THAT(ml_integral(0.4, 0.0, 3.0, q).value, WithinRel(1.0, 1e-10));
    // The series cancels to ~1e18 here; the asymptotic expansion is the oracle.
    CHECK_THAT(ml_integral(1.0 / 3.0, -1.0, 4.0, q).value, WithinRel(ml_negative_asymptotic(1.0 / 3.0, 4.0), 1e-6));
    for (double a : {0.25, 0.5, 0.75})
        for (double x : {8.0, 15.0})
            CHECK_THAT(ml_integral(a, -1.0, x, q).value, WithinRel(ml_negative_asymptotic(a, x), 1e-6));
}

TEST_CASE("umbral coefficients reproduce 1/Gamma(1 + alpha n)", "[mlf]") {
    CHECK_THAT(umbral_coefficient(0.5, 3), WithinRel(1.0 / std::tgamma(2.5), 1e-14));
    for (double a : {0.1, 0.37, 0.5, 0.9})
        for (std::size_t n = 0; n <= 120; ++n)
            REQUIRE_THAT(umbral_coefficient(a, n), WithinRel(rgamma(1.0 + a * static_cast<double>(n)), 1e-13));
    CHECK(ml_umbral(0.6, 0.0).value == 1.0);
    CHECK_THAT(ml_umbral(0.75, -2.0).value, WithinRel(ml_series(MLParams::one(0.75), -2.0).value, 1e-12));
}

TEST_CASE("representation equivalence", "[mlf][property]") {
    QuadSpec q{1e-300, 1e-12, 4000, 1.0};
    for (double a : kAlphas) {
        for (int i = 0; i <= 14; ++i) {
            const double z = -5.0 + 0.5 * i;
            MLResult s;
            try {
                s = ml_series(MLParams::one(a), z);
            } catch (const Error&) {
                continue;
            }
            if (s.cancellation >= 1e8) continue;
            const double in = ml_integral(a, z, 1.0, q).value;
            const double um = ml_umbral(a, z).value;
            REQUIRE_THAT(in, WithinRel(s.value, 1e-6));
            REQUIRE_THAT(um, WithinRel(s.value, 1e-6));
        }
    }
}

TEST_CASE("E_alpha(0) = 1 for every evaluator", "[mlf]") {
    for (double a : kAlphas) {
        CHECK(ml_series(MLParams::one(a), 0.0).value == 1.0);
        CHECK(ml_umbral(a, 0.0).value == 1.0);
        CHECK(ml_eval(MLParams::one(a), 0.0).value == 1.0);
        CHECK_THAT(ml_integral(a, 0.0, 1.0).value, WithinRel(1.0, 1e-8));
    }
}

TEST_CASE("E_alpha(-s) is positive and decreasing", "[mlf][property]") {
    for (double a : kAlphas) {
        double prev = mittag_leffler(a, 0.0);
        for (int i = 1; i <= 200; ++i) {
            const double v = mittag_leffler(a, -0.1 * i);
            REQUIRE(v > 0.0);
            REQUIRE(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("three-parameter family", "[mlf]") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> ua(0.05, 1.0), uz(-6.0, 6.0);
    for (int i = 0; i < 100; ++i) {
        const double a = ua(gen), z = uz(gen);
        MLResult one;
        try {
            one = ml_series(MLParams::one(a), z);
        } catch (const Error&) {
            continue;
        }
        REQUIRE_THAT(ml_series(MLParams::prabhakar(a, 0.0), z).value, WithinRel(one.value, 1e-13));
    }
    // alpha = 1: E^{1+d}_{1,1+d}(z) = e^z / Gamma(1+d).
    for (double d : {0.5, 1.0, 2.0, 3.5})
        for (double z : {-2.0, 0.3, 1.5})
            CHECK_THAT(ml_series(MLParams::prabhakar(1.0, d), z).value, WithinRel(std::exp(z) / std::tgamma(1.0 + d), 1e-13));
    // Series against the subordination integral.
    QuadSpec q{1e-300, 1e-12, 4000, 1.0};
    for (double d : {1.0, 2.0})
        for (double z : {-3.0, -0.5, 1.0})
            CHECK_THAT(prabhakar_integral(0.5, d, z, q).value, WithinRel(ml_series(MLParams::prabhakar(0.5, d), z).value, 1e-8));
    auto far = ml_eval(MLParams::prabhakar(0.5, 1.0), -40.0);
    CHECK(far.method == MLMethod::integral);
    CHECK(far.value > 0.0);
}

TEST_CASE("Laplace identity", "[mlf]") {
    CHECK_THAT(laplace_identity_residual(RationalAlpha::make(1, 2), 0.0), WithinAbs(0.0, 1e-12));
    CHECK(laplace_identity_residual(RationalAlpha::make(1, 2), 0.5) < 1e-6);
    CHECK(laplace_identity_residual(RationalAlpha::make(1, 3), 0.9) < 1e-5);
    CHECK_THROWS_AS(laplace_identity_residual(RationalAlpha::make(1, 2), 1.0), DomainError);
}

TEST_CASE("Riemann-Liouville derivative identity", "[mlf]") {
    CHECK(rl_derivative_residual(0.5, -1.0, 1.0) < 1e-4);
    CHECK(rl_derivative_residual(0.75, 0.5, 0.5) < 1e-4);
    for (double a : {0.25, 0.5, 0.75}) {
        auto c = rl_derivative_check(a, 0.0, 1.3);
        CHECK_THAT(c.lhs, WithinRel(std::pow(1.3, -a) / std::tgamma(1.0 - a), 1e-12));
        CHECK(c.residual < 1e-12);
    }
}
