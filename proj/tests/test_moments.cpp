#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "fracml/moments.hpp"

using namespace fracml;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Truncated power series in tau. Long double keeps c^m / m! from underflowing before
// its umbral image t^(alpha m) m! / Gamma(1 + alpha m) stops mattering.
constexpr int kDeg = 800;
using Real = long double;
using Ser = std::vector<Real>;

Ser constant(double c) {
    Ser s(kDeg + 1, 0.0);
    s[0] = c;
    return s;
}
Ser exp_ser(double c) {  // e^(c tau)
    Ser s(kDeg + 1);
    Real term = 1.0L;
    for (int m = 0; m <= kDeg; ++m) {
        s[m] = term;
        term *= static_cast<Real>(c) / (m + 1);
    }
    return s;
}
Ser tau_pow(int k, double scale) {  // (scale tau)^k
    Ser s = constant(0.0);
    if (k <= kDeg) s[k] = std::pow(static_cast<Real>(scale), k);
    return s;
}
Ser operator*(const Ser& a, const Ser& b) {
    Ser r = constant(0.0);
    for (int i = 0; i <= kDeg; ++i)
        for (int j = 0; i + j <= kDeg; ++j) r[i + j] += a[i] * b[j];
    return r;
}
Ser operator+(Ser a, const Ser& b) {
    for (int i = 0; i <= kDeg; ++i) a[i] += b[i];
    return a;
}
Ser operator*(double c, Ser a) {
    for (Real& v : a) v *= c;
    return a;
}
Ser ipow(const Ser& a, int k) {
    Ser r = constant(1.0);
    for (int i = 0; i < k; ++i) r = r * a;
    return r;
}

double binom(int n, int k) { return std::round(std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0))); }
double gauss_z_moment(int k) {  // E Z^k
    if (k % 2) return 0.0;
    double m = 1.0;
    for (int j = k - 1; j > 0; j -= 2) m *= j;
    return m;
}

// tau^m -> t^(alpha m) M_alpha(-alpha m).
double umbral_image(const Ser& s, double alpha, double t) {
    // M_alpha(-alpha m) = m! / Gamma(1 + alpha m) overflows long before the terms do.
    Real sum = 0.0L;
    for (int m = 0; m <= kDeg; ++m) {
        if (s[m] == 0.0L) continue;
        const Real lg = std::log(std::abs(s[m])) + alpha * m * std::log(static_cast<Real>(t)) + std::lgamma(1.0L + m) -
                        std::lgamma(1.0L + static_cast<Real>(alpha) * m);
        sum += std::copysign(std::exp(lg), s[m]);
    }
    return static_cast<double>(sum);
}

// Ordinary moments of the solvable examples, written from the Gaussian structure of F1.
Ser ordinary_diffusion(int n, const InitialCondition& ic) {
    Ser r = constant(0.0);
    for (int k = 0; k <= n; k += 2)  // x = X0 + sqrt(2 tau) Z
        r = r + (binom(n, k) * ic.moment(n - k) * gauss_z_moment(k)) * tau_pow(k / 2, 2.0);
    return r;
}
Ser ordinary_damping(int n, double a, double b, const InitialCondition& ic) {
    // x = e^(b tau) X0 + sqrt(v) Z with v = a (e^(2 b tau) - 1) / b.
    const Ser v = (a / b) * (exp_ser(2 * b) + constant(-1.0));
    Ser r = constant(0.0);
    for (int k = 0; k <= n; k += 2)
        r = r + (binom(n, k) * ic.moment(n - k) * gauss_z_moment(k)) * (exp_ser(b * (n - k)) * ipow(v, k / 2));
    return r;
}

const QuadSpec slice_q{1e-300, 1e-9, 4000, 1.0};

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = a + (b - a) * i / (n - 1);
    return g;
}

}  // namespace

TEST_CASE("heat polynomials", "[moments]") {
    CHECK(heat_poly(0, 3.0, 2.0) == 1.0);
    CHECK_THAT(heat_poly(2, 1.5, 0.7), WithinRel(1.5 * 1.5 + 2 * 0.7, 1e-14));
    for (std::size_t n = 0; n <= 8; ++n) {
        CHECK_THAT(heat_poly(n, 1.3, 0.0), WithinRel(std::pow(1.3, n), 1e-13));
        CHECK_THAT(frac_heat_poly(n, 1.0, 0.8, 0.6), WithinRel(heat_poly(n, 0.8, 0.6), 1e-13));
    }
    CHECK(frac_heat_poly(1, 0.4, 2.5, 3.0) == 2.5);
    CHECK_THAT(frac_heat_poly(2, 0.5, 0.0, 2.0), WithinRel(4.0 * std::sqrt(2.0 / std::numbers::pi), 1e-14));
    CHECK_THROWS_AS(frac_heat_poly(2, 0.5, 0.0, -1.0), DomainError);
}

TEST_CASE("moment laws: examples", "[moments]") {
    auto ic = InitialCondition::gauss(0.0, 1.0);
    CHECK(moment_diffusion(0, 0.4, ic, 2.0) == 1.0);
    CHECK_THAT(moment_diffusion(2, 0.4, ic, 2.0), WithinRel(1.0 + 2.0 * std::pow(2.0, 0.4) / std::tgamma(1.4), 1e-14));
    CHECK_THAT(moment_diffusion(2, 1.0, ic, 2.0), WithinRel(5.0, 1e-14));

    auto g = InitialCondition::gauss(0.5, 0.5);
    CHECK(moment_dilation(3, 0.5, g, 0.0) == g.moment(3));
    CHECK_THAT(moment_dilation(2, 0.5, InitialCondition::gauss(0.0, 1.0), 1.0),
               WithinRel(ml_integral(0.5, -3.0, 1.0, {1e-300, 1e-12, 4000, 1.0}).value, 1e-10));

    const double a = 0.7, b = 1.2, t = 0.6, al = 0.5;
    const double s2 = g.moment(2);
    CHECK_THAT(moment_diffusion_damping(2, al, a, b, g, t),
               WithinRel((a / b + s2) * mittag_leffler(al, 2 * b * std::pow(t, al)) - a / b, 1e-12));
    CHECK_THAT(moment_diffusion_damping(0, al, a, b, g, t), WithinRel(1.0, 1e-14));
    for (std::size_t n = 0; n <= 5; ++n) CHECK_THAT(moment_diffusion_damping(n, al, a, b, g, 0.0), WithinAbs(g.moment(n), 1e-13));
    CHECK_THROWS_AS(moment_diffusion_damping(2, al, -1.0, b, g, t), DomainError);

    CHECK(moment_squared_dilation(0, 0.5, g, 2.0) == 1.0);
    CHECK_THAT(moment_squared_dilation(1, 1.0, g, 0.3), WithinRel(0.5 * std::exp(0.9), 1e-14));
    CHECK(moment_squared_dilation(4, 0.5, g, 0.0) == g.moment(4));
}

TEST_CASE("umbral substitution reproduces the fractional laws", "[moments][property]") {
    auto g = InitialCondition::gauss(0.4, 0.7);
    const double a = 0.6, b = 0.8;
    for (double al : {0.5, 0.8})
        for (double t : {0.05, 0.3}) {
            for (int n = 0; n <= 4; ++n) {
                INFO("alpha=" << al << " t=" << t << " n=" << n);
                REQUIRE_THAT(umbral_image(ordinary_diffusion(n, g), al, t), WithinRel(moment_diffusion(n, al, g, t), 1e-12));
                REQUIRE_THAT(umbral_image(g.moment(n) * exp_ser(-(n + 1.0)), al, t),
                             WithinRel(moment_dilation(n, al, g, t), 1e-10));
                // F1 moments of the squared dilation: e^-tau sigma^n E[e^((n+1) U)], U ~ N(0, 2 tau).
                REQUIRE_THAT(umbral_image(g.moment(n) * exp_ser((n + 1.0) * (n + 1.0) - 1.0), al, t),
                             WithinRel(moment_squared_dilation(n, al, g, t), 1e-10));
                REQUIRE_THAT(umbral_image(ordinary_damping(n, a, b, g), al, t),
                             WithinRel(moment_diffusion_damping(n, al, a, b, g, t), 1e-9));
            }
        }
}

TEST_CASE("alpha = 1 recovers the ordinary laws", "[moments][property]") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> ut(0.0, 1.5), um(-1.0, 1.0), us(0.2, 1.5), uab(0.2, 2.0);
    std::uniform_int_distribution<int> un(0, 4);
    for (int i = 0; i < 50; ++i) {
        const double t = ut(gen), a = uab(gen), b = uab(gen);
        const int n = un(gen);
        auto g = InitialCondition::gauss(um(gen), us(gen));
        auto eval = [&](const Ser& s) {
            double v = 0.0, tp = 1.0;
            for (int m = 0; m <= kDeg; ++m, tp *= t) v += s[m] * tp;
            return v;
        };
        REQUIRE_THAT(moment_diffusion(n, 1.0, g, t), WithinRel(eval(ordinary_diffusion(n, g)), 1e-10));
        REQUIRE_THAT(moment_dilation(n, 1.0, g, t), WithinRel(g.moment(n) * std::exp(-(n + 1.0) * t), 1e-10));
        REQUIRE_THAT(moment_squared_dilation(n, 1.0, g, t), WithinRel(g.moment(n) * std::exp((2.0 * n + n * n) * t), 1e-10));
        // Closed Gaussian moments of the damping kernel.
        const double e = std::exp(b * t), v = a * std::expm1(2 * b * t) / b;
        double ref = 0.0;
        for (int k = 0; k <= n; k += 2) ref += binom(n, k) * std::pow(e, n - k) * g.moment(n - k) * std::pow(v, k / 2) * gauss_z_moment(k);
        REQUIRE_THAT(moment_diffusion_damping(n, 1.0, a, b, g, t), WithinRel(ref, 1e-10));
    }
}

TEST_CASE("anomalous scaling of the second moment", "[moments]") {
    auto point = InitialCondition::gauss(0.0, 1e-6);
    for (double al : {0.3, 0.5, 0.7}) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const int N = 21;
        for (int i = 0; i < N; ++i) {
            const double t = std::pow(10.0, -2.0 + 4.0 * i / (N - 1));
            const double x = std::log(t), y = std::log(moment_diffusion(2, al, point, t));
            sx += x, sy += y, sxx += x * x, sxy += x * y;
        }
        CHECK_THAT((N * sxy - sx * sy) / (N * sxx - sx * sx), WithinAbs(al, 1e-6));
    }
}

TEST_CASE("squeeze moment ratio", "[moments]") {
    auto g = InitialCondition::gauss(0.3, 0.8);
    for (std::size_t n = 0; n <= 4; ++n)
        CHECK_THAT(moment_squeeze_ratio(n, 0.5, g, 0.0), WithinRel(g.moment(n) / g.moment(0), 1e-10));
    auto even = InitialCondition::gauss(0.0, 1.0);
    CHECK_THAT(moment_squeeze_ratio(1, 0.5, even, 0.01), WithinAbs(0.0, 1e-12));
    CHECK_THROWS_AS(moment_squeeze_ratio(2, 0.5, even, 1.0), RegimeError);
    // Small t: ratio from the fractional squeeze slice.
    const double t = 0.01;
    auto s = evaluate_slice(Squeeze{}, 0.5, even, linspace(-15, 15, 601), t, slice_q);
    const double ratio = numeric_moment(s, 2).value / numeric_moment(s, 0).value;
    CHECK_THAT(ratio, WithinRel(moment_squeeze_ratio(2, 0.5, even, t), 1e-3));
}

TEST_CASE("numeric moments of slices", "[moments]") {
    auto ic = InitialCondition::gauss(0.0, 1.0);
    auto s = evaluate_slice(Diffusion{}, 0.5, ic, linspace(-40, 40, 801), 0.5, slice_q);
    CHECK_THAT(numeric_moment(s, 0).value, WithinRel(1.0, 1e-5));
    CHECK_THAT(numeric_moment(s, 2).value, WithinRel(moment_diffusion(2, 0.5, ic, 0.5), 1e-4));
    CHECK_THAT(numeric_moment(s, 4).value, WithinRel(moment_diffusion(4, 0.5, ic, 0.5), 1e-4));
    CHECK_FALSE(numeric_moment(s, 4).boundary_warning);

    FieldSlice zero;
    zero.grid = linspace(0, 1, 11);
    zero.values.assign(11, 0.0);
    CHECK(numeric_moment(zero, 3).value == 0.0);

    auto narrow = evaluate_slice(Diffusion{}, 0.5, ic, linspace(-2, 2, 41), 0.5, slice_q);
    CHECK(numeric_moment(narrow, 2).boundary_warning);
}

TEST_CASE("Monte Carlo subordination of the moment laws", "[moments]") {
    // E[<x^n>_1(Y)] with Y = t^alpha S^-alpha.
    const double al = 0.5, t = 0.8, a = 0.6, b = 0.4;
    const auto S = sample_levy(al, 400'000, 99);
    auto g = InitialCondition::gauss(0.3, 0.6);
    auto mc = [&](auto law) {
        double m = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < S.size(); ++i) {
            const double y = std::pow(t, al) * std::pow(S[i], -al);
            const double v = law(y), d = v - m;
            m += d / static_cast<double>(i + 1);
            m2 += d * (v - m);
        }
        return std::pair{m, std::sqrt(m2 / (S.size() - 1.0) / S.size())};
    };
    const double s2 = g.moment(2);
    auto [m1, e1] = mc([&](double y) { return s2 + 2.0 * y; });
    CHECK(std::abs(m1 - moment_diffusion(2, al, g, t)) < 4.0 * e1);
    auto [m2, e2] = mc([&](double y) { return s2 * std::exp(-3.0 * y); });
    CHECK(std::abs(m2 - moment_dilation(2, al, g, t)) < 4.0 * e2);
    auto [m3, e3] = mc([&](double y) { return (a / b + s2) * std::exp(2.0 * b * y) - a / b; });
    CHECK(std::abs(m3 - moment_diffusion_damping(2, al, a, b, g, t)) < 4.0 * e3);
}
