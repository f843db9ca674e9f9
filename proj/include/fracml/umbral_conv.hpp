#pragma once

// Alpha-deformed convolution calculus: the coefficients g_alpha(n; x, y) of the
// product E_alpha(lambda x) E_alpha(lambda y) = sum_n lambda^n g_alpha(n; x, y) / Gamma(1 + alpha n),
// the convolution kernel ntilde_alpha, and the moment route back to g_alpha.
// Elsewhere g_alpha(n; x, y) is also written g_{n;alpha}(x, y) or (x (+)_alpha y)^n;
// here it is always g(n, alpha, x, y).

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "fracml/error.hpp"
#include "fracml/mlf.hpp"
#include "fracml/quadrature.hpp"
#include "fracml/specfun.hpp"
#include "fracml/stable.hpp"

namespace fracml {

/// g_alpha(n; x, y) = sum_r binom_alpha(n, r) x^(n-r) y^r.
inline double g_alpha_sum(std::size_t n, double alpha, double x, double y) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("g_alpha_sum: alpha must lie in (0,1]");
    const long nl = static_cast<long>(n);
    double sum = 0.0;
    for (long r = 0; r <= nl; ++r)
        sum += alpha_binomial(nl, r, alpha) * std::pow(x, static_cast<double>(nl - r)) * std::pow(y, static_cast<double>(r));
    return sum;
}

/// Evaluated coefficient (x (+)_alpha y)^n.
struct GCoeff {
    std::size_t n = 0;
    double alpha = 1.0;
    double x = 0.0;
    double y = 0.0;
    double value = 1.0;

    static GCoeff make(std::size_t n, double alpha, double x, double y) {
        return {n, alpha, x, y, g_alpha_sum(n, alpha, x, y)};
    }
};

namespace detail {

// 2F1(1, b; 3/2; -w) for w >= 0. Odd n terminates and has no cancellation, so it
// is summed directly; otherwise Pfaff's transformation
//     2F1(1, b; 3/2; -w) = (1+w)^(-b) 2F1(1/2, b; 3/2; w/(1+w))
// keeps the argument inside the unit disc for w >= 1/2.
inline double hyp_1b_three_halves(double b, double w) {
    const bool terminating = b <= 0.0 && std::floor(b) == b;
    if (terminating || w < 0.5) {
        HypArgs h{{1.0, b}, {1.5}, -w};
        return hyp_pfq(h, SeriesSpec{1e-15, 100'000}).value;
    }
    HypArgs h{{0.5, b}, {1.5}, w / (1.0 + w)};
    return std::pow(1.0 + w, -b) * hyp_pfq(h, SeriesSpec{1e-15, 100'000}).value;
}

}  // namespace detail

/// g_{1/2}(n; x, y) from the pair of 2F1 functions, x, y > 0.
inline double g_alpha_closed_half(std::size_t n, double x, double y) {
    if (!(x > 0.0) || !(y > 0.0)) throw DomainError("g_alpha_closed_half: x and y must be positive");
    const double nd = static_cast<double>(n);
    const double pre = 2.0 * std::exp(std::lgamma(1.0 + 0.5 * nd) - std::lgamma(0.5 * (1.0 + nd))) /
                       std::sqrt(std::numbers::pi);
    const double b = 0.5 * (1.0 - nd);
    const double left = y * std::pow(x, nd - 1.0) * detail::hyp_1b_three_halves(b, (y * y) / (x * x));
    const double right = x * std::pow(y, nd - 1.0) * detail::hyp_1b_three_halves(b, (x * x) / (y * y));
    return pre * (left + right);
}

/// ntilde_alpha(u; x, y) = int_0^u n_alpha(xi, x) n_alpha(u - xi, y) dxi.
inline double ntilde(double alpha, double u, double x, double y, const QuadSpec& quad = {},
                     const StableConfig& cfg = {}) {
    detail::check_alpha_open(alpha, "ntilde");
    if (!(u > 0.0)) throw DomainError("ntilde: u must be positive");
    if (!(x > 0.0) || !(y > 0.0)) throw DomainError("ntilde: x and y must be positive");
    auto f = [&](double xi) {
        const double a = kernel_n(alpha, xi, x, cfg);
        if (a == 0.0) return 0.0;
        return a * kernel_n(alpha, u - xi, y, cfg);
    };
    std::vector<double> cuts{0.5 * u};
    const double sx = std::pow(x, alpha);
    const double sy = std::pow(y, alpha);
    for (double c : {0.5 * sx, sx, 2.0 * sx, u - 0.5 * sy, u - sy, u - 2.0 * sy})
        if (c > 0.0 && c < u) cuts.push_back(c);
    return integrate_finite(f, 0.0, u, quad, cuts).value;
}

/// Closed form of ntilde_{1/2}(u; x^2, y^2): Gaussian times a sum of two error functions.
inline double ntilde_half_closed(double u, double x, double y) {
    if (!(x > 0.0) || !(y > 0.0)) throw DomainError("ntilde_half_closed: x and y must be positive");
    const double s2 = x * x + y * y;
    const double s = std::sqrt(s2);
    return std::exp(-u * u / (4.0 * s2)) / std::sqrt(std::numbers::pi * s2) *
           (std::erf(u * y / (2.0 * x * s)) + std::erf(u * x / (2.0 * y * s)));
}

/// g_alpha(n; x, y) = M_alpha(-alpha n)^-1 int_0^inf u^n ntilde_alpha(u; x^(1/alpha), y^(1/alpha)) du.
inline double g_alpha_moment(std::size_t n, double alpha, double x, double y, const QuadSpec& quad = {},
                             const StableConfig& cfg = {}) {
    detail::check_alpha_open(alpha, "g_alpha_moment");
    if (!(x > 0.0) || !(y > 0.0)) throw DomainError("g_alpha_moment: x and y must be positive");
    const double nd = static_cast<double>(n);
    const double X = std::pow(x, 1.0 / alpha);
    const double Y = std::pow(y, 1.0 / alpha);
    QuadSpec inner = quad;
    inner.rel_tol = std::min(quad.rel_tol, 1e-10);
    inner.abs_tol = 1e-300;
    auto f = [&](double u) {
        const double v = ntilde(alpha, u, X, Y, inner, cfg);
        return v == 0.0 ? 0.0 : std::pow(u, nd) * v;
    };
    // ntilde lives on the scale x + y and inherits the stretched-exponential tail of n_alpha.
    const double scale = x + y;
    const double cutoff = scale * std::pow(40.0 / detail::kanter_a0(alpha), 1.0 - alpha) * (1.0 + nd);
    std::vector<double> cuts;
    for (double c : {0.25, 0.5, 1.0, 2.0, 4.0}) cuts.push_back(c * scale);
    double total = integrate_finite(f, 0.0, cutoff, quad, cuts).value;
    double edge = cutoff;
    for (int grow = 0; grow < 30 && std::abs(f(edge)) * edge > 0.01 * quad.target(total); ++grow) {
        total += integrate_finite(f, edge, 2.0 * edge, quad).value;
        edge *= 2.0;
    }
    return total / stieltjes_moment(alpha, -alpha * nd).value;
}

struct ProductIdentity {
    double partial_sum = 0.0;
    double product = 0.0;
    double residual = 0.0;
    double last_term = 0.0;     ///< |lambda^N g(N) / Gamma(1 + alpha N)|, the convergence monitor
    double cancellation = 1.0;  ///< max|term| / |partial sum|
};

/// sum_{n<=N} lambda^n g_alpha(n; x, y) / Gamma(1 + alpha n) against E_alpha(lambda x) E_alpha(lambda y).
inline ProductIdentity product_identity(double alpha, double lambda, double x, double y, std::size_t N,
                                        const MLConfig& ml = {}) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("product_identity: alpha must lie in (0,1]");
    ProductIdentity out;
    double max_term = 0.0;
    for (std::size_t n = 0; n <= N; ++n) {
        const double nd = static_cast<double>(n);
        const double term = std::pow(lambda, nd) * g_alpha_sum(n, alpha, x, y) * rgamma(1.0 + alpha * nd);
        out.partial_sum += term;
        max_term = std::max(max_term, std::abs(term));
        out.last_term = std::abs(term);
    }
    out.cancellation = out.partial_sum == 0.0 ? std::numeric_limits<double>::infinity()
                                              : max_term / std::abs(out.partial_sum);
    if (out.cancellation > ml_cancellation_error)
        throw ConvergenceError("product_identity: cancellation " + std::to_string(out.cancellation),
                               out.partial_sum, N + 1);
    const MLParams p = MLParams::one(alpha);
    out.product = ml_eval(p, lambda * x, ml).value * ml_eval(p, lambda * y, ml).value;
    out.residual = std::abs(out.partial_sum - out.product);
    return out;
}

inline double product_identity_residual(double alpha, double lambda, double x, double y, std::size_t N,
                                        const MLConfig& ml = {}) {
    return product_identity(alpha, lambda, x, y, N, ml).residual;
}

}  // namespace fracml
