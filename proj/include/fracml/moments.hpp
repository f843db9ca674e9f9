#pragma once

// Heat polynomials, the analytic moment laws <x^n(t)>_alpha of the solvable
// operators, and a trapezoid moment of a computed slice to check them against.

#include <cmath>
#include <cstddef>
#include <vector>

#include "fracml/error.hpp"
#include "fracml/fp_solver.hpp"
#include "fracml/mlf.hpp"
#include "fracml/quadrature.hpp"
#include "fracml/specfun.hpp"

namespace fracml {

/// H_n(X, Y) = n! sum_r X^(n-2r) Y^r / ((n-2r)! r!).
inline double heat_poly(std::size_t n, double X, double Y) {
    double sum = 0.0;
    const double nf = std::lgamma(static_cast<double>(n) + 1.0);
    for (std::size_t r = 0; 2 * r <= n; ++r) {
        const std::size_t k = n - 2 * r;
        const double c = std::exp(nf - std::lgamma(static_cast<double>(k) + 1.0) - std::lgamma(static_cast<double>(r) + 1.0));
        sum += c * std::pow(X, static_cast<double>(k)) * std::pow(Y, static_cast<double>(r));
    }
    return sum;
}

/// alpha-H_n(X, Y) = n! sum_r X^(n-2r) Y^(alpha r) / ((n-2r)! Gamma(1 + alpha r)), Y >= 0.
inline double frac_heat_poly(std::size_t n, double alpha, double X, double Y) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("frac_heat_poly: alpha must lie in (0,1]");
    if (!(Y >= 0.0)) throw DomainError("frac_heat_poly: Y must be >= 0");
    double sum = 0.0;
    const double nf = std::lgamma(static_cast<double>(n) + 1.0);
    for (std::size_t r = 0; 2 * r <= n; ++r) {
        const std::size_t k = n - 2 * r;
        const double ar = alpha * static_cast<double>(r);
        const double c = std::exp(nf - std::lgamma(static_cast<double>(k) + 1.0) - std::lgamma(1.0 + ar));
        sum += c * std::pow(X, static_cast<double>(k)) * (r == 0 ? 1.0 : std::pow(Y, ar));
    }
    return sum;
}

namespace detail {

inline double ml(double alpha, double z, const MLConfig& cfg) {
    return ml_eval(MLParams::one(alpha), z, cfg).value;
}

inline double log_factorial(std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

}  // namespace detail

/// Diffusion: int f(xi) alpha-H_n(xi, t) dxi, expanded over the raw moments of f.
/// The second argument is t itself, so that t enters as t^(alpha r).
inline double moment_diffusion(std::size_t n, double alpha, const InitialCondition& ic, double t) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("moment_diffusion: alpha must lie in (0,1]");
    if (!(t >= 0.0)) throw DomainError("moment_diffusion: t must be >= 0");
    double sum = 0.0;
    for (std::size_t r = 0; 2 * r <= n; ++r) {
        const std::size_t k = n - 2 * r;
        const double ar = alpha * static_cast<double>(r);
        const double c = std::exp(detail::log_factorial(n) - detail::log_factorial(k) - std::lgamma(1.0 + ar));
        sum += c * ic.moment(k) * (r == 0 ? 1.0 : std::pow(t, ar));
    }
    return sum;
}

/// Dilation: sigma^n E_alpha(-(n+1) t^alpha).
inline double moment_dilation(std::size_t n, double alpha, const InitialCondition& ic, double t,
                              const MLConfig& ml = {}) {
    const double z = -(static_cast<double>(n) + 1.0) * std::pow(t, alpha);
    return ic.moment(n) * detail::ml(alpha, z, ml);
}

/// Diffusion with damping:
///     n! sum_r sum_{s<=r} (a/2b)^r sigma^(n-2r) (-1)^s E_alpha(b t^alpha (n - 2s)) / (s! (r-s)! (n-2r)!).
/// The (-1)^s comes from expanding (1 - e^(-2 b tau))^r; the n = 2 case reduces to
/// (a/b + sigma^2) E_alpha(2 b t^alpha) - a/b.
inline double moment_diffusion_damping(std::size_t n, double alpha, double a, double b, const InitialCondition& ic,
                                       double t, const MLConfig& ml = {}) {
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("moment_diffusion_damping: need a, b > 0");
    const double ta = std::pow(t, alpha);
    double sum = 0.0;
    for (std::size_t r = 0; 2 * r <= n; ++r) {
        const std::size_t k = n - 2 * r;
        const double base = std::pow(a / (2.0 * b), static_cast<double>(r)) * ic.moment(k);
        for (std::size_t s = 0; s <= r; ++s) {
            const double c = std::exp(detail::log_factorial(n) - detail::log_factorial(s) - detail::log_factorial(r - s) -
                                      detail::log_factorial(k));
            const double sign = (s % 2 == 0) ? 1.0 : -1.0;
            const double arg = b * ta * (static_cast<double>(n) - 2.0 * static_cast<double>(s));
            sum += sign * c * base * detail::ml(alpha, arg, ml);
        }
    }
    return sum;
}

/// Squared dilation: sigma^n E_alpha((2n + n^2) t^alpha).
inline double moment_squared_dilation(std::size_t n, double alpha, const InitialCondition& ic, double t,
                                      const MLConfig& ml = {}) {
    const double nd = static_cast<double>(n);
    return ic.moment(n) * detail::ml(alpha, (2.0 * nd + nd * nd) * std::pow(t, alpha), ml);
}

/// Squeeze, normalized by the n = 0 value:
///     n! sum_r (t^alpha/2)^r / (n-2r)! int f(xi) xi^(n-2r) E^{1+r}_{alpha,1+alpha r}(-xi^2 t^alpha / 2) dxi.
/// Only the ratio is defined; the overall constant is not fixed by the approximation.
inline double moment_squeeze_ratio(std::size_t n, double alpha, const InitialCondition& ic, double t,
                                   const QuadSpec& quad = {1e-14, 1e-11, 2000, 1.0}, double window = 0.2,
                                   const MLConfig& ml = {}) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("moment_squeeze_ratio: alpha must lie in (0,1]");
    const double ta = std::pow(t, alpha);
    if (ta > window)
        throw RegimeError("moment_squeeze_ratio: t^alpha=" + std::to_string(ta) + " beyond the approximation window");
    auto unnormalized = [&](std::size_t m) {
        double sum = 0.0;
        for (std::size_t r = 0; 2 * r <= m; ++r) {
            const std::size_t k = m - 2 * r;
            const MLParams p = MLParams::prabhakar(alpha, static_cast<double>(r));
            auto g = [&](double xi) {
                const double fv = ic(xi);
                if (fv == 0.0) return 0.0;
                return fv * std::pow(xi, static_cast<double>(k)) * ml_eval(p, -0.5 * xi * xi * ta, ml).value;
            };
            const double integral = integrate_finite(g, ic.lo(), ic.hi(), quad, ic.features()).value;
            sum += std::exp(detail::log_factorial(m) - detail::log_factorial(k)) * std::pow(0.5 * ta, static_cast<double>(r)) *
                   integral;
        }
        return sum;
    };
    return unnormalized(n) / unnormalized(0);
}

struct NumericMoment {
    double value = 0.0;       ///< Richardson-extrapolated estimate
    double trapezoid = 0.0;   ///< trapezoid rule on the full grid
    double error_estimate = 0.0;
    bool boundary_warning = false;  ///< |x^n F| at a grid end exceeds 1e-10
};

/// int x^n F(x, t) dx over the slice grid: trapezoid on the full grid and on every
/// other point, combined by Richardson extrapolation.
inline NumericMoment numeric_moment(const FieldSlice& slice, std::size_t n) {
    const auto& x = slice.grid;
    const std::size_t N = x.size();
    if (N < 2) throw DomainError("numeric_moment: need at least 2 grid points");
    std::vector<double> y(N);
    for (std::size_t i = 0; i < N; ++i) y[i] = (n == 0 ? 1.0 : std::pow(x[i], static_cast<double>(n))) * slice.values[i];
    NumericMoment out;
    out.trapezoid = trapezoid(x, y);
    out.value = out.trapezoid;
    if (N >= 5 && N % 2 == 1) {
        std::vector<double> xc, yc;
        for (std::size_t i = 0; i < N; i += 2) {
            xc.push_back(x[i]);
            yc.push_back(y[i]);
        }
        const double coarse = trapezoid(xc, yc);
        out.value = (4.0 * out.trapezoid - coarse) / 3.0;
        out.error_estimate = std::abs(out.trapezoid - coarse) / 3.0;
    }
    out.boundary_warning = std::abs(y.front()) > 1e-10 || std::abs(y.back()) > 1e-10;
    return out;
}

}  // namespace fracml
