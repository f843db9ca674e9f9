#pragma once

// Scalar special functions: gamma machinery, error function, generalized
// hypergeometric series, alpha-deformed binomials.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <type_traits>
#include <string>
#include <vector>

#include "fracml/error.hpp"

namespace fracml {

/// Series controls shared by the scalar special functions.
struct SeriesSpec {
    double tol = 1e-12;
    std::size_t max_terms = 10'000;
};

namespace detail {

inline bool is_nonpositive_integer(double x) {
    return x <= 0.0 && std::floor(x) == x;
}

template <typename Real>
Real lgamma_signed(Real x, int& sign) {
#if defined(__GLIBC__)
    if constexpr (std::is_same_v<Real, long double>) {
        return ::lgammal_r(x, &sign);
    } else {
        double v = ::lgamma_r(static_cast<double>(x), &sign);
        return static_cast<Real>(v);
    }
#else
    sign = 1;
    if (x < 0) sign = (static_cast<long long>(std::floor(x)) % 2 == 0) ? 1 : -1;
    return std::lgamma(x);
#endif
}

}  // namespace detail

/// Gamma function. Backed by the C library tgamma; poles and overflow are reported.
inline double gamma(double x) {
    if (std::isnan(x)) throw DomainError("gamma: NaN argument");
    if (detail::is_nonpositive_integer(x))
        throw PoleError("gamma: pole at non-positive integer " + std::to_string(x));
    if (x > 171.6243769563027) throw OverflowError("gamma: overflow at x=" + std::to_string(x));
    return std::tgamma(x);
}

/// Natural log of |Gamma(x)|; sign receives the sign of Gamma(x).
inline double log_abs_gamma(double x, int& sign) {
    if (detail::is_nonpositive_integer(x))
        throw PoleError("log_abs_gamma: pole at non-positive integer " + std::to_string(x));
    return detail::lgamma_signed(x, sign);
}

inline double log_gamma(double x) {
    int sign = 1;
    double v = log_abs_gamma(x, sign);
    if (sign < 0) throw DomainError("log_gamma: Gamma(x) negative at x=" + std::to_string(x));
    return v;
}

/// 1/Gamma(x), zero at the poles. Used in series denominators.
inline double rgamma(double x) {
    if (detail::is_nonpositive_integer(x)) return 0.0;
    if (x > 171.0) {
        int sign = 1;
        return sign * std::exp(-detail::lgamma_signed(x, sign));
    }
    return 1.0 / std::tgamma(x);
}

/// Gamma(z) Gamma(1-z) = pi / sin(pi z).
inline double gamma_reflection(double z) {
    if (std::floor(z) == z) throw PoleError("gamma_reflection: pole at integer " + std::to_string(z));
    // sin(pi z) evaluated on the reduced argument keeps the result accurate for large |z|.
    double r = z - 2.0 * std::floor(z / 2.0);  // r in [0, 2)
    return std::numbers::pi / std::sin(std::numbers::pi * r);
}

inline double erf(double x) { return std::erf(x); }
inline double erfc(double x) { return std::erfc(x); }

/// Parameter rows and argument of pFq.
template <typename Real = double>
struct HypArgsT {
    std::vector<Real> upper;
    std::vector<Real> lower;
    Real z{};
};
using HypArgs = HypArgsT<double>;

enum class SeriesQuality {
    ok,
    terminated,      ///< finite sum (an upper parameter is a non-positive integer)
    slow_boundary,   ///< p = q+1 with |z| close to 1: convergence is slow and suspect
};

template <typename Real = double>
struct HypResult {
    Real value{};
    std::size_t terms = 0;
    Real max_abs_term{};   ///< largest |term|; max_abs_term/|value| measures cancellation
    SeriesQuality quality = SeriesQuality::ok;

    Real cancellation() const {
        using std::abs;
        return value == Real(0) ? std::numeric_limits<Real>::infinity() : max_abs_term / abs(value);
    }
};

/// Generalized hypergeometric series sum_r prod(a)_r / prod(b)_r z^r / r!.
///
/// Stops after two consecutive terms below tol*|partial sum|, or when an
/// upper parameter that is a non-positive integer terminates the series.
template <typename Real>
HypResult<Real> hyp_pfq(const HypArgsT<Real>& args, std::size_t max_terms = 10'000,
                        Real tol = Real(1e-12)) {
    using std::abs;
    for (Real b : args.lower)
        if (b <= 0 && std::floor(b) == b)
            throw PoleError("hyp_pfq: lower parameter is a non-positive integer");

    bool terminating = false;
    for (Real a : args.upper)
        if (a <= 0 && std::floor(a) == a) terminating = true;

    const std::size_t p = args.upper.size();
    const std::size_t q = args.lower.size();
    HypResult<Real> out;
    out.value = 1;
    out.max_abs_term = 1;
    out.terms = 1;
    if (args.z == Real(0)) return out;

    if (!terminating) {
        if (p > q + 1)
            throw DomainError("hyp_pfq: p > q+1 series diverges for nonzero z");
        if (p == q + 1 && abs(args.z) >= 1)
            throw DomainError("hyp_pfq: |z| >= 1 outside the disc of convergence for p = q+1");
        if (p == q + 1 && abs(args.z) > Real(0.9)) out.quality = SeriesQuality::slow_boundary;
    } else {
        out.quality = SeriesQuality::terminated;
    }

    Real term = 1;
    Real sum = 1;
    int small_run = 0;
    for (std::size_t r = 0; r < max_terms; ++r) {
        Real ratio = args.z / Real(r + 1);
        for (Real a : args.upper) ratio *= (a + Real(r));
        for (Real b : args.lower) ratio /= (b + Real(r));
        term *= ratio;
        sum += term;
        out.terms = r + 2;
        if (abs(term) > out.max_abs_term) out.max_abs_term = abs(term);
        if (term == Real(0)) {
            out.value = sum;
            return out;
        }
        if (!std::isfinite(sum))
            throw OverflowError("hyp_pfq: partial sum overflowed");
        if (abs(term) <= tol * abs(sum)) {
            if (++small_run >= 2) {
                out.value = sum;
                return out;
            }
        } else {
            small_run = 0;
        }
    }
    throw ConvergenceError("hyp_pfq: no convergence within " + std::to_string(max_terms) + " terms",
                           static_cast<double>(sum), max_terms);
}

inline HypResult<double> hyp_pfq(const HypArgs& args, const SeriesSpec& spec = {}) {
    return hyp_pfq<double>(args, spec.max_terms, spec.tol);
}

/// Gamma(1+alpha n) / (Gamma(1+alpha r) Gamma(1+alpha(n-r))); the ordinary binomial at alpha=1.
inline double alpha_binomial(long n, long r, double alpha) {
    if (n < 0 || r < 0 || r > n) throw DomainError("alpha_binomial: need 0 <= r <= n");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha_binomial: alpha must lie in (0,1]");
    if (r == 0 || r == n) return 1.0;
    const double top = 1.0 + alpha * static_cast<double>(n);
    const double left = 1.0 + alpha * static_cast<double>(r);
    const double right = 1.0 + alpha * static_cast<double>(n - r);
    // Symmetric in r <-> n-r: order the denominator factors canonically.
    const double lo = std::min(left, right);
    const double hi = std::max(left, right);
    if (top < 170.0) return std::tgamma(top) / (std::tgamma(lo) * std::tgamma(hi));
    int sign = 1;
    return std::exp(detail::lgamma_signed(top, sign) - detail::lgamma_signed(lo, sign) -
                    detail::lgamma_signed(hi, sign));
}

/// The block a/n, (a+1)/n, ..., (a+n-1)/n.
inline std::vector<double> delta_sequence(std::size_t n, double a) {
    if (n == 0) throw DomainError("delta_sequence: n must be >= 1");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (a + static_cast<double>(i)) / static_cast<double>(n);
    return out;
}

}  // namespace fracml
