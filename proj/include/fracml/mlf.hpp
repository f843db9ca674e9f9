#pragma once

// Mittag-Leffler functions on the real line: the power series (one- and
// three-parameter), the subordination integral, the moment (umbral) series,
// and residuals of the Laplace-transform and fractional-ODE identities.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "fracml/error.hpp"
#include "fracml/quadrature.hpp"
#include "fracml/specfun.hpp"
#include "fracml/stable.hpp"

namespace fracml {

/// E^gamma_{alpha,beta}(z) = sum_r (gamma)_r z^r / (r! Gamma(beta + alpha r)).
struct MLParams {
    double alpha = 0.5;
    double beta = 1.0;
    double gamma = 1.0;

    static MLParams one(double alpha) { return {alpha, 1.0, 1.0}; }
    /// The family E^{1+delta}_{alpha, 1+alpha delta}.
    static MLParams prabhakar(double alpha, double delta) { return {alpha, 1.0 + alpha * delta, 1.0 + delta}; }

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("MLParams: alpha must lie in (0,1]");
        if (!std::isfinite(beta) || !std::isfinite(gamma)) throw DomainError("MLParams: non-finite parameter");
    }
    bool one_parameter() const { return beta == 1.0 && gamma == 1.0; }
};

enum class MLMethod { series, integral, umbral, exact };

inline const char* to_string(MLMethod m) {
    switch (m) {
        case MLMethod::series: return "series";
        case MLMethod::integral: return "integral";
        case MLMethod::umbral: return "umbral";
        case MLMethod::exact: return "exact";
    }
    return "?";
}

struct MLResult {
    double value = 0.0;
    MLMethod method = MLMethod::series;
    std::size_t terms = 0;      ///< series terms, or integrand evaluations for the integral
    double cancellation = 1.0;  ///< max|term| / |value|
};

inline constexpr double ml_cancellation_error = 1e12;

/// Power series in long double with the two-consecutive-small-terms rule.
/// Throws ConvergenceError when the term budget is exhausted or the
/// cancellation flag exceeds 1e12.
inline MLResult ml_series(const MLParams& p, double z, double tol = 1e-15, std::size_t max_terms = 10'000) {
    p.validate();
    using LD = long double;
    MLResult out;
    out.method = MLMethod::series;
    const LD zl = z;
    LD coef = 1;  // (gamma)_r / r!
    LD sum = 0;
    LD max_term = 0;
    int small_run = 0;
    for (std::size_t r = 0; r < max_terms; ++r) {
        if (r > 0) coef *= (static_cast<LD>(p.gamma) + static_cast<LD>(r - 1)) / static_cast<LD>(r);
        const LD arg = static_cast<LD>(p.beta) + static_cast<LD>(p.alpha) * static_cast<LD>(r);
        LD term;
        if (coef == 0) {
            term = 0;
        } else if (arg <= 0 && std::floor(arg) == arg) {
            term = 0;  // 1/Gamma at a pole
        } else if (arg < 1500.0L) {
            term = coef * std::pow(zl, static_cast<LD>(r)) / std::tgamma(arg);
        } else {
            int sg = 1;
            const LD lg = detail::lgamma_signed<LD>(arg, sg);
            const LD mag = std::exp(std::log(std::abs(coef)) + static_cast<LD>(r) * std::log(std::abs(zl)) - lg);
            const bool neg = (coef < 0) != (zl < 0 && r % 2 == 1);
            term = neg ? -mag : mag;
        }
        sum += term;
        max_term = std::max(max_term, std::abs(term));
        out.terms = r + 1;
        if (z == 0.0 && r == 0) break;
        if (!std::isfinite(static_cast<double>(sum)))
            throw OverflowError("ml_series: partial sum overflowed at z=" + std::to_string(z));
        if (r > 0 && std::abs(term) <= static_cast<LD>(tol) * std::abs(sum)) {
            if (++small_run >= 2) break;
        } else {
            small_run = 0;
        }
        if (r + 1 == max_terms)
            throw ConvergenceError("ml_series: no convergence within " + std::to_string(max_terms) + " terms",
                                   static_cast<double>(sum), max_terms);
    }
    out.value = static_cast<double>(sum);
    out.cancellation = sum == 0 ? std::numeric_limits<double>::infinity() : static_cast<double>(max_term / std::abs(sum));
    if (out.cancellation > ml_cancellation_error)
        throw ConvergenceError("ml_series: cancellation " + std::to_string(out.cancellation) + " at z=" +
                                   std::to_string(z),
                               out.value, out.terms);
    return out;
}

/// E_alpha(lambda x) = int_0^inf n_alpha(y, x^(1/alpha)) e^(lambda y) dy.
inline MLResult ml_integral(double alpha, double lambda, double x, const QuadSpec& quad = {},
                            const StableConfig& cfg = {}) {
    detail::check_alpha_open(alpha, "ml_integral");
    if (!(x > 0.0)) throw DomainError("ml_integral: x must be positive");
    const double t = std::pow(x, 1.0 / alpha);
    const QuadResult r = subordinate(alpha, t, [lambda](double y) { return std::exp(lambda * y); }, quad, cfg);
    return {r.value, MLMethod::integral, r.evaluations, 1.0};
}

/// z^n M_alpha(-alpha n) / n!, the n-th coefficient of the moment series (without z^n).
inline double umbral_coefficient(double alpha, std::size_t n) {
    detail::check_alpha_open(alpha, "umbral_coefficient");
    const double nd = static_cast<double>(n);
    const StieltjesMoment m = stieltjes_moment(alpha, -alpha * nd);
    if (m.value < 1e300 && nd < 170.0) return m.value / std::tgamma(nd + 1.0);
    int s = 1;
    // ln M_alpha(-alpha n) = ln Gamma(1+n) - ln Gamma(1+alpha n), cancels against ln n!
    return std::exp(detail::lgamma_signed(1.0 + nd, s) - detail::lgamma_signed(1.0 + alpha * nd, s) -
                    detail::lgamma_signed(nd + 1.0, s));
}

/// sum_n z^n M_alpha(-alpha n) / n!: the umbral image c^n -> M_alpha(-alpha n) of e^(cz).
inline MLResult ml_umbral(double alpha, double z, double tol = 1e-15, std::size_t max_terms = 10'000) {
    detail::check_alpha_open(alpha, "ml_umbral");
    MLResult out;
    out.method = MLMethod::umbral;
    double sum = 0.0;
    double max_term = 0.0;
    double zn = 1.0;
    int small_run = 0;
    for (std::size_t n = 0; n < max_terms; ++n) {
        if (n > 0) zn *= z;
        const double term = zn == 0.0 ? 0.0 : zn * umbral_coefficient(alpha, n);
        sum += term;
        max_term = std::max(max_term, std::abs(term));
        out.terms = n + 1;
        if (z == 0.0) break;
        if (!std::isfinite(sum)) throw OverflowError("ml_umbral: partial sum overflowed");
        if (n > 0 && std::abs(term) <= tol * std::abs(sum)) {
            if (++small_run >= 2) break;
        } else {
            small_run = 0;
        }
        if (n + 1 == max_terms)
            throw ConvergenceError("ml_umbral: no convergence within " + std::to_string(max_terms) + " terms", sum,
                                   max_terms);
    }
    out.value = sum;
    out.cancellation = sum == 0.0 ? std::numeric_limits<double>::infinity() : max_term / std::abs(sum);
    if (out.cancellation > ml_cancellation_error)
        throw ConvergenceError("ml_umbral: cancellation " + std::to_string(out.cancellation), sum, out.terms);
    return out;
}

/// E^{1+delta}_{alpha,1+alpha delta}(u) = (1/Gamma(1+delta)) int_0^inf n_alpha(y,1) y^delta e^(u y) dy.
inline MLResult prabhakar_integral(double alpha, double delta, double u, const QuadSpec& quad = {},
                                   const StableConfig& cfg = {}) {
    detail::check_alpha_open(alpha, "prabhakar_integral");
    if (!(delta >= 0.0)) throw DomainError("prabhakar_integral: delta must be >= 0");
    const QuadResult r = subordinate(
        alpha, 1.0, [&](double y) { return std::pow(y, delta) * std::exp(u * y); }, quad, cfg);
    return {r.value * rgamma(1.0 + delta), MLMethod::integral, r.evaluations, 1.0};
}

struct MLConfig {
    double z_series = 10.0;                ///< |z| bound for trying the series first
    double cancellation_threshold = 1e8;   ///< series accepted below this flag
    double tol = 1e-15;
    std::size_t max_terms = 10'000;
    QuadSpec quad = {1e-300, 1e-12, 4000, 1.0};
    StableConfig stable = {};
};

/// Automatic evaluator: series inside its viable regime, the integral route outside.
inline MLResult ml_eval(const MLParams& p, double z, const MLConfig& cfg = {}) {
    p.validate();
    if (z == 0.0) return {p.beta == 1.0 ? 1.0 : rgamma(p.beta), MLMethod::exact, 1, 1.0};
    if (p.alpha == 1.0 && p.one_parameter()) return {std::exp(z), MLMethod::exact, 1, 1.0};
    if (std::abs(z) <= cfg.z_series) {
        try {
            MLResult r = ml_series(p, z, cfg.tol, cfg.max_terms);
            if (r.cancellation < cfg.cancellation_threshold) return r;
        } catch (const ConvergenceError&) {
        } catch (const OverflowError&) {
        }
    }
    if (p.alpha < 1.0) {
        if (p.one_parameter()) return ml_integral(p.alpha, z, 1.0, cfg.quad, cfg.stable);
        const double delta = p.gamma - 1.0;
        if (delta >= 0.0 && std::abs(p.beta - (1.0 + p.alpha * delta)) < 1e-14)
            return prabhakar_integral(p.alpha, delta, z, cfg.quad, cfg.stable);
    }
    // Last resort: the series regardless of the threshold, if it survives the hard limit.
    return ml_series(p, z, cfg.tol, cfg.max_terms);
}

inline double mittag_leffler(double alpha, double z, const MLConfig& cfg = {}) {
    return ml_eval(MLParams::one(alpha), z, cfg).value;
}

/// |int_0^inf e^(-x) E_alpha(-a x^alpha) dx - 1/(1+a)| for rational alpha.
inline double laplace_identity_residual(RationalAlpha alpha, double a, const QuadSpec& quad = {},
                                        const MLConfig& ml = {}) {
    if (!(std::abs(a) < 1.0)) throw DomainError("laplace_identity_residual: need |a| < 1");
    const double al = alpha.value();
    auto f = [&](double x) {
        const double w = std::exp(-x);
        if (w < 1e-30) return 0.0;
        return w * mittag_leffler(al, -a * std::pow(x, al), ml);
    };
    const QuadResult r = integrate_semi_infinite(f, 0.0, quad);
    return std::abs(r.value - 1.0 / (1.0 + a));
}

struct RLCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
};

namespace detail {

// d/dy E_alpha(b y^alpha) = sum_{r>=1} b^r alpha r y^(alpha r - 1) / Gamma(1 + alpha r)
inline double ml_power_derivative(double alpha, double b, double y) {
    using LD = long double;
    const LD z = static_cast<LD>(b) * std::pow(static_cast<LD>(y), static_cast<LD>(alpha));
    LD sum = 0;
    int small_run = 0;
    for (int r = 1; r < 10'000; ++r) {
        const LD term = static_cast<LD>(alpha) * r * std::pow(z, static_cast<LD>(r)) /
                        std::tgamma(1.0L + static_cast<LD>(alpha) * r);
        sum += term;
        if (std::abs(term) <= 1e-17L * std::abs(sum)) {
            if (++small_run >= 2) break;
        } else {
            small_run = 0;
        }
    }
    return static_cast<double>(sum / static_cast<LD>(y));
}

// sum_{r>=1} b^r r s^(r-1) / Gamma(1 + alpha r): the derivative series after y = s^(1/alpha).
inline double ml_power_derivative_s(double alpha, double b, double s) {
    using LD = long double;
    LD sum = 0;
    int small_run = 0;
    for (int r = 1; r < 10'000; ++r) {
        const LD term = std::pow(static_cast<LD>(b), static_cast<LD>(r)) * r *
                        std::pow(static_cast<LD>(s), static_cast<LD>(r - 1)) /
                        std::tgamma(1.0L + static_cast<LD>(alpha) * r);
        sum += term;
        if (term == 0 || std::abs(term) <= 1e-17L * std::abs(sum)) {
            if (++small_run >= 2) break;
        } else {
            small_run = 0;
        }
    }
    return static_cast<double>(sum);
}

}  // namespace detail

/// Both sides of D^alpha E_alpha(b x^alpha) = b E_alpha(b x^alpha) + x^-alpha / Gamma(1-alpha),
/// the Riemann-Liouville derivative taken as x^-alpha/Gamma(1-alpha) plus the Caputo integral.
///
/// The weakly singular Caputo integral is split at x/2: y = s^(1/alpha) removes the
/// y^(alpha-1) cusp on the left half, x - y = w^(1/(1-alpha)) the (x-y)^-alpha weight on the right.
inline RLCheck rl_derivative_check(double alpha, double b, double x, const QuadSpec& quad = {}) {
    detail::check_alpha_open(alpha, "rl_derivative_residual");
    if (!(x > 0.0)) throw DomainError("rl_derivative_residual: x must be positive");
    const double g = rgamma(1.0 - alpha);
    const double boundary = std::pow(x, -alpha) * g;
    const double half = 0.5 * x;

    auto left = [&](double s) {
        const double y = std::pow(s, 1.0 / alpha);
        return std::pow(x - y, -alpha) * detail::ml_power_derivative_s(alpha, b, s);
    };
    auto right = [&](double w) {
        const double y = x - std::pow(w, 1.0 / (1.0 - alpha));
        return detail::ml_power_derivative(alpha, b, y) / (1.0 - alpha);
    };
    double caputo = 0.0;
    if (b != 0.0) {
        caputo = integrate_finite(left, 0.0, std::pow(half, alpha), quad).value +
                 integrate_finite(right, 0.0, std::pow(half, 1.0 - alpha), quad).value;
    }
    RLCheck out;
    out.lhs = boundary + g * caputo;
    out.rhs = b * ml_series(MLParams::one(alpha), b * std::pow(x, alpha)).value + boundary;
    out.residual = std::abs(out.lhs - out.rhs);
    return out;
}

inline double rl_derivative_residual(double alpha, double b, double x, const QuadSpec& quad = {}) {
    return rl_derivative_check(alpha, b, x, quad).residual;
}

}  // namespace fracml
