#pragma once

// One-sided Levy stable law with Laplace transform exp(-p^alpha), 0 < alpha < 1:
// density Phi_alpha, Stieltjes moments, the subordination kernel n_alpha and a
// seeded sampler.
//
// Kernel convention: kernel_n(alpha, y, x) takes the integration variable
// first and the time-like scale second,
//     n_alpha(y, x) = x / (alpha y^(1+1/alpha)) Phi_alpha(x / y^(1/alpha)),
// so that as a function of y it is the density of x^alpha S^(-alpha), S ~ Phi_alpha.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fracml/error.hpp"
#include "fracml/quadrature.hpp"
#include "fracml/specfun.hpp"

namespace fracml {

struct StableConfig {
    double regime_switch = 1.0;  ///< u at or above which the Pollard series is tried first
    int k_max = 12;              ///< largest denominator served by the hypergeometric form
    /// Largest tolerated max|term|/|sum| in the long double hypergeometric sums.
    double rational_cancellation_limit = 1e7;
};

/// alpha = l/k in lowest terms with 0 < l < k <= k_max.
struct RationalAlpha {
    int l = 1;
    int k = 2;

    static RationalAlpha make(int l, int k, int k_max = 12) {
        if (l <= 0 || k <= 0 || l >= k) throw DomainError("RationalAlpha: need 0 < l < k");
        if (std::gcd(l, k) != 1) throw DomainError("RationalAlpha: l/k must be in lowest terms");
        if (k > k_max) throw DomainError("RationalAlpha: denominator exceeds k_max");
        return {l, k};
    }

    /// Best rational match with denominator <= k_max, if alpha is one to 1e-12.
    static std::optional<RationalAlpha> from_double(double alpha, int k_max = 12) {
        for (int k = 2; k <= k_max; ++k) {
            const long l = std::lround(alpha * k);
            if (l > 0 && l < k && std::gcd(static_cast<int>(l), k) == 1 &&
                std::abs(alpha - static_cast<double>(l) / k) < 1e-12)
                return RationalAlpha{static_cast<int>(l), k};
        }
        return std::nullopt;
    }

    double value() const { return static_cast<double>(l) / static_cast<double>(k); }
};

enum class PhiMethod { rational, series, integral };

inline const char* to_string(PhiMethod m) {
    switch (m) {
        case PhiMethod::rational: return "rational";
        case PhiMethod::series: return "series";
        case PhiMethod::integral: return "integral";
    }
    return "?";
}

struct PhiEval {
    double value = 0.0;
    PhiMethod method = PhiMethod::rational;
    double cancellation = 1.0;  ///< max|term| / |sum| of the underlying series (1 for the integral)
    std::size_t terms = 0;
    bool clamped = false;        ///< negative round-off was clamped to 0
};

/// Number of negative round-off values clamped to zero so far (diagnostics only).
inline std::atomic<std::uint64_t>& phi_clamp_count() {
    static std::atomic<std::uint64_t> count{0};
    return count;
}

namespace detail {

inline void check_alpha_open(double alpha, const char* who) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError(std::string(who) + ": alpha must lie in (0,1)");
}

inline PhiEval clamp_phi(PhiEval e) {
    if (e.value < 0.0) {
        e.value = 0.0;
        e.clamped = true;
        phi_clamp_count().fetch_add(1, std::memory_order_relaxed);
    }
    return e;
}

// Sum of the k-1 hypergeometric terms of the finite representation, in long double.
inline PhiEval phi_rational_raw(RationalAlpha a, double u) {
    using LD = long double;
    const int l = a.l;
    const int k = a.k;
    const LD alpha = static_cast<LD>(l) / static_cast<LD>(k);
    const LD lu = std::log(static_cast<LD>(u));
    // (-1)^(k-l) l^l / (k^k u^l)
    const LD zlog = static_cast<LD>(l) * std::log(static_cast<LD>(l)) - static_cast<LD>(k) * std::log(static_cast<LD>(k)) -
                    static_cast<LD>(l) * lu;
    const LD z = (((k - l) % 2 == 0) ? 1.0L : -1.0L) * std::exp(zlog);

    PhiEval out;
    out.method = PhiMethod::rational;
    LD sum = 0;
    LD scale = 0;
    for (int j = 1; j < k; ++j) {
        HypArgsT<LD> args;
        args.upper.push_back(1.0L);
        for (int i = 0; i < l; ++i) args.upper.push_back((1.0L + j * alpha + i) / static_cast<LD>(l));
        for (int i = 0; i < k; ++i) args.lower.push_back((1.0L + j + i) / static_cast<LD>(k));
        args.z = z;
        HypResult<LD> h;
        try {
            h = hyp_pfq<LD>(args, 20'000, 1e-18L);
        } catch (const Error&) {
            out.value = 0.0;
            out.cancellation = std::numeric_limits<double>::infinity();
            return out;
        }
        // (-1)^j u^(-1-j l/k) / (j! Gamma(-j l/k))
        int sg = 1;
        const LD lg = lgamma_signed<LD>(-j * alpha, sg);
        const LD lfact = std::lgamma(static_cast<LD>(j + 1));
        const LD mag = std::exp(-(1.0L + j * alpha) * lu - lg - lfact);
        const LD pre = ((j % 2 == 0) ? 1.0L : -1.0L) * sg * mag;
        sum += pre * h.value;
        scale += std::abs(pre) * h.max_abs_term;
        out.terms += h.terms;
    }
    out.value = static_cast<double>(sum);
    out.cancellation = sum == 0 ? std::numeric_limits<double>::infinity() : static_cast<double>(scale / std::abs(sum));
    return out;
}

// ln A(theta) for the Kanter / Zolotarev angular function
// A(theta) = sin(alpha theta)^(alpha/(1-alpha)) sin((1-alpha) theta) / sin(theta)^(1/(1-alpha)).
inline double kanter_log_a(double alpha, double theta) {
    const double b = 1.0 - alpha;
    return (alpha / b) * std::log(std::sin(alpha * theta)) + std::log(std::sin(b * theta)) -
           std::log(std::sin(theta)) / b;
}

// lim_{theta -> 0} A(theta)
inline double kanter_a0(double alpha) {
    return std::pow(alpha, alpha / (1.0 - alpha)) * (1.0 - alpha);
}

}  // namespace detail

/// Phi_{l/k}(u) from the finite sum of k-1 generalized hypergeometric functions.
///
/// Each term is summed in long double. Throws ConvergenceError when the
/// cancellation between terms would leave fewer than ~12 significant digits.
inline PhiEval phi_rational(RationalAlpha alpha, double u, const StableConfig& cfg = {}) {
    if (!(u > 0.0)) throw DomainError("phi_rational: u must be positive");
    if (alpha.k > cfg.k_max) throw DomainError("phi_rational: denominator exceeds k_max");
    PhiEval e = detail::phi_rational_raw(alpha, u);
    if (!(e.cancellation < cfg.rational_cancellation_limit))
        throw ConvergenceError("phi_rational: cancellation " + std::to_string(e.cancellation) + " at u=" +
                                   std::to_string(u),
                               e.value, e.terms);
    return detail::clamp_phi(e);
}

/// Pollard series sum_{r>=1} (-1)^(r+1) Gamma(1+alpha r) sin(pi alpha r) u^(-1-alpha r) / (pi r!).
///
/// Converges for every u > 0 but cancels badly for small u; the stopping test
/// uses the term envelope so that the zeros of sin(pi alpha r) do not stop it early.
inline PhiEval phi_series(double alpha, double u, std::size_t max_terms = 10'000, double tol = 1e-15,
                          double cancellation_limit = 1e10) {
    detail::check_alpha_open(alpha, "phi_series");
    if (!(u > 0.0)) throw DomainError("phi_series: u must be positive");
    using LD = long double;
    const LD a = alpha;
    const LD lu = std::log(static_cast<LD>(u));
    LD sum = 0;
    LD max_term = 0;
    int small_run = 0;
    PhiEval out;
    out.method = PhiMethod::series;
    for (std::size_t r = 1; r <= max_terms; ++r) {
        const LD ar = a * static_cast<LD>(r);
        const LD log_env = std::lgamma(1.0L + ar) - std::lgamma(static_cast<LD>(r) + 1.0L) - (1.0L + ar) * lu;
        const LD env = std::exp(log_env) / std::numbers::pi_v<LD>;
        const LD phase = ar - 2.0L * std::floor(ar / 2.0L);
        const LD term = ((r % 2 == 1) ? 1.0L : -1.0L) * env * std::sin(std::numbers::pi_v<LD> * phase);
        sum += term;
        max_term = std::max(max_term, std::abs(term));
        out.terms = r;
        if (env <= static_cast<LD>(tol) * std::abs(sum)) {
            if (++small_run >= 2) {
                out.value = static_cast<double>(sum);
                out.cancellation = sum == 0 ? std::numeric_limits<double>::infinity()
                                            : static_cast<double>(max_term / std::abs(sum));
                if (!(out.cancellation < cancellation_limit))
                    throw ConvergenceError("phi_series: cancellation too severe at u=" + std::to_string(u),
                                           out.value, out.terms);
                return detail::clamp_phi(out);
            }
        } else {
            small_run = 0;
        }
        if (!std::isfinite(static_cast<double>(sum)))
            throw ConvergenceError("phi_series: partial sums overflow at u=" + std::to_string(u), 0.0, r);
    }
    throw ConvergenceError("phi_series: no convergence within " + std::to_string(max_terms) + " terms",
                           static_cast<double>(sum), max_terms);
}

/// Phi_alpha(u) from the Kanter / Zolotarev integral over the angle,
///     Phi(u) = alpha / ((1-alpha) pi u) int_0^pi w e^(-w) dtheta,  w = A(theta) u^(-alpha/(1-alpha)).
/// Valid for every u > 0 and every alpha in (0,1).
inline PhiEval phi_integral(double alpha, double u, double rel_tol = 1e-11) {
    detail::check_alpha_open(alpha, "phi_integral");
    if (!(u > 0.0)) throw DomainError("phi_integral: u must be positive");
    const double b = 1.0 - alpha;
    const double log_c = -(alpha / b) * std::log(u);
    auto log_w = [&](double th) { return log_c + detail::kanter_log_a(alpha, th); };
    PhiEval out;
    out.method = PhiMethod::integral;
    out.cancellation = 1.0;
    const double log_w0 = log_c + std::log(detail::kanter_a0(alpha));
    constexpr double log_wmax = 6.6;  // w = 735: e^(-w) at the edge of double range
    if (log_w0 > log_wmax) return out;  // Phi underflows

    // A(theta) increases from A0 to infinity; locate the angle where ln w reaches `level`.
    auto solve_angle = [&](double level) {
        double lo = 0.0, hi = std::numbers::pi;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::numbers::pi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (log_w(mid) < level) lo = mid; else hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    const double theta_max = solve_angle(log_wmax);
    std::vector<double> cuts;
    for (double level : {std::log(1e-3), 0.0, std::log(30.0)})
        if (level > log_w0) cuts.push_back(solve_angle(level));

    auto integrand = [&](double th) {
        const double lw = log_w(th);
        const double w = std::exp(lw);
        return std::exp(lw - w);
    };
    QuadSpec qs;
    qs.abs_tol = 1e-300;
    qs.rel_tol = rel_tol;
    qs.max_subdivisions = 4000;
    const auto r = integrate_finite(integrand, 0.0, theta_max, qs, cuts);
    out.value = alpha / (b * std::numbers::pi * u) * r.value;
    out.terms = r.evaluations;
    return out;
}

/// Phi_alpha(u) with automatic representation choice: the Pollard series for
/// u >= regime_switch, the hypergeometric form for rational alpha below it
/// while its cancellation is acceptable, and the angular integral otherwise.
inline PhiEval phi(double alpha, double u, const StableConfig& cfg = {}) {
    detail::check_alpha_open(alpha, "phi");
    if (!(u > 0.0)) throw DomainError("phi: u must be positive");
    if (u >= cfg.regime_switch) {
        try {
            return phi_series(alpha, u, 10'000, 1e-15, 1e6);
        } catch (const ConvergenceError&) {
        }
    }
    if (auto ra = RationalAlpha::from_double(alpha, cfg.k_max)) {
        PhiEval e = detail::phi_rational_raw(*ra, u);
        if (e.cancellation < cfg.rational_cancellation_limit) return detail::clamp_phi(e);
    }
    return detail::clamp_phi(phi_integral(alpha, u));
}

/// Fractional moment M_alpha(sigma) = Gamma(1 - sigma/alpha) / Gamma(1 - sigma); infinite for sigma >= alpha.
struct StieltjesMoment {
    double order = 0.0;
    double alpha = 0.5;
    bool finite = true;
    double value = 1.0;  ///< +inf when !finite
};

inline StieltjesMoment stieltjes_moment(double alpha, double sigma) {
    detail::check_alpha_open(alpha, "stieltjes_moment");
    StieltjesMoment m{sigma, alpha, true, 1.0};
    if (sigma >= alpha) {
        m.finite = false;
        m.value = std::numeric_limits<double>::infinity();
        return m;
    }
    const double top = 1.0 - sigma / alpha;
    const double bottom = 1.0 - sigma;
    if (top < 171.0 && bottom < 171.0) {
        m.value = std::tgamma(top) / std::tgamma(bottom);
    } else {
        int s1 = 1, s2 = 1;
        m.value = std::exp(detail::lgamma_signed(top, s1) - detail::lgamma_signed(bottom, s2));
    }
    return m;
}

/// Subordination kernel n_alpha(y, x); see the header comment for the convention.
inline double kernel_n(double alpha, double y, double x, const StableConfig& cfg = {}) {
    detail::check_alpha_open(alpha, "kernel_n");
    if (!(y > 0.0) || !(x > 0.0)) throw DomainError("kernel_n: arguments must be positive");
    const double log_u = std::log(x) - std::log(y) / alpha;
    if (log_u > 230.0) {
        // u beyond double range: n tends to x^-alpha / Gamma(1-alpha) as y -> 0.
        return std::pow(x, -alpha) * rgamma(1.0 - alpha);
    }
    const double u = std::exp(log_u);
    const double p = phi(alpha, u, cfg).value;
    if (p == 0.0) return 0.0;
    return std::exp(log_u - std::log(alpha) - std::log(y) + std::log(p));
}

/// n_{1/2}(xi, kappa) = exp(-xi^2 / (4 kappa)) / sqrt(pi kappa), the Gauss-Weierstrass kernel up to 1/2.
inline double kernel_half_closed(double xi, double kappa) {
    if (!(kappa > 0.0)) throw DomainError("kernel_half_closed: kappa must be positive");
    return std::exp(-xi * xi / (4.0 * kappa)) / std::sqrt(std::numbers::pi * kappa);
}

/// P(Y > cutoff) < e^-log_eps for Y = t^alpha S^-alpha; from CDF(u) <= exp(-A0 u^(-alpha/(1-alpha))).
inline double kernel_tail_cutoff(double alpha, double t, double log_eps = 40.0) {
    return std::pow(t, alpha) * std::pow(log_eps / detail::kanter_a0(alpha), 1.0 - alpha);
}

/// int_0^inf kernel(y) g(y) dy for a kernel with the law of n_alpha(., t): the cutoff is
/// placed by the stretched-exponential tail bound and extended while the integrand at
/// the cutoff is still significant. extra_cuts marks features of g (narrow bumps).
template <typename K, typename G>
QuadResult subordinate_with(double alpha, double t, K&& kernel, G&& g, const QuadSpec& quad = {},
                            std::span<const double> extra_cuts = {}) {
    detail::check_alpha_open(alpha, "subordinate");
    if (!(t > 0.0)) throw DomainError("subordinate: t must be positive");
    auto integrand = [&](double y) {
        const double n = kernel(y);
        return n == 0.0 ? 0.0 : n * g(y);
    };
    double cutoff = kernel_tail_cutoff(alpha, t);
    const double scale = std::pow(t, alpha);
    std::vector<double> cuts(extra_cuts.begin(), extra_cuts.end());
    for (double f : {0.25, 0.5, 1.0, 1.5, 2.0, 4.0}) cuts.push_back(f * scale);
    QuadResult total = integrate_finite(integrand, 0.0, cutoff, quad, cuts);
    for (int grow = 0; grow < 60; ++grow) {
        const double edge = std::abs(integrand(cutoff)) * cutoff;
        if (edge <= 0.01 * quad.target(total.value)) return total;
        const double next = 2.0 * cutoff;
        const QuadResult piece = integrate_finite(integrand, cutoff, next, quad, cuts);
        total.value += piece.value;
        total.err_est += piece.err_est;
        total.evaluations += piece.evaluations;
        total.subdivisions += piece.subdivisions;
        cutoff = next;
    }
    throw DivergenceError("subordinate: integrand does not decay under the kernel tail",
                          total.value, std::numeric_limits<double>::infinity());
}

/// int_0^inf n_alpha(y, t) g(y) dy.
template <typename G>
QuadResult subordinate(double alpha, double t, G&& g, const QuadSpec& quad = {}, const StableConfig& cfg = {},
                       std::span<const double> extra_cuts = {}) {
    detail::check_alpha_open(alpha, "subordinate");
    auto kernel = [&](double y) { return kernel_n(alpha, y, t, cfg); };
    return subordinate_with(alpha, t, kernel, std::forward<G>(g), quad, extra_cuts);
}

/// n_alpha(., t) memoized by node. Adaptive quadratures that start from the same
/// partition revisit the same nodes, so one table serves a whole grid of x values.
/// Not safe for concurrent use; give each thread its own.
class KernelTable {
public:
    KernelTable(double alpha, double t, const StableConfig& cfg = {}) : alpha_(alpha), t_(t), cfg_(cfg) {
        detail::check_alpha_open(alpha, "KernelTable");
        if (!(t > 0.0)) throw DomainError("KernelTable: t must be positive");
    }

    double operator()(double y) {
        if (auto it = memo_.find(y); it != memo_.end()) return it->second;
        if (memo_.size() > 4'000'000) memo_.clear();
        const double v = kernel_n(alpha_, y, t_, cfg_);
        memo_.emplace(y, v);
        return v;
    }

    double alpha() const { return alpha_; }
    double t() const { return t_; }
    std::size_t size() const { return memo_.size(); }

private:
    double alpha_;
    double t_;
    StableConfig cfg_;
    std::unordered_map<double, double> memo_;
};

namespace detail {

// Uniform on (0,1) from 53 random bits; exact ends excluded.
inline double open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

/// n i.i.d. draws from the one-sided stable law with Laplace transform exp(-p^alpha)
/// (Kanter's construction). Deterministic for a given seed; parallel callers must use
/// distinct seeds.
inline std::vector<double> sample_levy(double alpha, std::size_t n, std::uint64_t seed) {
    detail::check_alpha_open(alpha, "sample_levy");
    if (n == 0) throw DomainError("sample_levy: n must be >= 1");
    std::mt19937_64 gen(seed);
    std::vector<double> out(n);
    const double expo = (1.0 - alpha) / alpha;
    for (auto& x : out) {
        const double theta = std::numbers::pi * detail::open_unit(gen());
        const double w = -std::log(detail::open_unit(gen()));
        x = std::exp(expo * (detail::kanter_log_a(alpha, theta) - std::log(w)));
    }
    return out;
}

}  // namespace fracml
