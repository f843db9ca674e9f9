#pragma once

// Adaptive Gauss-Kronrod (7/15) integration on finite and semi-infinite
// intervals. Integrands with an essential singularity at the left endpoint are
// handled by plain bisection toward it: the interior nodes never touch the
// endpoint and the integrand vanishes faster than any power there.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fracml/error.hpp"

namespace fracml {

struct QuadSpec {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    std::size_t max_subdivisions = 2000;
    double split_point = 1.0;  ///< finite/tail boundary for semi-infinite domains

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw DomainError("QuadSpec: tolerances must be positive");
        if (max_subdivisions < 1) throw DomainError("QuadSpec: max_subdivisions must be >= 1");
        if (!(split_point > 0.0)) throw DomainError("QuadSpec: split_point must be positive");
    }

    double target(double value) const { return std::max(abs_tol, rel_tol * std::abs(value)); }
};

struct QuadResult {
    double value = 0.0;
    double err_est = 0.0;
    std::size_t evaluations = 0;
    std::size_t subdivisions = 0;
};

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> gk15_xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk15_wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk15_wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, err;
    bool refinable;
};

template <typename F>
Panel gk15(F& f, double a, double b) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double resg = fc * gk15_wg[3];
    double resk = fc * gk15_wgk[7];
    double resabs = std::abs(resk);
    std::array<double, 7> fv1{}, fv2{};
    for (int j = 0; j < 3; ++j) {
        const int jtw = 2 * j + 1;
        const double dx = half * gk15_xgk[jtw];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        resg += gk15_wg[j] * (f1 + f2);
        resk += gk15_wgk[jtw] * (f1 + f2);
        resabs += gk15_wgk[jtw] * (std::abs(f1) + std::abs(f2));
    }
    for (int j = 0; j < 4; ++j) {
        const int jtwm1 = 2 * j;
        const double dx = half * gk15_xgk[jtwm1];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk += gk15_wgk[jtwm1] * (f1 + f2);
        resabs += gk15_wgk[jtwm1] * (std::abs(f1) + std::abs(f2));
    }
    const double reskh = resk * 0.5;
    double resasc = gk15_wgk[7] * std::abs(fc - reskh);
    for (int j = 0; j < 7; ++j)
        resasc += gk15_wgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));

    const double result = resk * half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(50.0 * eps * resabs, err);

    if (!std::isfinite(result) || std::isnan(err))
        throw QuadratureError("integrand returned a non-finite value on [" + std::to_string(a) + ", " +
                                  std::to_string(b) + "]",
                              std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity());
    const double mid = center;
    const bool refinable = mid > a && mid < b && (b - a) > 64.0 * eps * std::max(std::abs(a), std::abs(b));
    return {a, b, result, err, refinable};
}

}  // namespace detail

/// Globally adaptive integral of f over [a, b]; optional interior breakpoints
/// seed the initial partition (kernel peaks, cusps).
template <typename F>
QuadResult integrate_finite(F&& f, double a, double b, const QuadSpec& spec = {},
                            std::span<const double> breakpoints = {}) {
    spec.validate();
    if (!(a < b)) {
        if (a == b) return {};
        throw DomainError("integrate_finite: need a < b");
    }
    std::vector<double> cuts{a};
    for (double p : breakpoints)
        if (p > a && p < b) cuts.push_back(p);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto worse = [](const detail::Panel& l, const detail::Panel& r) { return l.err < r.err; };
    std::vector<detail::Panel> heap;   // refinable panels, max-heap on err
    std::vector<detail::Panel> frozen; // panels that cannot be bisected further
    QuadResult out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto p = detail::gk15(f, cuts[i], cuts[i + 1]);
        out.evaluations += 15;
        (p.refinable ? heap : frozen).push_back(p);
    }
    std::make_heap(heap.begin(), heap.end(), worse);

    auto totals = [&] {
        double v = 0.0, e = 0.0;
        for (const auto& p : heap) { v += p.value; e += p.err; }
        for (const auto& p : frozen) { v += p.value; e += p.err; }
        return std::pair{v, e};
    };

    auto [value, err] = totals();
    while (err > spec.target(value)) {
        if (heap.empty() || out.subdivisions >= spec.max_subdivisions) {
            throw QuadratureError("integrate_finite: tolerance not met on [" + std::to_string(a) + ", " +
                                      std::to_string(b) + "] after " + std::to_string(out.subdivisions) +
                                      " subdivisions (err " + std::to_string(err) + ")",
                                  value, err);
        }
        std::pop_heap(heap.begin(), heap.end(), worse);
        const detail::Panel worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        value -= worst.value;
        err -= worst.err;
        for (auto p : {detail::gk15(f, worst.a, mid), detail::gk15(f, mid, worst.b)}) {
            out.evaluations += 15;
            value += p.value;
            err += p.err;
            if (p.refinable) {
                heap.push_back(p);
                std::push_heap(heap.begin(), heap.end(), worse);
            } else {
                frozen.push_back(p);
            }
        }
        ++out.subdivisions;
        // The running sums drift; resynchronize periodically and before accepting.
        if (out.subdivisions % 64 == 0 || err <= spec.target(value)) std::tie(value, err) = totals();
    }
    out.value = value;
    out.err_est = err;
    return out;
}

/// Integral of f over [a, inf). The range is split at spec.split_point (or
/// a + split_point when a already lies beyond it); the tail is mapped by
/// u = b/s^2 onto (0,1), so an algebraic decay u^(-1-p) becomes s^(2p-1) with
/// its singularity at s = 0, where bisection keeps full relative resolution.
/// If the tail fails, successive doublings of a finite cutoff decide between
/// slow convergence and divergence.
template <typename F>
QuadResult integrate_semi_infinite(F&& f, double a, const QuadSpec& spec = {}) {
    spec.validate();
    if (!(a >= 0.0)) throw DomainError("integrate_semi_infinite: need a >= 0");
    const double b = a < spec.split_point ? spec.split_point : a + spec.split_point;

    QuadResult head = integrate_finite(f, a, b, spec);
    bool overflowed = false;
    auto mapped = [&](double s) {
        const double u = b / (s * s);
        if (!std::isfinite(u)) {
            overflowed = true;
            return 0.0;
        }
        const double fu = f(u);
        return fu == 0.0 ? 0.0 : 2.0 * (u * fu) / s;
    };
    try {
        QuadResult tail = integrate_finite(mapped, 0.0, 1.0, spec);
        // A non-integrable tail can still fool the error estimate; u f(u) must not grow.
        const double near = std::abs(mapped(1e-4)) * 1e-4, far = std::abs(mapped(1e-8)) * 1e-8;
        if (far > 0.0 && far >= near)
            throw QuadratureError("integrate_semi_infinite: u f(u) does not decay", tail.value,
                                  std::numeric_limits<double>::infinity());
        // Refinement that reaches u = inf means the tail did not settle before the cutoff.
        if (overflowed)
            throw QuadratureError("integrate_semi_infinite: tail refinement reached the overflow threshold", tail.value,
                                  std::numeric_limits<double>::infinity());
        QuadResult out;
        out.value = head.value + tail.value;
        out.err_est = head.err_est + tail.err_est;
        out.evaluations = head.evaluations + tail.evaluations;
        out.subdivisions = head.subdivisions + tail.subdivisions;
        return out;
    } catch (const QuadratureError& tail_failure) {
        // Divergence detection: grow a finite cutoff by doubling and watch the increments.
        double cutoff = b;
        double total = head.value;
        double last_increment = 0.0;
        int growing = 0;
        for (int k = 0; k < 60; ++k) {
            const double next = b + spec.split_point * std::ldexp(1.0, k + 1);
            QuadSpec piece = spec;
            double inc = 0.0;
            try {
                inc = integrate_finite(f, cutoff, next, piece).value;
            } catch (const QuadratureError& e) {
                inc = e.best_value();
            }
            total += inc;
            cutoff = next;
            const bool large = std::abs(inc) > 10.0 * spec.rel_tol * std::abs(total);
            if (large && std::abs(inc) >= std::abs(last_increment)) {
                if (++growing >= 3)
                    throw DivergenceError("integrate_semi_infinite: integral diverges (tail increments grow)",
                                          std::numeric_limits<double>::infinity(),
                                          std::numeric_limits<double>::infinity());
            } else {
                growing = 0;
            }
            if (!large) {
                QuadResult out;
                out.value = total;
                out.err_est = std::abs(inc);
                return out;
            }
            last_increment = inc;
        }
        throw QuadratureError(std::string("integrate_semi_infinite: tail nonconvergence: ") + tail_failure.what(),
                              head.value + tail_failure.best_value(),
                              head.err_est + tail_failure.error_estimate());
    }
}

}  // namespace fracml
