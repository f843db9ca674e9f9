#pragma once

// Fokker-Planck solutions. Ordinary solutions F1(x, tau) come from closed-form
// kernels for each operator; fractional solutions are
//     F_alpha(x, t) = int_0^inf n_alpha(y, t) F1(x, y) dy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fracml/error.hpp"
#include "fracml/quadrature.hpp"
#include "fracml/specfun.hpp"
#include "fracml/stable.hpp"

namespace fracml {

// ---- operators ------------------------------------------------------------

/// d^2/dx^2
struct Diffusion {};

/// q(x) d/dx + v(x). When `flow` is set it returns the closed-form pair (T(x, tau), g(x, tau));
/// otherwise the characteristic equations are integrated numerically.
struct DriftReaction {
    std::function<double(double)> q;
    std::function<double(double)> v;
    std::function<std::pair<double, double>(double, double)> flow;
};

/// x d/dx (Euler dilation)
struct Dilation {};

/// a d^2/dx^2 - b d/dx x, a, b > 0
struct DiffusionDamping {
    double a = 1.0;
    double b = 1.0;
};

/// (x d/dx)^2 - 1
struct SquaredDilation {};

enum class SqueezeKernel { exact, approximate };

/// (1/2) d^2/dx^2 - (1/2) x^2. The approximate kernel replaces tanh(tau) by tau and
/// sech(tau) by 1 while keeping the e^(-tau xi^2/2) weight,
///     F1 ~ int N(x; xi, sqrt(tau)) e^(-tau xi^2/2) f(xi) dxi,
/// which is only trusted for tau <= window. The x^2 term is a sink, so mass is not conserved.
struct Squeeze {
    SqueezeKernel kernel = SqueezeKernel::approximate;
    double window = 0.2;
};

/// -d/dx, so that F1(x, y) = f(x - y)
struct Advection {};

using FPOperator = std::variant<Diffusion, DriftReaction, Dilation, DiffusionDamping, SquaredDilation, Squeeze, Advection>;

inline std::string describe(const FPOperator& op) {
    struct V {
        std::string operator()(const Diffusion&) const { return "diffusion"; }
        std::string operator()(const DriftReaction& d) const { return d.flow ? "drift(closed-flow)" : "drift"; }
        std::string operator()(const Dilation&) const { return "dilation"; }
        std::string operator()(const DiffusionDamping& d) const {
            std::ostringstream s;
            s.precision(17);
            s << "damping(a=" << d.a << ",b=" << d.b << ")";
            return s.str();
        }
        std::string operator()(const SquaredDilation&) const { return "sqdilation"; }
        std::string operator()(const Squeeze& s) const {
            return s.kernel == SqueezeKernel::exact ? "squeeze(exact)" : "squeeze(approximate)";
        }
        std::string operator()(const Advection&) const { return "advection"; }
    };
    return std::visit(V{}, op);
}

/// Operators in divergence form conserve the norm.
inline bool density_preserving(const FPOperator& op) {
    return std::holds_alternative<Diffusion>(op) || std::holds_alternative<DiffusionDamping>(op) ||
           std::holds_alternative<SquaredDilation>(op) || std::holds_alternative<Advection>(op);
}

inline void validate(const FPOperator& op) {
    if (auto* d = std::get_if<DiffusionDamping>(&op)) {
        if (!(d->a > 0.0) || !(d->b > 0.0)) throw DomainError("DiffusionDamping: need a > 0 and b > 0");
    } else if (auto* s = std::get_if<Squeeze>(&op)) {
        if (!(s->window > 0.0)) throw DomainError("Squeeze: window must be positive");
    } else if (auto* r = std::get_if<DriftReaction>(&op)) {
        if (!r->flow && (!r->q || !r->v)) throw DomainError("DriftReaction: need q and v, or a closed flow");
    }
}

// ---- initial conditions ----------------------------------------------------

/// f(x) = F(x, 0) with a finite support hint used to truncate quadratures and
/// optional raw moments sigma^n = int xi^n f(xi) dxi. Moments not supplied are
/// computed by quadrature on first use and cached; copies share the cache.
class InitialCondition {
public:
    InitialCondition(std::function<double(double)> f, double lo = -12.0, double hi = 12.0,
                     std::vector<double> features = {}, std::optional<std::vector<double>> raw_moments = {},
                     std::string label = "custom")
        : f_(std::move(f)), lo_(lo), hi_(hi), features_(std::move(features)), raw_(std::move(raw_moments)),
          label_(std::move(label)), cache_(std::make_shared<Cache>()) {
        if (!f_) throw DomainError("InitialCondition: empty function");
        if (!(lo_ < hi_)) throw DomainError("InitialCondition: support hint needs lo < hi");
    }

    /// Gaussian density with mean mu and standard deviation s; support mu +- 12 s.
    static InitialCondition gauss(double mu, double s) {
        if (!(s > 0.0)) throw DomainError("gauss: standard deviation must be positive");
        auto f = [mu, s](double x) {
            const double z = (x - mu) / s;
            return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
        };
        // E[(mu + s Z)^n] from the recurrence m_n = mu m_{n-1} + (n-1) s^2 m_{n-2}.
        std::vector<double> m{1.0, mu};
        for (int n = 2; n <= 24; ++n) m.push_back(mu * m[n - 1] + (n - 1) * s * s * m[n - 2]);
        std::ostringstream label;
        label.precision(17);
        label << "gauss:" << mu << "," << s;
        return InitialCondition(f, mu - 12.0 * s, mu + 12.0 * s, {mu, mu - s, mu + s}, m, label.str());
    }

    /// Linear interpolation of (xs, ys), zero outside; xs strictly increasing.
    static InitialCondition table(std::vector<double> xs, std::vector<double> ys, std::string label = "table") {
        if (xs.size() < 2 || xs.size() != ys.size()) throw DomainError("table IC: need >= 2 matching points");
        for (std::size_t i = 1; i < xs.size(); ++i)
            if (!(xs[i] > xs[i - 1])) throw DomainError("table IC: abscissae must be strictly increasing");
        auto px = std::make_shared<const std::vector<double>>(std::move(xs));
        auto py = std::make_shared<const std::vector<double>>(std::move(ys));
        auto f = [px, py](double x) {
            const auto& X = *px;
            if (x < X.front() || x > X.back()) return 0.0;
            auto it = std::upper_bound(X.begin(), X.end(), x);
            if (it == X.end()) return (*py).back();
            const std::size_t i = static_cast<std::size_t>(it - X.begin());
            const double w = (x - X[i - 1]) / (X[i] - X[i - 1]);
            return (1.0 - w) * (*py)[i - 1] + w * (*py)[i];
        };
        std::vector<double> feats;
        const std::size_t n = px->size();
        const std::size_t stride = std::max<std::size_t>(1, n / 64);
        for (std::size_t i = 0; i < n; i += stride) feats.push_back((*px)[i]);
        const auto peak = std::max_element(py->begin(), py->end()) - py->begin();
        feats.push_back((*px)[static_cast<std::size_t>(peak)]);
        return InitialCondition(f, px->front(), px->back(), feats, std::nullopt, std::move(label));
    }

    /// Two whitespace- or comma-separated columns xi, f(xi); '#' starts a comment.
    static InitialCondition from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DomainError("cannot open IC file '" + path + "'");
        std::vector<double> xs, ys;
        std::string line;
        while (std::getline(in, line)) {
            if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ls(line);
            double a, b;
            if (!(ls >> a)) continue;
            if (!(ls >> b)) throw DomainError("IC file '" + path + "': expected two columns");
            xs.push_back(a);
            ys.push_back(b);
        }
        return table(std::move(xs), std::move(ys), "file:" + path);
    }

    /// Custom function; the support hint is widened until the mass just outside it is below 1e-10.
    static InitialCondition function(std::function<double(double)> f, double lo = -12.0, double hi = 12.0,
                                     std::vector<double> features = {}, std::string label = "custom") {
        InitialCondition ic(std::move(f), lo, hi, std::move(features), std::nullopt, std::move(label));
        ic.widen_support();
        return ic;
    }

    double operator()(double x) const { return f_(x); }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const std::vector<double>& features() const { return features_; }
    const std::string& label() const { return label_; }

    /// sigma^n: supplied value when available, otherwise quadrature over the support hint.
    double moment(std::size_t n, const QuadSpec& quad = {1e-14, 1e-12, 4000, 1.0}) const {
        if (raw_ && n < raw_->size()) return (*raw_)[n];
        std::lock_guard<std::mutex> lock(cache_->m);
        while (cache_->values.size() <= n) {
            const double k = static_cast<double>(cache_->values.size());
            auto g = [&](double x) { return (k == 0.0 ? 1.0 : std::pow(x, k)) * f_(x); };
            cache_->values.push_back(integrate_finite(g, lo_, hi_, quad, features_).value);
        }
        return cache_->values[n];
    }

    void widen_support() {
        for (int i = 0; i < 30; ++i) {
            const double w = hi_ - lo_;
            auto af = [&](double x) { return std::abs(f_(x)); };
            QuadSpec qs{1e-14, 1e-6, 500, 1.0};
            double left = 0.0, right = 0.0;
            try {
                left = integrate_finite(af, lo_ - w, lo_, qs).value;
                right = integrate_finite(af, hi_, hi_ + w, qs).value;
            } catch (const QuadratureError& e) {
                left = right = std::abs(e.best_value());
            }
            if (left <= 1e-10 && right <= 1e-10) return;
            if (left > 1e-10) lo_ -= w;
            if (right > 1e-10) hi_ += w;
        }
        throw DomainError("InitialCondition: support hint does not converge; f may not be integrable");
    }

private:
    struct Cache {
        std::mutex m;
        std::vector<double> values;
    };
    std::function<double(double)> f_;
    double lo_;
    double hi_;
    std::vector<double> features_;
    std::optional<std::vector<double>> raw_;
    std::string label_;
    std::shared_ptr<Cache> cache_;
};

// ---- characteristic flow ----------------------------------------------------

struct FlowResult {
    double T = 0.0;
    double g = 1.0;
    std::size_t steps = 0;
};

/// dT/dtau = q(T), T(0) = x; dg/dtau = v(T) g, g(0) = 1. Classical RK4 with the step
/// count doubled until two successive solutions agree to 1e-12 relative.
inline FlowResult flow_integrate(const std::function<double(double)>& q, const std::function<double(double)>& v,
                                 double x, double tau, std::size_t steps = 16) {
    if (steps < 1) throw DomainError("flow_integrate: steps must be >= 1");
    constexpr double guard = 1e150;
    auto run = [&](std::size_t n) {
        const double h = tau / static_cast<double>(n);
        double T = x;
        double lg = 0.0;  // ln g
        for (std::size_t i = 0; i < n; ++i) {
            const double k1 = q(T), l1 = v(T);
            const double k2 = q(T + 0.5 * h * k1), l2 = v(T + 0.5 * h * k1);
            const double k3 = q(T + 0.5 * h * k2), l3 = v(T + 0.5 * h * k2);
            const double k4 = q(T + h * k3), l4 = v(T + h * k3);
            T += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            lg += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
            if (!std::isfinite(T) || std::abs(T) > guard || lg > 700.0)
                throw OverflowError("flow_integrate: trajectory blew up before tau=" + std::to_string(tau));
        }
        return std::pair{T, lg};
    };
    if (tau == 0.0) return {x, 1.0, 0};
    auto prev = run(steps);
    for (std::size_t n = 2 * steps; n <= (steps << 16); n *= 2) {
        auto cur = run(n);
        const bool tok = std::abs(cur.first - prev.first) <= 1e-12 * std::max(1.0, std::abs(cur.first));
        const bool gok = std::abs(cur.second - prev.second) <= 1e-12 * std::max(1.0, std::abs(cur.second));
        if (tok && gok) return {cur.first, std::exp(cur.second), n};
        prev = cur;
    }
    throw ConvergenceError("flow_integrate: step halving did not settle", prev.first, steps << 16);
}

// ---- ordinary solutions -------------------------------------------------------

inline constexpr double tau_min = 1e-8;

namespace detail {

inline QuadSpec inner_spec(const QuadSpec& q) {
    QuadSpec s = q;
    s.abs_tol = q.abs_tol * 1e-2;
    // The 15-point rule bottoms out near 50 eps; tightening past that only exhausts the budget.
    s.rel_tol = std::max(q.rel_tol * 1e-1, std::min(q.rel_tol, 1e-13));
    return s;
}

// Gaussian weights are cut only where they underflow: high moments of a slice draw on
// F1 values far out in the tails, which must keep their relative accuracy.
inline constexpr double gauss_reach = 38.0;

// int N(xi; center, sd) f(xi) dxi over the support hint.
/// int N(xi; center, sd) e^(-damp xi^2/2) f(xi) dxi
inline double gaussian_smooth(const InitialCondition& ic, double center, double sd, const QuadSpec& quad,
                              double damp = 0.0) {
    constexpr double reach = gauss_reach;
    const double a = std::max(ic.lo(), center - reach * sd);
    const double b = std::min(ic.hi(), center + reach * sd);
    if (!(a < b)) return 0.0;
    const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
    auto g = [&](double xi) {
        const double z = (xi - center) / sd;
        return norm * std::exp(-0.5 * (z * z + damp * xi * xi)) * ic(xi);
    };
    std::vector<double> cuts{center, center - sd, center + sd, center - 3.0 * sd, center + 3.0 * sd};
    for (double c : ic.features()) cuts.push_back(c);
    return integrate_finite(g, a, b, quad, cuts).value;
}

// e^-tau int e^(-u^2/(4 tau)) f(x e^-u) du / (2 sqrt(pi tau)), restricted to the u for which
// x e^-u lies inside the support hint.
inline double squared_dilation_kernel(const InitialCondition& ic, double x, double tau, const QuadSpec& quad) {
    if (x == 0.0) return std::exp(-tau) * ic(0.0);
    const double sd = std::sqrt(2.0 * tau);
    constexpr double reach = gauss_reach;
    // m = xi / x = e^-u ranges over the support divided by x, positive part only.
    double mlo = x > 0.0 ? ic.lo() / x : ic.hi() / x;
    double mhi = x > 0.0 ? ic.hi() / x : ic.lo() / x;
    if (!(mhi > 0.0)) return 0.0;
    double ua = -reach * sd, ub = reach * sd;
    ua = std::max(ua, -std::log(mhi));
    if (mlo > 0.0) ub = std::min(ub, -std::log(mlo));
    if (!(ua < ub)) return 0.0;
    const double norm = std::exp(-tau) / (sd * std::sqrt(2.0 * std::numbers::pi));
    auto g = [&](double u) {
        const double z = u / sd;
        return norm * std::exp(-0.5 * z * z) * ic(x * std::exp(-u));
    };
    std::vector<double> cuts{0.0, -sd, sd};
    for (double c : ic.features())
        if (c / x > 0.0) cuts.push_back(std::log(x / c));
    return integrate_finite(g, ua, ub, quad, cuts).value;
}

}  // namespace detail

/// F1(x, tau) = e^(tau L) f(x). Below tau_min the action is the identity.
inline double solve_ordinary(const FPOperator& op, const InitialCondition& ic, double x, double tau,
                             const QuadSpec& quad = {}) {
    validate(op);
    if (!(tau >= 0.0)) throw DomainError("solve_ordinary: tau must be >= 0");
    if (auto* s = std::get_if<Squeeze>(&op); s && s->kernel == SqueezeKernel::approximate && tau > s->window)
        throw RegimeError("squeeze: approximate kernel used at tau=" + std::to_string(tau) + " beyond its window " +
                          std::to_string(s->window));
    if (tau < tau_min) return ic(x);
    const QuadSpec inner = detail::inner_spec(quad);
    struct V {
        const InitialCondition& ic;
        double x, tau;
        const QuadSpec& q;
        double operator()(const Diffusion&) const { return detail::gaussian_smooth(ic, x, std::sqrt(2.0 * tau), q); }
        double operator()(const DriftReaction& d) const {
            if (d.flow) {
                const auto [T, g] = d.flow(x, tau);
                return g * ic(T);
            }
            const FlowResult r = flow_integrate(d.q, d.v, x, tau);
            return r.g * ic(r.T);
        }
        double operator()(const Dilation&) const { return ic(x * std::exp(tau)); }
        double operator()(const DiffusionDamping& d) const {
            const double e = std::exp(tau * d.b);
            const double mu = d.a * std::expm1(2.0 * tau * d.b) / (2.0 * d.b);
            return detail::gaussian_smooth(ic, x / e, std::sqrt(2.0 * mu) / e, q) / e;
        }
        double operator()(const SquaredDilation&) const { return detail::squared_dilation_kernel(ic, x, tau, q); }
        double operator()(const Squeeze& s) const {
            if (s.kernel == SqueezeKernel::approximate) return detail::gaussian_smooth(ic, x, std::sqrt(tau), q, tau);
            const double T = std::tanh(tau);
            const double c = 1.0 / std::cosh(tau);  // sqrt(1 - T^2)
            return std::sqrt(c) * std::exp(-0.5 * T * x * x) * detail::gaussian_smooth(ic, c * x, std::sqrt(T), q);
        }
        double operator()(const Advection&) const { return ic(x - tau); }
    };
    return std::visit(V{ic, x, tau, inner}, op);
}

// ---- fractional solutions ---------------------------------------------------------

namespace detail {

// Locations in y where F1(x, y) has a narrow feature inherited from the initial condition.
inline std::vector<double> operator_cuts(const FPOperator& op, const InitialCondition& ic, double x) {
    std::vector<double> cuts;
    for (double c : ic.features()) {
        if (std::holds_alternative<Dilation>(op)) {
            if (x != 0.0 && c / x > 1.0) cuts.push_back(std::log(c / x));
        } else if (auto* d = std::get_if<DiffusionDamping>(&op)) {
            if (c != 0.0 && x / c > 1.0) cuts.push_back(std::log(x / c) / d->b);
        } else if (std::holds_alternative<Advection>(op)) {
            if (x - c > 0.0) cuts.push_back(x - c);
        }
    }
    return cuts;
}

inline void check_fractional_regime(const FPOperator& op, double alpha, double t) {
    if (auto* s = std::get_if<Squeeze>(&op)) {
        const double ta = std::pow(t, alpha);
        if (ta > s->window)
            throw RegimeError("squeeze: t^alpha=" + std::to_string(ta) + " beyond the approximation window " +
                              std::to_string(s->window));
    }
}

template <typename K>
double solve_fractional_impl(const FPOperator& op, double alpha, const InitialCondition& ic, double x, double t,
                             const QuadSpec& quad, K&& kernel) {
    const QuadSpec inner = inner_spec(quad);
    // The fractional squeeze uses the approximate kernel at every operational time.
    FPOperator effective = op;
    if (std::holds_alternative<Squeeze>(op)) effective = Squeeze{SqueezeKernel::approximate,
                                                                 std::numeric_limits<double>::infinity()};
    auto F1 = [&](double y) { return solve_ordinary(effective, ic, x, y, inner); };
    const auto cuts = operator_cuts(op, ic, x);
    return subordinate_with(alpha, t, kernel, F1, quad, cuts).value;
}

}  // namespace detail

/// F_alpha(x, t) = int_0^inf n_alpha(y, t) F1(x, y) dy; alpha = 1 is the ordinary solution.
inline double solve_fractional(const FPOperator& op, double alpha, const InitialCondition& ic, double x, double t,
                               const QuadSpec& quad = {}, const StableConfig& cfg = {}) {
    validate(op);
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("solve_fractional: alpha must lie in (0,1]");
    if (!(t >= 0.0)) throw DomainError("solve_fractional: t must be >= 0");
    if (t == 0.0) return ic(x);
    if (alpha == 1.0) return solve_ordinary(op, ic, x, t, quad);
    detail::check_fractional_regime(op, alpha, t);
    auto kernel = [&](double y) { return kernel_n(alpha, y, t, cfg); };
    return detail::solve_fractional_impl(op, alpha, ic, x, t, quad, kernel);
}

/// Fractional diffusion through the single kernel n_{alpha/2}:
/// F_alpha(x, t) = (1/2) int n_{alpha/2}(|xi|, t) f(x - xi) dxi.
inline double solve_fractional_diffusion_direct(double alpha, const InitialCondition& ic, double x, double t,
                                                const QuadSpec& quad = {}, const StableConfig& cfg = {}) {
    detail::check_alpha_open(alpha, "solve_fractional_diffusion_direct");
    if (!(t > 0.0)) throw DomainError("solve_fractional_diffusion_direct: t must be positive");
    const double beta = 0.5 * alpha;
    const double reach = kernel_tail_cutoff(beta, t);
    const double a = std::max(x - ic.hi(), -reach);
    const double b = std::min(x - ic.lo(), reach);
    if (!(a < b)) return 0.0;
    auto g = [&](double xi) {
        if (xi == 0.0) return 0.5 * std::pow(t, -beta) * rgamma(1.0 - beta) * ic(x);
        return 0.5 * kernel_n(beta, std::abs(xi), t, cfg) * ic(x - xi);
    };
    const double s = std::pow(t, beta);
    std::vector<double> cuts{0.0};
    for (double f : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        cuts.push_back(f * s);
        cuts.push_back(-f * s);
    }
    for (double c : ic.features()) cuts.push_back(x - c);
    return integrate_finite(g, a, b, quad, cuts).value;
}

/// Advection through the stable density directly:
/// F_alpha(x, t) = int_0^inf Phi_alpha(xi / x) f(x - (t x / xi)^alpha) dxi / x, x > 0.
inline double solve_advection(double alpha, const InitialCondition& ic, double x, double t, const QuadSpec& quad = {},
                              const StableConfig& cfg = {}) {
    detail::check_alpha_open(alpha, "solve_advection");
    if (!(x > 0.0)) throw DomainError("solve_advection: x must be positive");
    if (!(t >= 0.0)) throw DomainError("solve_advection: t must be >= 0");
    if (t == 0.0) return ic(x);
    auto g = [&](double xi) {
        const double shift = std::pow(t * x / xi, alpha);
        const double fv = ic(x - shift);
        if (fv == 0.0) return 0.0;
        return phi(alpha, xi / x, cfg).value * fv / x;
    };
    // xi at which the shifted argument hits an IC feature, and the bulk of Phi near xi ~ x.
    std::vector<double> cuts{0.1 * x, x};
    for (double c : ic.features())
        if (x - c > 0.0) cuts.push_back(t * x / std::pow(x - c, 1.0 / alpha));
    // The argument leaves the support once (t x / xi)^alpha > x - lo.
    double start = 0.0;
    if (x - ic.lo() > 0.0) start = t * x / std::pow(x - ic.lo(), 1.0 / alpha);
    if (x - ic.hi() > 0.0) {
        // ... and again once it drops below hi: the integral is over a finite range.
        const double end = t * x / std::pow(x - ic.hi(), 1.0 / alpha);
        if (!(start < end)) return 0.0;
        return integrate_finite(g, start, end, quad, cuts).value;
    }
    double head_end = 10.0 * x;
    for (double c : cuts) head_end = std::max(head_end, 2.0 * c);
    const QuadResult head = integrate_finite(g, start, head_end, quad, cuts);
    QuadSpec tail_spec = quad;
    tail_spec.split_point = head_end;
    const QuadResult tail = integrate_semi_infinite(g, head_end, tail_spec);
    return head.value + tail.value;
}

// ---- slices ---------------------------------------------------------------------

struct FieldSlice {
    std::vector<double> grid;
    std::vector<double> values;
    double t = 0.0;
    double alpha = 1.0;
    std::string op;
    std::string ic;
    QuadSpec quad;
    bool density_preserving = false;
    double mass = 0.0;          ///< trapezoid mass over the grid
    double initial_mass = 0.0;  ///< sigma^0 of the initial condition
};

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

/// Evaluates F_alpha(., t) on a grid. All points share one memoized kernel table.
/// Per-point failures are collected and reported together with their indices.
inline FieldSlice evaluate_slice(const FPOperator& op, double alpha, const InitialCondition& ic,
                                 const std::vector<double>& grid, double t, const QuadSpec& quad = {},
                                 const StableConfig& cfg = {}) {
    validate(op);
    if (grid.empty()) throw DomainError("evaluate_slice: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw DomainError("evaluate_slice: grid must be strictly increasing");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("evaluate_slice: alpha must lie in (0,1]");
    if (!(t >= 0.0)) throw DomainError("evaluate_slice: t must be >= 0");
    if (t > 0.0) {
        if (alpha < 1.0) {
            detail::check_fractional_regime(op, alpha, t);
        } else if (auto* s = std::get_if<Squeeze>(&op); s && s->kernel == SqueezeKernel::approximate && t > s->window) {
            throw RegimeError("squeeze: tau=" + std::to_string(t) + " beyond the approximation window");
        }
    }

    FieldSlice out;
    out.grid = grid;
    out.values.assign(grid.size(), 0.0);
    out.t = t;
    out.alpha = alpha;
    out.op = describe(op);
    out.ic = ic.label();
    out.quad = quad;
    out.density_preserving = density_preserving(op);

    std::optional<KernelTable> table;
    if (t > 0.0 && alpha < 1.0) table.emplace(alpha, t, cfg);
    std::vector<std::pair<std::size_t, std::string>> failures;
    bool all_regime = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        try {
            if (t == 0.0) out.values[i] = ic(grid[i]);
            else if (alpha == 1.0) out.values[i] = solve_ordinary(op, ic, grid[i], t, quad);
            else out.values[i] = detail::solve_fractional_impl(op, alpha, ic, grid[i], t, quad, *table);
            if (!std::isfinite(out.values[i])) throw OverflowError("non-finite value");
        } catch (const RegimeError& e) {
            failures.emplace_back(i, e.what());
        } catch (const Error& e) {
            all_regime = false;
            failures.emplace_back(i, e.what());
        }
    }
    if (!failures.empty()) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "evaluate_slice: " << failures.size() << " point(s) failed; first at index " << failures.front().first
            << " (x=" << grid[failures.front().first] << "): " << failures.front().second;
        throw SliceError(msg.str(), std::move(failures), all_regime);
    }
    out.mass = trapezoid(out.grid, out.values);
    try {
        out.initial_mass = ic.moment(0);
    } catch (const Error&) {
        out.initial_mass = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

}  // namespace fracml
