#pragma once

// Command-line front end: `fracml <command> [flags]`. Each command writes one
// table (CSV with '#' metadata lines, or JSON with the same fields).
// Exit codes: 0 ok, 1 identity-suite failure, 2 usage, 3 numeric failure, 4 regime violation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fracml/error.hpp"
#include "fracml/fp_solver.hpp"
#include "fracml/mlf.hpp"
#include "fracml/moments.hpp"
#include "fracml/quadrature.hpp"
#include "fracml/stable.hpp"
#include "fracml/umbral_conv.hpp"

namespace fracml::cli {

enum Exit : int { ok = 0, check_failed = 1, usage = 2, numeric = 3, regime = 4 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- number formatting and parsing -----------------------------------------

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Real number, also accepting a fraction "p/q".
inline double parse_real(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        if (auto slash = s.find('/'); slash != std::string::npos) {
            const double p = std::stod(s.substr(0, slash), &pos);
            if (pos != slash) throw std::invalid_argument(s);
            const std::string den = s.substr(slash + 1);
            const double q = std::stod(den, &pos);
            if (pos != den.size() || q == 0.0) throw std::invalid_argument(s);
            return p / q;
        }
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError("invalid " + what + " '" + s + "'");
    }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

/// Grid specs: "start:stop:count" (linear), "geom:start:stop:count", "sinh:half_width:core:count",
/// or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& spec, const std::string& what) {
    auto parts = split(spec, ':');
    auto count = [&](const std::string& c) {
        const double n = parse_real(c, what + " count");
        if (!(n >= 1.0) || std::floor(n) != n || n > 1e7) throw UsageError("invalid " + what + " count '" + c + "'");
        return static_cast<std::size_t>(n);
    };
    std::vector<double> g;
    if (parts.size() == 3) {
        const double a = parse_real(parts[0], what), b = parse_real(parts[1], what);
        const std::size_t n = count(parts[2]);
        if (n == 1) return {a};
        for (std::size_t i = 0; i < n; ++i) g.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
        return g;
    }
    if (parts.size() == 4 && parts[0] == "geom") {
        const double a = parse_real(parts[1], what), b = parse_real(parts[2], what);
        const std::size_t n = count(parts[3]);
        if (!(a > 0.0) || !(b > a)) throw UsageError(what + ": geom grid needs 0 < start < stop");
        if (n == 1) return {a};
        for (std::size_t i = 0; i < n; ++i) g.push_back(a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(n - 1)));
        return g;
    }
    if (parts.size() == 4 && parts[0] == "sinh") {
        const double L = parse_real(parts[1], what), c = parse_real(parts[2], what);
        const std::size_t n = count(parts[3]);
        if (!(L > 0.0) || !(c > 0.0) || n < 2) throw UsageError(what + ": sinh grid needs positive width, core, count >= 2");
        const double S = std::asinh(L / c);
        for (std::size_t i = 0; i < n; ++i)
            g.push_back(c * std::sinh(-S + 2.0 * S * static_cast<double>(i) / static_cast<double>(n - 1)));
        return g;
    }
    if (parts.size() == 1) {
        for (const auto& p : split(spec, ',')) g.push_back(parse_real(p, what));
        return g;
    }
    throw UsageError("invalid " + what + " '" + spec + "'");
}

// ---- configuration ------------------------------------------------------------

struct RunConfig {
    QuadSpec quad{};
    double series_tol = 1e-15;
    std::size_t max_terms = 10'000;
    double z_series = 10.0;
    double cancellation_threshold = 1e8;
    double regime_switch = 1.0;
    int k_max = 12;
    double rational_cancellation_limit = 1e7;
    double squeeze_window = 0.2;
    std::string format = "csv";
    std::uint64_t seed = 7;
    std::string out;

    std::vector<std::pair<std::string, std::string>> items() const {
        return {{"abs_tol", fmt(quad.abs_tol)},
                {"rel_tol", fmt(quad.rel_tol)},
                {"max_subdivisions", std::to_string(quad.max_subdivisions)},
                {"split_point", fmt(quad.split_point)},
                {"series_tol", fmt(series_tol)},
                {"max_terms", std::to_string(max_terms)},
                {"z_series", fmt(z_series)},
                {"cancellation_threshold", fmt(cancellation_threshold)},
                {"regime_switch", fmt(regime_switch)},
                {"k_max", std::to_string(k_max)},
                {"rational_cancellation_limit", fmt(rational_cancellation_limit)},
                {"squeeze_window", fmt(squeeze_window)},
                {"format", format},
                {"seed", std::to_string(seed)},
                {"out", out}};
    }

    /// Settings that shape results; the output destination is left out so reruns compare equal.
    std::vector<std::pair<std::string, std::string>> result_items() const {
        auto v = items();
        v.pop_back();
        return v;
    }

    void set(const std::string& key, const std::string& value) {
        auto positive = [&](double v) {
            if (!(v > 0.0)) throw UsageError("config: " + key + " must be positive");
            return v;
        };
        auto count = [&]() {
            const double v = parse_real(value, key);
            if (!(v >= 1.0) || std::floor(v) != v) throw UsageError("config: " + key + " must be a positive integer");
            return static_cast<std::size_t>(v);
        };
        if (key == "abs_tol") quad.abs_tol = positive(parse_real(value, key));
        else if (key == "rel_tol") quad.rel_tol = positive(parse_real(value, key));
        else if (key == "max_subdivisions") quad.max_subdivisions = count();
        else if (key == "split_point") quad.split_point = positive(parse_real(value, key));
        else if (key == "series_tol") series_tol = positive(parse_real(value, key));
        else if (key == "max_terms") max_terms = count();
        else if (key == "z_series") z_series = positive(parse_real(value, key));
        else if (key == "cancellation_threshold") cancellation_threshold = positive(parse_real(value, key));
        else if (key == "regime_switch") regime_switch = positive(parse_real(value, key));
        else if (key == "k_max") k_max = static_cast<int>(count());
        else if (key == "rational_cancellation_limit") rational_cancellation_limit = positive(parse_real(value, key));
        else if (key == "squeeze_window") squeeze_window = positive(parse_real(value, key));
        else if (key == "format") {
            if (value != "csv" && value != "json") throw UsageError("config: format must be csv or json");
            format = value;
        } else if (key == "seed") {
            try {
                std::size_t pos = 0;
                seed = std::stoull(value, &pos);
                if (pos != value.size()) throw std::invalid_argument(value);
            } catch (const std::exception&) {
                throw UsageError("config: invalid seed '" + value + "'");
            }
        } else if (key == "out") out = value;
        else throw UsageError("config: unknown key '" + key + "'");
    }

    StableConfig stable() const { return {regime_switch, k_max, rational_cancellation_limit}; }

    MLConfig ml() const {
        MLConfig m;
        m.z_series = z_series;
        m.cancellation_threshold = cancellation_threshold;
        m.tol = series_tol;
        m.max_terms = max_terms;
        m.stable = stable();
        return m;
    }
};

/// Reads key=value lines ('#' comments) into cfg.
inline void load_config_file(RunConfig& cfg, const std::string& path, bool required) {
    std::ifstream in(path);
    if (!in) {
        if (required) throw UsageError("cannot read config file '" + path + "'");
        return;
    }
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

// ---- tables -----------------------------------------------------------------------

using Cell = std::variant<double, long long, std::string>;

struct Table {
    std::string command;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

inline std::string cell_text(const Cell& c) {
    if (auto* d = std::get_if<double>(&c)) return fmt(*d);
    if (auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
}

inline void write_csv(const Table& t, std::ostream& os) {
    os << "# fracml " << t.command << "\n# config";
    for (const auto& [k, v] : t.config) os << ' ' << k << '=' << v;
    os << '\n';
    for (const auto& [k, v] : t.meta) os << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
        os << '\n';
    }
}

inline void write_json(const Table& t, std::ostream& os) {
    using J = nlohmann::ordered_json;
    J j;
    j["command"] = t.command;
    J cfg = J::object();
    for (const auto& [k, v] : t.config) cfg[k] = v;
    j["config"] = cfg;
    J meta = J::object();
    for (const auto& [k, v] : t.meta) meta[k] = v;
    j["meta"] = meta;
    j["columns"] = t.columns;
    J rows = J::array();
    for (const auto& row : t.rows) {
        J r = J::array();
        for (const auto& c : row) {
            if (auto* d = std::get_if<double>(&c)) {
                // Non-finite values have no JSON number form; they travel as strings.
                if (std::isfinite(*d)) r.push_back(*d);
                else r.push_back(fmt(*d));
            } else if (auto* i = std::get_if<long long>(&c)) {
                r.push_back(*i);
            } else {
                r.push_back(std::get<std::string>(c));
            }
        }
        rows.push_back(std::move(r));
    }
    j["rows"] = rows;
    os << j.dump(2) << '\n';
}

inline void emit(const Table& t, const RunConfig& cfg, std::ostream& out) {
    if (cfg.out.empty() || cfg.out == "-") {
        cfg.format == "json" ? write_json(t, out) : write_csv(t, out);
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f) throw UsageError("cannot write output file '" + cfg.out + "'");
    cfg.format == "json" ? write_json(t, f) : write_csv(t, f);
}

// ---- shared flag handling ---------------------------------------------------------

inline double parse_alpha(const std::string& s, bool allow_one = true) {
    const double a = parse_real(s, "alpha");
    if (!(a > 0.0 && (allow_one ? a <= 1.0 : a < 1.0)))
        throw UsageError("alpha must lie in (0," + std::string(allow_one ? "1]" : "1)") + ", got '" + s + "'");
    return a;
}

inline InitialCondition parse_ic(const std::string& s) {
    if (s.rfind("gauss:", 0) == 0) {
        auto p = split(s.substr(6), ',');
        if (p.size() != 2) throw UsageError("--ic gauss:MU,SIGMA expected, got '" + s + "'");
        const double mu = parse_real(p[0], "ic mean"), sd = parse_real(p[1], "ic sigma");
        if (!(sd > 0.0)) throw UsageError("--ic gauss: sigma must be positive");
        return InitialCondition::gauss(mu, sd);
    }
    if (s.rfind("file:", 0) == 0) {
        try {
            return InitialCondition::from_file(s.substr(5));
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
    }
    throw UsageError("--ic must be gauss:MU,SIGMA or file:PATH, got '" + s + "'");
}

struct OpFlags {
    std::string op = "diffusion";
    double a = 1.0;
    double b = 1.0;
    std::string q = "0,1";
    std::string v = "0,0";
    std::string squeeze_kernel = "approximate";
};

inline void add_op_flags(CLI::App* app, OpFlags& f) {
    app->add_option("--op", f.op, "diffusion|dilation|drift|damping|sqdilation|squeeze|advection");
    app->add_option("--a", f.a, "damping: diffusion coefficient a > 0");
    app->add_option("--b", f.b, "damping: damping rate b > 0");
    app->add_option("--q", f.q, "drift: q(x) = c0 + c1 x given as c0,c1");
    app->add_option("--v", f.v, "drift: v(x) = d0 + d1 x given as d0,d1");
    app->add_option("--squeeze-kernel", f.squeeze_kernel, "squeeze: exact|approximate (ordinary solutions only)");
}

inline FPOperator make_operator(const OpFlags& f, const RunConfig& cfg) {
    if (f.op == "diffusion") return Diffusion{};
    if (f.op == "dilation") return Dilation{};
    if (f.op == "sqdilation") return SquaredDilation{};
    if (f.op == "advection") return Advection{};
    if (f.op == "damping") {
        if (!(f.a > 0.0) || !(f.b > 0.0)) throw UsageError("damping needs --a > 0 and --b > 0");
        return DiffusionDamping{f.a, f.b};
    }
    if (f.op == "squeeze") {
        if (f.squeeze_kernel != "exact" && f.squeeze_kernel != "approximate")
            throw UsageError("--squeeze-kernel must be exact or approximate");
        return Squeeze{f.squeeze_kernel == "exact" ? SqueezeKernel::exact : SqueezeKernel::approximate, cfg.squeeze_window};
    }
    if (f.op == "drift") {
        auto coeffs = [](const std::string& s, const char* name) {
            auto p = split(s, ',');
            if (p.size() != 2) throw UsageError(std::string("--") + name + " expects two comma-separated coefficients");
            return std::pair{parse_real(p[0], name), parse_real(p[1], name)};
        };
        const auto [q0, q1] = coeffs(f.q, "q");
        const auto [v0, v1] = coeffs(f.v, "v");
        DriftReaction d;
        d.q = [q0, q1](double x) { return q0 + q1 * x; };
        d.v = [v0, v1](double x) { return v0 + v1 * x; };
        return d;
    }
    throw UsageError("unknown operator '" + f.op + "'");
}

// ---- commands -----------------------------------------------------------------------

struct MLFlags {
    std::string alpha = "1/2";
    std::string beta = "1";
    std::string gamma = "1";
    std::string z_grid = "0:1:3";
    std::string method = "auto";
    std::string diff;
};

inline MLResult ml_by_method(const std::string& method, const MLParams& p, double z, const RunConfig& cfg) {
    const MLConfig mc = cfg.ml();
    if (method == "auto") return ml_eval(p, z, mc);
    if (method == "series") return ml_series(p, z, cfg.series_tol, cfg.max_terms);
    if (method == "umbral") return ml_umbral(p.alpha, z, cfg.series_tol, cfg.max_terms);
    // integral
    if (p.one_parameter()) {
        if (z == 0.0) return {1.0, MLMethod::exact, 1, 1.0};
        return ml_integral(p.alpha, z, 1.0, cfg.quad, mc.stable);
    }
    return prabhakar_integral(p.alpha, p.gamma - 1.0, z, cfg.quad, mc.stable);
}

inline Table cmd_ml(const MLFlags& f, const RunConfig& cfg) {
    MLParams p;
    p.alpha = parse_alpha(f.alpha);
    p.beta = parse_real(f.beta, "beta");
    p.gamma = parse_real(f.gamma, "gamma");
    auto check_method = [&](const std::string& m) {
        if (m != "auto" && m != "series" && m != "integral" && m != "umbral")
            throw UsageError("--method must be series|integral|umbral|auto, got '" + m + "'");
        if ((m == "umbral" || m == "integral") && p.alpha >= 1.0)
            throw UsageError("the " + m + " route needs alpha < 1");
        if (m == "umbral" && !p.one_parameter()) throw UsageError("the umbral route covers beta = gamma = 1 only");
        if (m == "integral" && !p.one_parameter()) {
            const double delta = p.gamma - 1.0;
            if (!(delta >= 0.0) || std::abs(p.beta - (1.0 + p.alpha * delta)) > 1e-14)
                throw UsageError("the integral route covers beta = 1 + alpha (gamma - 1), gamma >= 1");
        }
    };
    check_method(f.method);
    if (!f.diff.empty()) check_method(f.diff);
    const auto grid = parse_grid(f.z_grid, "--z-grid");

    Table t;
    t.command = "ml";
    t.columns = {"z", "value", "method", "terms_or_panels", "flag"};
    if (!f.diff.empty()) {
        t.columns.push_back("other_value");
        t.columns.push_back("rel_diff");
    }
    t.meta = {{"alpha", fmt(p.alpha)}, {"beta", fmt(p.beta)}, {"gamma", fmt(p.gamma)}, {"method", f.method}};
    double worst = 0.0;
    for (double z : grid) {
        try {
            const MLResult r = ml_by_method(f.method, p, z, cfg);
            std::vector<Cell> row{z, r.value, std::string(to_string(r.method)), static_cast<long long>(r.terms), r.cancellation};
            if (!f.diff.empty()) {
                const MLResult o = ml_by_method(f.diff, p, z, cfg);
                const double rel = std::abs(r.value - o.value) / std::max(std::abs(o.value), 1e-300);
                worst = std::max(worst, rel);
                row.push_back(o.value);
                row.push_back(rel);
            }
            t.rows.push_back(std::move(row));
        } catch (const Error& e) {
            throw std::runtime_error("ml: evaluation failed at z=" + fmt(z) + ": " + e.what());
        }
    }
    if (!f.diff.empty()) {
        t.meta.emplace_back("diff_method", f.diff);
        t.meta.emplace_back("max_rel_diff", fmt(worst));
    }
    return t;
}

struct SolveFlags {
    OpFlags op;
    std::string alpha = "1/2";
    double t = 1.0;
    std::string x_grid = "-10:10:201";
    std::string ic = "gauss:0,1";
};

inline Table cmd_solve(const SolveFlags& f, const RunConfig& cfg, std::ostream& err) {
    const double alpha = parse_alpha(f.alpha);
    if (!(f.t >= 0.0)) throw UsageError("--t must be >= 0");
    const FPOperator op = make_operator(f.op, cfg);
    const InitialCondition ic = parse_ic(f.ic);
    const auto grid = parse_grid(f.x_grid, "--x-grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw UsageError("--x-grid must be strictly increasing");

    const FieldSlice s = evaluate_slice(op, alpha, ic, grid, f.t, cfg.quad, cfg.stable());
    Table t;
    t.command = "solve";
    t.columns = {"x", "F"};
    t.meta = {{"op", s.op}, {"alpha", fmt(s.alpha)}, {"t", fmt(s.t)}, {"ic", s.ic}, {"mass", fmt(s.mass)},
              {"initial_mass", fmt(s.initial_mass)}, {"density_preserving", s.density_preserving ? "true" : "false"}};
    for (std::size_t i = 0; i < s.grid.size(); ++i) t.rows.push_back({s.grid[i], s.values[i]});
    if (s.density_preserving) err << "mass " << fmt(s.mass) << " (initial " << fmt(s.initial_mass) << ")\n";
    return t;
}

struct MomentsFlags {
    OpFlags op;
    std::string alpha = "1/2";
    int n_max = 2;
    std::string t_grid = "0.1,1";
    std::string ic = "gauss:0,1";
    std::string source = "analytic";
    std::string x_grid = "sinh:200:1:801";
};

/// Analytic <x^n(t)>_alpha for the operator, NaN when no law is available.
inline double analytic_moment(const FPOperator& op, std::size_t n, double alpha, const InitialCondition& ic, double t,
                              const RunConfig& cfg) {
    const MLConfig mc = cfg.ml();
    if (std::holds_alternative<Diffusion>(op)) return moment_diffusion(n, alpha, ic, t);
    if (std::holds_alternative<Dilation>(op)) return moment_dilation(n, alpha, ic, t, mc);
    if (auto* d = std::get_if<DiffusionDamping>(&op)) return moment_diffusion_damping(n, alpha, d->a, d->b, ic, t, mc);
    if (std::holds_alternative<SquaredDilation>(op)) return moment_squared_dilation(n, alpha, ic, t, mc);
    if (auto* s = std::get_if<Squeeze>(&op)) {
        QuadSpec q = cfg.quad;
        q.abs_tol = 1e-300;
        return moment_squeeze_ratio(n, alpha, ic, t, q, s->window, mc);
    }
    if (std::holds_alternative<Advection>(op)) {
        // F = E f(x - Y) with Y = t^alpha S^-alpha: <x^n> = sum_k C(n,k) sigma^(n-k) E[Y^k].
        double sum = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            const double kd = static_cast<double>(k);
            const double ey = std::pow(t, alpha * kd) * std::exp(std::lgamma(1.0 + kd) - std::lgamma(1.0 + alpha * kd));
            const double c = std::exp(std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(kd + 1.0) -
                                      std::lgamma(static_cast<double>(n - k) + 1.0));
            sum += c * ic.moment(n - k) * ey;
        }
        return sum;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline double fit_loglog_slope(const std::vector<double>& t, const std::vector<double>& m) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] > 0.0) || !(m[i] > 0.0)) continue;
        const double x = std::log(t[i]), y = std::log(m[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double nn = static_cast<double>(n);
    return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

inline Table cmd_moments(const MomentsFlags& f, const RunConfig& cfg) {
    const double alpha = parse_alpha(f.alpha);
    if (f.n_max < 0 || f.n_max > 24) throw UsageError("--n-max must lie in [0, 24]");
    if (f.source != "analytic" && f.source != "numeric" && f.source != "both")
        throw UsageError("--source must be analytic|numeric|both");
    const FPOperator op = make_operator(f.op, cfg);
    const InitialCondition ic = parse_ic(f.ic);
    const auto tgrid = parse_grid(f.t_grid, "--t-grid");
    for (double t : tgrid)
        if (!(t >= 0.0)) throw UsageError("--t-grid values must be >= 0");
    const bool want_a = f.source != "numeric";
    const bool want_n = f.source != "analytic";
    std::vector<double> xgrid;
    if (want_n) xgrid = parse_grid(f.x_grid, "--x-grid");
    const bool squeeze = std::holds_alternative<Squeeze>(op);

    Table t;
    t.command = "moments";
    t.columns = {"t", "n", "analytic", "numeric", "rel_diff"};
    t.meta = {{"op", describe(op)}, {"alpha", fmt(alpha)}, {"ic", ic.label()}, {"source", f.source}};
    t.meta.emplace_back("rel_diff", "absolute difference where the analytic value is 0");
    if (squeeze) t.meta.emplace_back("normalization", "ratio to n=0");
    std::vector<double> m2a, m2n;
    for (double tv : tgrid) {
        std::optional<FieldSlice> slice;
        if (want_n) slice = evaluate_slice(op, alpha, ic, xgrid, tv, cfg.quad, cfg.stable());
        const double m0n = want_n ? numeric_moment(*slice, 0).value : 1.0;
        for (int n = 0; n <= f.n_max; ++n) {
            const std::size_t nn = static_cast<std::size_t>(n);
            const double a = want_a ? analytic_moment(op, nn, alpha, ic, tv, cfg) : std::numeric_limits<double>::quiet_NaN();
            double num = std::numeric_limits<double>::quiet_NaN();
            if (want_n) {
                num = numeric_moment(*slice, nn).value;
                if (squeeze) num /= m0n;
            }
            double rel = std::numeric_limits<double>::quiet_NaN();
            if (want_a && want_n) rel = a == 0.0 ? std::abs(num) : std::abs(num - a) / std::abs(a);
            t.rows.push_back({tv, static_cast<long long>(n), a, num, rel});
            if (n == 2) {
                m2a.push_back(a);
                m2n.push_back(num);
            }
        }
    }
    if (f.n_max >= 2 && tgrid.size() >= 2) {
        if (want_a) t.meta.emplace_back("slope_n2_analytic", fmt(fit_loglog_slope(tgrid, m2a)));
        if (want_n) t.meta.emplace_back("slope_n2_numeric", fmt(fit_loglog_slope(tgrid, m2n)));
    }
    return t;
}

struct XcheckFlags {
    std::string suite = "all";
    std::string alpha_list;
    double tol = 0.0;
};

struct SuiteResult {
    std::string suite;
    double alpha;
    double worst;
    double tol;
};

inline std::vector<double> alpha_list_or(const std::string& list, std::vector<double> fallback, bool allow_one) {
    if (list.empty()) return fallback;
    std::vector<double> out;
    for (const auto& s : split(list, ',')) out.push_back(parse_alpha(s, allow_one));
    return out;
}

inline std::vector<SuiteResult> run_suite(const std::string& suite, const XcheckFlags& f, const RunConfig& cfg) {
    std::vector<SuiteResult> out;
    const MLConfig mc = cfg.ml();
    auto tol_or = [&](double d) { return f.tol > 0.0 ? f.tol : d; };
    if (suite == "laplace") {
        for (double a : alpha_list_or(f.alpha_list, {1.0 / 3, 0.5, 2.0 / 3, 0.75}, false)) {
            auto ra = RationalAlpha::from_double(a, cfg.k_max);
            if (!ra) throw UsageError("laplace suite needs rational alpha with denominator <= k_max");
            double worst = 0.0;
            for (int i = 1; i <= 9; ++i)
                worst = std::max(worst, laplace_identity_residual(*ra, 0.1 * i, cfg.quad, mc));
            out.push_back({suite, a, worst, tol_or(1e-6)});
        }
    } else if (suite == "rl") {
        for (double a : alpha_list_or(f.alpha_list, {0.25, 0.5, 0.75}, false)) {
            double worst = 0.0;
            for (double b : {-1.0, 0.5})
                for (double x : {0.5, 1.0, 2.0}) worst = std::max(worst, rl_derivative_residual(a, b, x, cfg.quad));
            out.push_back({suite, a, worst, tol_or(1e-4)});
        }
    } else if (suite == "product") {
        for (double a : alpha_list_or(f.alpha_list, {0.5, 1.0}, true)) {
            double worst = 0.0;
            for (double lam : {-0.5, 0.5})
                for (auto [x, y] : {std::pair{1.0, 1.0}, std::pair{1.0, 2.0}, std::pair{0.5, 2.0}})
                    worst = std::max(worst, product_identity_residual(a, lam, x, y, 120, mc));
            out.push_back({suite, a, worst, tol_or(a == 1.0 ? 1e-10 : 1e-6)});
        }
    } else if (suite == "gmoment") {
        for (double a : alpha_list_or(f.alpha_list, {1.0 / 3, 0.5, 2.0 / 3}, false)) {
            double worst = 0.0;
            QuadSpec q = cfg.quad;
            q.abs_tol = 1e-300;
            for (std::size_t n : {1u, 2u, 4u, 6u}) {
                const double ref = g_alpha_sum(n, a, 1.0, 2.0);
                worst = std::max(worst, std::abs(g_alpha_moment(n, a, 1.0, 2.0, q, mc.stable) - ref) / std::abs(ref));
            }
            out.push_back({suite, a, worst, tol_or(1e-5)});
        }
    } else if (suite == "subordination") {
        for (double a : alpha_list_or(f.alpha_list, {0.5}, false)) {
            const auto ic = InitialCondition::gauss(0.0, 0.5);
            double worst = 0.0;
            for (double t : {0.1, 1.0})
                for (double x : {-1.5, 0.0, 0.4, 2.0}) {
                    const double u = solve_fractional(Diffusion{}, a, ic, x, t, cfg.quad, mc.stable);
                    const double d = solve_fractional_diffusion_direct(a, ic, x, t, cfg.quad, mc.stable);
                    if (std::abs(d) > 1e-8) worst = std::max(worst, std::abs(u - d) / std::abs(d));
                }
            out.push_back({suite, a, worst, tol_or(1e-5)});
        }
    } else if (suite == "advection") {
        for (double a : alpha_list_or(f.alpha_list, {0.5}, false)) {
            const auto ic = InitialCondition::gauss(1.0, 0.3);
            double worst = 0.0;
            for (double t : {0.2, 1.0})
                for (double x : {0.5, 1.2, 2.0, 3.0}) {
                    const double r1 = solve_advection(a, ic, x, t, cfg.quad, mc.stable);
                    const double r2 = solve_fractional(Advection{}, a, ic, x, t, cfg.quad, mc.stable);
                    worst = std::max(worst, std::abs(r1 - r2) / std::max(std::abs(r2), 1e-8));
                }
            out.push_back({suite, a, worst, tol_or(1e-5)});
        }
    } else {
        throw UsageError("unknown suite '" + suite + "'");
    }
    return out;
}

inline Table cmd_xcheck(const XcheckFlags& f, const RunConfig& cfg, bool& failed) {
    std::vector<std::string> suites;
    if (f.suite == "all") suites = {"laplace", "rl", "product", "gmoment", "subordination", "advection"};
    else suites = {f.suite};
    if (f.tol < 0.0) throw UsageError("--tol must be positive");
    Table t;
    t.command = "xcheck";
    t.columns = {"suite", "alpha", "worst_residual", "tol", "pass"};
    failed = false;
    for (const auto& s : suites) {
        for (const auto& r : run_suite(s, f, cfg)) {
            const bool pass = r.worst <= r.tol;
            failed = failed || !pass;
            t.rows.push_back({r.suite, r.alpha, r.worst, r.tol, std::string(pass ? "pass" : "FAIL")});
        }
    }
    t.meta.emplace_back("result", failed ? "FAIL" : "pass");
    return t;
}

struct SampleFlags {
    std::string alpha = "1/2";
    long long n = 1000;
};

/// Samples go to --out (or stdout when absent); the summary compares empirical
/// fractional moments E[S^sigma] with Gamma(1 - sigma/alpha) / Gamma(1 - sigma).
inline int cmd_sample(const SampleFlags& f, const RunConfig& cfg, std::ostream& out) {
    const double alpha = parse_alpha(f.alpha, false);
    if (f.n < 2) throw UsageError("--n must be >= 2");
    const auto xs = sample_levy(alpha, static_cast<std::size_t>(f.n), cfg.seed);
    Table t;
    t.command = "sample";
    t.columns = {"sigma", "empirical", "std_error", "analytic", "z_score"};
    t.config = cfg.result_items();
    t.meta = {{"alpha", fmt(alpha)}, {"n", std::to_string(f.n)}, {"seed", std::to_string(cfg.seed)}};
    for (double sigma : {-1.0, -0.5, -0.25, 0.25 * alpha}) {
        double mean = 0.0, m2 = 0.0;
        std::size_t k = 0;
        for (double x : xs) {
            const double v = std::pow(x, sigma);
            ++k;
            const double d = v - mean;
            mean += d / static_cast<double>(k);
            m2 += d * (v - mean);
        }
        const double se = std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k));
        const double an = stieltjes_moment(alpha, sigma).value;
        t.rows.push_back({sigma, mean, se, an, (mean - an) / se});
    }
    auto write_samples = [&](std::ostream& os) {
        for (double x : xs) os << fmt(x) << '\n';
    };
    if (cfg.out.empty() || cfg.out == "-") {
        write_samples(out);
        std::ostringstream summary;
        write_csv(t, summary);
        // The summary follows the samples as comment lines.
        std::istringstream lines(summary.str());
        std::string line;
        while (std::getline(lines, line)) out << (line.rfind("#", 0) == 0 ? line : "# " + line) << '\n';
    } else {
        std::ofstream fs(cfg.out, std::ios::binary);
        if (!fs) throw UsageError("cannot write output file '" + cfg.out + "'");
        write_samples(fs);
        RunConfig c = cfg;
        c.out.clear();
        emit(t, c, out);
    }
    return ok;
}

// ---- entry point ------------------------------------------------------------------

/// Runs one command line (args excludes the program name). Reads fracml.conf from the
/// working directory, or the file named by FRACML_CONFIG.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    try {
        if (const char* path = std::getenv("FRACML_CONFIG"); path && *path) load_config_file(cfg, path, true);
        else load_config_file(cfg, "fracml.conf", false);
    } catch (const UsageError& e) {
        err << "fracml: " << e.what() << '\n';
        return usage;
    }

    CLI::App app{"fractional Fokker-Planck and Mittag-Leffler toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    std::map<std::string, std::string> overrides;
    std::string format, outpath, seed, abs_tol, rel_tol, max_sub;
    app.add_option("--format", format, "csv|json");
    app.add_option("--out", outpath, "output file (default stdout)");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--abs-tol", abs_tol, "quadrature absolute tolerance");
    app.add_option("--rel-tol", rel_tol, "quadrature relative tolerance");
    app.add_option("--max-subdivisions", max_sub, "quadrature subdivision budget");

    auto* ml = app.add_subcommand("ml", "evaluate Mittag-Leffler functions on a grid");
    MLFlags mlf;
    ml->add_option("--alpha", mlf.alpha);
    ml->add_option("--beta", mlf.beta);
    ml->add_option("--gamma", mlf.gamma);
    ml->add_option("--z-grid", mlf.z_grid, "start:stop:count");
    ml->add_option("--method", mlf.method, "series|integral|umbral|auto");
    ml->add_option("--diff", mlf.diff, "second method to compare against");

    auto* solve = app.add_subcommand("solve", "evaluate F_alpha(x, t) on a grid");
    SolveFlags sf;
    add_op_flags(solve, sf.op);
    solve->add_option("--alpha", sf.alpha);
    solve->add_option("--t", sf.t);
    solve->add_option("--x-grid", sf.x_grid);
    solve->add_option("--ic", sf.ic, "gauss:MU,SIGMA or file:PATH");

    auto* moments = app.add_subcommand("moments", "moment tables");
    MomentsFlags mf;
    add_op_flags(moments, mf.op);
    moments->add_option("--alpha", mf.alpha);
    moments->add_option("--n-max", mf.n_max);
    moments->add_option("--t-grid", mf.t_grid);
    moments->add_option("--ic", mf.ic);
    moments->add_option("--source", mf.source, "analytic|numeric|both");
    moments->add_option("--x-grid", mf.x_grid, "grid for numeric moments");

    auto* xcheck = app.add_subcommand("xcheck", "run the identity suite");
    XcheckFlags xf;
    xcheck->add_option("--suite", xf.suite, "laplace|rl|product|gmoment|subordination|advection|all");
    xcheck->add_option("--alpha-list", xf.alpha_list, "comma-separated, fractions allowed");
    xcheck->add_option("--tol", xf.tol);

    auto* sample = app.add_subcommand("sample", "draw one-sided stable samples");
    SampleFlags smf;
    sample->add_option("--alpha", smf.alpha);
    sample->add_option("--n", smf.n);

    auto* config = app.add_subcommand("config", "configuration");
    auto* show = config->add_subcommand("show", "print the effective configuration");
    config->require_subcommand(1);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "fracml: " << e.what() << '\n';
        return usage;
    }

    try {
        if (!format.empty()) cfg.set("format", format);
        if (!outpath.empty()) cfg.set("out", outpath);
        if (!seed.empty()) cfg.set("seed", seed);
        if (!abs_tol.empty()) cfg.set("abs_tol", abs_tol);
        if (!rel_tol.empty()) cfg.set("rel_tol", rel_tol);
        if (!max_sub.empty()) cfg.set("max_subdivisions", max_sub);

        auto finish = [&](Table t) {
            t.config = cfg.result_items();
            emit(t, cfg, out);
        };
        if (ml->parsed()) {
            finish(cmd_ml(mlf, cfg));
        } else if (solve->parsed()) {
            finish(cmd_solve(sf, cfg, err));
        } else if (moments->parsed()) {
            finish(cmd_moments(mf, cfg));
        } else if (xcheck->parsed()) {
            bool failed = false;
            finish(cmd_xcheck(xf, cfg, failed));
            if (failed) {
                err << "fracml: xcheck: identity residual above tolerance\n";
                return check_failed;
            }
        } else if (sample->parsed()) {
            return cmd_sample(smf, cfg, out);
        } else if (show->parsed()) {
            for (const auto& [k, v] : cfg.items()) out << k << '=' << v << '\n';
        }
        return ok;
    } catch (const UsageError& e) {
        err << "fracml: " << e.what() << '\n';
        return usage;
    } catch (const RegimeError& e) {
        err << "fracml: regime violation: " << e.what() << '\n';
        return regime;
    } catch (const SliceError& e) {
        err << "fracml: " << e.what() << '\n';
        return e.regime_violation() ? regime : numeric;
    } catch (const Error& e) {
        err << "fracml: numeric failure: " << e.what() << '\n';
        return numeric;
    } catch (const std::exception& e) {
        err << "fracml: " << e.what() << '\n';
        return numeric;
    }
}

}  // namespace fracml::cli
