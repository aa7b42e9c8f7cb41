#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gabdiv/divergence.hpp"
#include "gabdiv/measures.hpp"
#include "gabdiv/psi.hpp"
#include "gabdiv/random.hpp"

namespace gabdiv {

enum class Verdict { Valid, Invalid, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Valid: return "Valid";
    case Verdict::Invalid: return "Invalid";
    case Verdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

struct Witness {
    Measure p;
    Measure q;
    Hyper h;
    double value;
    double scale;
    std::string construction;
};

struct ValidityReport {
    Verdict verdict = Verdict::Valid;
    std::optional<std::string> failed_condition;
    std::optional<Witness> witness;
    std::size_t evaluations = 0;
};

struct ValidityOptions {
    double x_min = -30.0;
    double x_max = 30.0;
    std::size_t points = 2001;
    double convexity_tol = 1e-9;
    std::size_t witness_budget = 100000;
    std::uint64_t seed = kDefaultSeed;
};

/// A witness must fall below -kWitnessTol * scale.
inline constexpr double kWitnessTol = 1e-8;

namespace detail {

inline std::string at(double x) { return " at x = " + fmt_num(x); }

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

// Cell averages of c (g+1) t^{-(g+1)} x^g on (0, t) over the cells between consecutive breaks.
inline std::vector<double> power_cells(const std::vector<double>& breaks, double c, double g, double t) {
    std::vector<double> d(breaks.size() - 1, 0.0);
    const double k = c * (g + 1.0) * std::pow(t, -(g + 1.0));
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i], b = breaks[i + 1];
        if (b > t * (1.0 + 1e-12)) continue;
        const double mass = (std::pow(b, g + 1.0) - std::pow(a, g + 1.0)) / (g + 1.0);
        d[i] = k * mass / (b - a);
    }
    return d;
}

inline void add_floor(std::vector<double>& d, const std::vector<double>& w, double tau) {
    double mass = 0.0, total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        mass += d[i] * w[i];
        total += w[i];
    }
    for (double& v : d) v = (1.0 - tau) * v + tau * mass / total;
}

inline bool needs_positive(const Hyper& h) {
    return h.alpha() < 0.0 || h.beta() < 0.0 || h.sum() < 0.0 || h.regime() == Regime::SumZero ||
           h.regime() == Regime::BothZero;
}

struct Pair {
    std::vector<double> p, q, w;
    std::string name;
};

inline Pair power_pair(Rng& rng, bool probability) {
    const double theta = rng.log_uniform(-12.0, 12.0);
    const double eta = rng.log_uniform(-12.0, 12.0);
    const double gp = rng.uniform(-0.9, 3.0);
    const double gq = rng.uniform(-0.9, 3.0);
    const double cp = probability ? 1.0 : rng.log_uniform(-6.0, 0.0);
    const double cq = probability ? 1.0 : rng.log_uniform(-6.0, 0.0);
    const double lo = std::min(theta, eta), hi = std::max(theta, eta);
    std::vector<double> breaks{0.0};
    const std::size_t cells = 64;
    const double start = lo * 1e-8;
    for (std::size_t i = 0; i <= cells; ++i)
        breaks.push_back(start * std::pow(hi / start, static_cast<double>(i) / cells));
    breaks.push_back(lo);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end(),
                             [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(a, b); }),
                 breaks.end());
    breaks.back() = hi;
    Pair out;
    out.p = power_cells(breaks, cp, gp, theta);
    out.q = power_cells(breaks, cq, gq, eta);
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) out.w.push_back(breaks[i + 1] - breaks[i]);
    out.name = "power-family(theta=" + fmt_num(theta) + ", eta=" + fmt_num(eta) + ", gamma_p=" + fmt_num(gp) +
               ", gamma_q=" + fmt_num(gq) + ", c_p=" + fmt_num(cp) + ", c_q=" + fmt_num(cq) + ")";
    return out;
}

inline Pair gaussian_pair(Rng& rng, bool probability) {
    const double sigma = rng.log_uniform(-8.0, 4.0);
    const double theta = sigma * rng.uniform(0.0, 6.0);
    const double cp = probability ? 1.0 : rng.log_uniform(-6.0, 0.0);
    const double cq = probability ? 1.0 : rng.log_uniform(-6.0, 0.0);
    const std::size_t n = 128;
    const double lo = -8.0 * sigma, hi = theta + 8.0 * sigma;
    const double dx = (hi - lo) / n;
    Pair out;
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = lo + (static_cast<double>(i) + 0.5) * dx;
        const double zp = x / sigma, zq = (x - theta) / sigma;
        out.p.push_back(std::exp(-0.5 * zp * zp));
        out.q.push_back(std::exp(-0.5 * zq * zq));
        out.w.push_back(dx);
        sp += out.p.back() * dx;
        sq += out.q.back() * dx;
    }
    for (double& v : out.p) v *= cp / sp;
    for (double& v : out.q) v *= cq / sq;
    out.name = "gaussian(sigma=" + fmt_num(sigma) + ", theta=" + fmt_num(theta) + ", c_p=" + fmt_num(cp) +
               ", c_q=" + fmt_num(cq) + ")";
    return out;
}

inline Pair shifted_uniform_pair(Rng& rng, bool probability) {
    const double theta = rng.log_uniform(-12.0, 12.0);
    const double c = probability ? 1.0 : rng.log_uniform(-6.0, 0.0);
    const double h = c / (theta + 1.0);
    Pair out;
    out.w = {1.0, theta, 1.0};
    out.p = {h, h, 0.0};
    out.q = {0.0, h, h};
    out.name = "shifted-uniform(theta=" + fmt_num(theta) + ", c=" + fmt_num(c) + ")";
    return out;
}

} // namespace detail

/// Searches power-family sub-densities, Gaussian pairs and shifted uniforms
/// for a pair with negative divergence.
inline std::optional<Witness> witness_search(const GenFn& f, const Hyper& h, std::size_t budget,
                                             std::uint64_t seed = kDefaultSeed, std::size_t* evaluations = nullptr) {
    Rng rng(seed);
    const bool probability = h.regime() == Regime::SumOne;
    const bool positive = detail::needs_positive(h);
    std::size_t evals = 0;
    std::optional<Witness> found;
    for (std::size_t k = 0; k < budget && !found; ++k) {
        detail::Pair pair;
        switch (k % 3) {
        case 0: pair = detail::power_pair(rng, probability); break;
        case 1: pair = detail::gaussian_pair(rng, probability); break;
        default: pair = detail::shifted_uniform_pair(rng, probability); break;
        }
        const double tau = rng.log_uniform(-30.0, -2.0);
        if (positive) {
            detail::add_floor(pair.p, pair.w, tau);
            detail::add_floor(pair.q, pair.w, tau);
        }
        ++evals;
        try {
            Measure p = Measure::unbounded({}, pair.p, pair.w);
            Measure q = Measure::unbounded({}, pair.q, pair.w);
            if (!p.is_subprobability() || !q.is_subprobability()) continue;
            const DivergenceValue d = gab(p, q, h, f);
            if (d.value < -kWitnessTol * d.scale)
                found = Witness{std::move(p), std::move(q), h, d.value, d.scale, pair.name};
        } catch (const Error&) {
        }
    }
    if (evaluations) *evaluations = evals;
    return found;
}

struct GridCheck {
    bool ok = true;
    std::string failure;
};

/// Psi' > 0 at every grid point.
inline GridCheck psi_grid_increasing(const GenFn& f, const ValidityOptions& opts = {}) {
    for (double x : detail::linspace(opts.x_min, opts.x_max, opts.points)) {
        double d = 0.0;
        try {
            d = big_psi_deriv(f, x);
        } catch (const Error&) {
            return {false, "Psi' is not finite" + detail::at(x)};
        }
        if (!(d > 0.0)) return {false, "Psi' = " + detail::fmt_num(d) + " is not positive" + detail::at(x)};
    }
    return {};
}

/// Second differences of Psi are >= -tol * scale on the grid.
inline GridCheck psi_grid_convex(const GenFn& f, const ValidityOptions& opts = {}) {
    const auto xs = detail::linspace(opts.x_min, opts.x_max, opts.points);
    std::vector<double> v(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        try {
            v[i] = big_psi(f, xs[i]);
        } catch (const Error&) {
            return {false, "Psi is not finite" + detail::at(xs[i])};
        }
    }
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        const double d2 = v[i - 1] - 2.0 * v[i] + v[i + 1];
        const double scale = 1.0 + std::abs(v[i - 1]) + 2.0 * std::abs(v[i]) + std::abs(v[i + 1]);
        if (d2 < -opts.convexity_tol * scale)
            return {false, "Psi is not convex (second difference " + detail::fmt_num(d2) + ")" + detail::at(xs[i])};
    }
    return {};
}

namespace detail {

// alpha + beta == 1: the sign of psi - psi(1) on the relevant side of 1.
inline GridCheck sum_one_check(const GenFn& f, const Hyper& h, const ValidityOptions& opts) {
    const double a = h.alpha();
    const double at1 = f.eval(1.0);
    if (a == 1.0 || a == 0.0) {
        const double step = 1e-6;
        const double d = f.smoothness == Smoothness::C0
                             ? (f.eval(1.0 + step) - f.eval(1.0 - step)) / (2.0 * step)
                             : f.deriv(1.0);
        if (!(d > 0.0)) return {false, "psi is not increasing at 1 (slope " + fmt_num(d) + ")"};
        return {};
    }
    const bool left = a > 0.0 && a < 1.0;
    for (double t : linspace(left ? opts.x_min : 0.0, left ? 0.0 : opts.x_max, opts.points)) {
        if (t == 0.0) continue;
        double v = 0.0;
        try {
            v = big_psi(f, t);
        } catch (const Error&) {
            return {false, "psi is not finite at e^" + fmt_num(t)};
        }
        if (left && !(v < at1)) return {false, "psi(e^t) >= psi(1) for t = " + fmt_num(t) + " < 0"};
        if (!left && !(v > at1)) return {false, "psi(e^t) <= psi(1) for t = " + fmt_num(t) + " > 0"};
    }
    return {};
}

} // namespace detail

/// Grid check of the characterization conditions, backed by a witness search
/// when a condition fails.
inline ValidityReport check_validity(const GenFn& f, const Hyper& h, const ValidityOptions& opts = {}) {
    ValidityReport report;
    GridCheck grid;
    if (h.regime() == Regime::SumOne) {
        grid = detail::sum_one_check(f, h, opts);
    } else {
        grid = psi_grid_increasing(f, opts);
        if (grid.ok) grid = psi_grid_convex(f, opts);
        if (grid.ok && h.regime() != Regime::General && f.smoothness == Smoothness::C0)
            grid = {false, f.name + " is not differentiable; edge regimes need a C1 psi"};
    }
    if (grid.ok) return report;
    report.failed_condition = grid.failure;
    report.witness = witness_search(f, h, opts.witness_budget, opts.seed, &report.evaluations);
    report.verdict = report.witness ? Verdict::Invalid : Verdict::Inconclusive;
    return report;
}

struct Triple {
    double x;
    double y;
    double lambda;
};

inline std::vector<Triple> sample_triples(std::size_t n, Rng& rng, double log_range = 20.0) {
    std::vector<Triple> out(n);
    for (auto& t : out) {
        t.x = std::exp(rng.uniform(-log_range, log_range));
        t.y = std::exp(rng.uniform(-log_range, log_range));
        t.lambda = rng.uniform();
    }
    return out;
}

struct GeometricCheck {
    bool holds = true;
    std::optional<Triple> witness;
};

/// lambda psi(x) + (1 - lambda) psi(y) >= psi(x^lambda y^{1-lambda}) on every triple.
inline GeometricCheck geometric_convexity_check(const GenFn& f, const std::vector<Triple>& triples) {
    for (const Triple& t : triples) {
        const double l = t.lambda;
        const double fx = l * f.eval(t.x);
        const double fy = (1.0 - l) * f.eval(t.y);
        const double fg = f.eval(std::exp(l * std::log(t.x) + (1.0 - l) * std::log(t.y)));
        const double scale = 1.0 + std::abs(fx) + std::abs(fy) + std::abs(fg);
        if (fx + fy - fg < -1e-10 * scale) return {false, t};
    }
    return {};
}

} // namespace gabdiv
