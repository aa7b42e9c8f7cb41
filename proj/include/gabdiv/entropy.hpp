#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include "gabdiv/divergence.hpp"
#include "gabdiv/measures.hpp"
#include "gabdiv/psi.hpp"
#include "gabdiv/random.hpp"
#include "gabdiv/validity.hpp"

namespace gabdiv {

struct EntropyValue {
    double value = 0.0;
    double scaled_value = 0.0; // alpha (alpha + beta) value
    Regime regime = Regime::General;
};

namespace detail {

inline double sum_log(const Measure& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::log(p.density(i)) * p.weight(i);
    return s;
}

inline EntropyValue entropy_value(double v, const Hyper& h) {
    if (std::isnan(v)) fail(ErrorKind::NonFiniteResult, "entropy evaluated to NaN");
    return {v, h.alpha() * h.sum() * v, h.regime()};
}

} // namespace detail

/// Generalized alpha-beta entropy of P. The edge regimes keep the finite part
/// of the limit; psi'(1) and psi''(1) are read at the total base weight.
inline EntropyValue gabe(const Measure& p, const Hyper& h, const GenFn& f) {
    const double a = h.alpha(), b = h.beta(), s = h.sum();
    const Regime r = h.regime();
    if (r != Regime::General && r != Regime::SumOne) detail::require_smooth(f, r);
    switch (r) {
    case Regime::General:
    case Regime::SumOne: {
        detail::require_support(p, a < 0.0 || s < 0.0, "measure");
        const double v = -(f.eval(norm_pow(p, s)) / s - f.eval(norm_pow(p, a)) / a) / b;
        return detail::entropy_value(v, h);
    }
    case Regime::BetaZero: {
        detail::require_support(p, a < 0.0, "measure");
        double lin = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i)
            if (p.density(i) > 0.0) lin += pow0(p.density(i), a) * std::log(p.density(i)) * p.weight(i);
        const double sa = norm_pow(p, a);
        return detail::entropy_value(f.eval(sa) / (a * a) - f.deriv(sa) / a * lin, h);
    }
    case Regime::AlphaZero: {
        detail::require_support(p, true, "measure");
        const double m = p.base_mass();
        return detail::entropy_value(f.deriv(m) / b * detail::sum_log(p) - f.eval(norm_pow(p, b)) / (b * b), h);
    }
    case Regime::SumZero: {
        detail::require_support(p, true, "measure");
        const double m = p.base_mass();
        return detail::entropy_value(f.deriv(m) / a * detail::sum_log(p) - f.eval(norm_pow(p, a)) / (a * a), h);
    }
    case Regime::BothZero: {
        detail::require_support(p, true, "measure");
        const double m = p.base_mass();
        double sq = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double l = std::log(p.density(i));
            sq += l * l * p.weight(i);
        }
        const double lin = detail::sum_log(p);
        return detail::entropy_value(-0.5 * f.deriv(m) * sq - 0.5 * f.d2(m) * lin * lin, h);
    }
    }
    return {};
}

/// (ab/(a-b)) [ln ||p||_b - ln ||p||_a].
inline double log_norm_entropy(const Measure& p, double a, double b) {
    if (a == 0.0 || b == 0.0 || a == b) fail(ErrorKind::BadParams, "log-norm entropy needs a, b nonzero and distinct");
    const double lb = std::log(norm_pow(p, b)) / b;
    const double la = std::log(norm_pow(p, a)) / a;
    return a * b / (a - b) * (lb - la);
}

struct CurvePoint {
    double p;
    double entropy_scaled;
};

/// Scaled entropy of Bernoulli(p) over the grid.
inline std::vector<CurvePoint> bernoulli_curve(const Hyper& h, const GenFn& f, const std::vector<double>& grid) {
    std::vector<CurvePoint> out;
    out.reserve(grid.size());
    for (double p : grid) {
        if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::BadParams, "Bernoulli grid values must lie in [0, 1]");
        const Measure m = Measure::create({"0", "1"}, {1.0 - p, p});
        out.push_back({p, gabe(m, h, f).scaled_value});
    }
    return out;
}

inline std::vector<double> uniform_grid(std::size_t n) {
    if (n < 2) fail(ErrorKind::BadParams, "grid needs at least two points");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    g.back() = 1.0;
    return g;
}

/// eps(P * Q; psi) - eps(P; g o psi) - eps(Q; k o psi), given psi(xy) = g(psi(x)) + k(psi(y)).
inline double additivity_gap(const Measure& p, const Measure& q, const Hyper& h, const GenFn& f, const ValueMap& g,
                             const ValueMap& k) {
    if (h.regime() != Regime::General && h.regime() != Regime::SumOne)
        fail(ErrorKind::BadParams, "additivity is checked in the general regime only");
    for (double e : {h.alpha(), h.sum()}) {
        const double x = norm_pow(p, e), y = norm_pow(q, e);
        const double lhs = f.eval(x * y);
        const double rhs = g.fn(f.eval(x)) + k.fn(f.eval(y));
        if (!(std::abs(lhs - rhs) <= 1e-8 * (1.0 + std::abs(lhs))))
            fail(ErrorKind::FactorizationViolated,
                 "psi(xy) = " + detail::fmt_num(lhs) + " but g(psi(x)) + h(psi(y)) = " + detail::fmt_num(rhs));
    }
    const double joint = gabe(product(p, q), h, f).value;
    return joint - gabe(p, h, post_compose(g, f)).value - gabe(q, h, post_compose(k, f)).value;
}

// ---------------------------------------------------------------------------
// Concavity

struct ConcavityReport {
    std::vector<int> conditions;            // concavity conditions (1-4) whose premises hold
    std::vector<std::string> table_rows;    // convexity-summary rows matching (alpha, beta)
    bool condition_matched = false;
    bool probe_passed = true;
    std::size_t trials = 0;
    std::size_t violations = 0;
    double worst = 0.0; // most negative normalized midpoint excess
    std::optional<std::pair<Measure, Measure>> counterexample;
};

namespace detail {

inline bool psi_convex(const GenFn& f) {
    for (double t : linspace(-30.0, 30.0, 2001)) {
        const double x = std::exp(t);
        const double d2 = f.d2(x);
        if (d2 < -1e-9 * (1.0 + std::abs(d2) + std::abs(f.deriv(x)) / x)) return false;
    }
    return true;
}

inline bool big_psi_nondecreasing_convex(const GenFn& f) {
    for (double x : linspace(-30.0, 30.0, 2001))
        if (big_psi_deriv(f, x) < 0.0) return false;
    return psi_grid_convex(f).ok;
}

inline double ln_norm(const Measure& p, double a) { return std::log(norm_pow(p, a)) / a; }

inline std::vector<std::string> table_rows(double a, double b) {
    const double s = a + b;
    std::vector<std::string> rows;
    auto add = [&](bool cond, const char* row) {
        if (cond) rows.emplace_back(row);
    };
    add(a < 0 && b > 0 && s > 0 && s < 1, "alpha<0, beta>0, alpha+beta in (0,1) | ln-norm of order alpha+beta | convex in P");
    add(a < 0 && b > 0 && s > 1, "alpha<0, beta>0, alpha+beta>1 | ln-norm of order alpha+beta | convex in P");
    add(b < 0 && a > 0 && s > 0 && s < 1, "beta<0, alpha>0, alpha+beta in (0,1) | ln-norm of order alpha+beta | convex in Q");
    add(b < 0 && a > 0 && s > 1, "beta<0, alpha>0, alpha+beta>1 | ln-norm of order alpha+beta | convex in Q");
    add(a > 0 && b < 0 && s < 0, "alpha>0, beta<0, alpha+beta<0 | ln-norm of order alpha | convex in P");
    add(b == 0 && a > 0, "beta=0, alpha>0 | ln-norm of order alpha | convex in Q");
    add(s == 0 && a > 0, "alpha=-beta>0 | ln-norm of order alpha | convex in P");
    add(b > 0 && a < 0 && s < 0, "beta>0, alpha<0, alpha+beta<0 | ln-norm of order beta | convex in Q");
    add(a == 0 && b > 0, "alpha=0, beta>0 | ln-norm of order beta | convex in P");
    add(s == 0 && a < 0, "alpha=-beta<0 | ln-norm of order beta | convex in Q");
    add(a < 0 && b > 0 && s > 1, "alpha<0, beta>0, alpha+beta>1 | psi convex | convex in P");
    add(a > 1 && b < 0 && s < 0, "alpha>1, beta<0, alpha+beta<0 | psi convex | convex in P");
    add(b < 0 && a > 0 && s > 1, "beta<0, alpha>0, alpha+beta>1 | psi convex | convex in Q");
    add(b > 1 && a < 0 && s < 0, "beta>1, alpha<0, alpha+beta<0 | psi convex | convex in Q");
    add(a == 0 && b > 1, "alpha=0, beta>1 | psi convex | convex in P");
    add(b == 0 && a > 1, "beta=0, alpha>1 | psi convex | convex in Q");
    add(s == 0 && a > 1, "alpha=-beta>1 | psi convex | convex in P");
    add(s == 0 && b > 1, "beta=-alpha>1 | psi convex | convex in Q");
    add(a == 0 && b == 0, "alpha=beta=0 | none | not convex");
    return rows;
}

inline Measure midpoint(const Measure& p, const Measure& q) {
    std::vector<double> d(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) d[i] = 0.5 * (p.density(i) + q.density(i));
    return p.with_density(std::move(d));
}

} // namespace detail

/// Classifies (h, f) against the concavity conditions, then probes midpoint
/// concavity on random probability pairs.
inline ConcavityReport concavity_probe(const Hyper& h, const GenFn& f, std::size_t trials,
                                       std::uint64_t seed = kDefaultSeed) {
    ConcavityReport rep;
    rep.trials = trials;
    rep.table_rows = detail::table_rows(h.alpha(), h.beta());
    const double a = h.alpha(), b = h.beta(), s = h.sum();
    Rng rng(seed);
    std::vector<std::pair<Measure, Measure>> pairs;
    pairs.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.index(9);
        pairs.emplace_back(Measure::from_density(rng.simplex(n)), Measure::from_density(rng.simplex(n)));
    }
    auto ln_norm_convex = [&](double order) {
        for (const auto& [p, q] : pairs) {
            const double lm = detail::ln_norm(detail::midpoint(p, q), order);
            const double lp = detail::ln_norm(p, order), lq = detail::ln_norm(q, order);
            if (lm > 0.5 * (lp + lq) + 1e-10 * (1.0 + std::abs(lp) + std::abs(lq))) return false;
        }
        return true;
    };
    bool psi_ok = false;
    try {
        psi_ok = detail::big_psi_nondecreasing_convex(f);
    } catch (const Error&) {
    }
    const bool convex = psi_ok && detail::psi_convex(f);
    const bool gen = h.regime() == Regime::General;
    if (psi_ok && gen && a < 0 && b > 0 && s > 0 && ln_norm_convex(s)) rep.conditions.push_back(1);
    if (convex && gen && a < 0 && b > 0 && s > 1) rep.conditions.push_back(2);
    if (psi_ok && gen && a > 0 && b < 0 && s < 0 && ln_norm_convex(a)) rep.conditions.push_back(3);
    if (convex && gen && a > 1 && b < 0 && s < 0) rep.conditions.push_back(4);
    rep.condition_matched = !rep.conditions.empty();

    for (const auto& [p, q] : pairs) {
        try {
            const double em = gabe(detail::midpoint(p, q), h, f).value;
            const double ep = gabe(p, h, f).value, eq = gabe(q, h, f).value;
            const double scale = 1.0 + std::abs(em) + std::abs(ep) + std::abs(eq);
            const double excess = (em - 0.5 * (ep + eq)) / scale;
            rep.worst = std::min(rep.worst, excess);
            if (excess < -1e-10) {
                ++rep.violations;
                if (!rep.counterexample) rep.counterexample = std::make_pair(p, q);
            }
        } catch (const Error&) {
        }
    }
    rep.probe_passed = rep.violations == 0;
    return rep;
}

// ---------------------------------------------------------------------------
// Maximum entropy over the simplex

struct MaxEntropyReport {
    std::vector<double> argmax;
    double max_value = 0.0;
    double uniform_value = 0.0;
    double claimed_value = 0.0; // psi(n^{alpha+beta-1}) / (alpha (alpha+beta))
    double corner_value = 0.0;  // psi(1) / (alpha (alpha+beta))
    std::size_t converged_starts = 0;
};

namespace detail {

struct SoftmaxObjective {
    std::size_t n;
    const Hyper* h;
    const GenFn* f;
};

inline std::vector<double> softmax(const gsl_vector* x, std::size_t n) {
    std::vector<double> p(n);
    double mx = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) mx = std::max(mx, gsl_vector_get(x, i));
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::exp((i + 1 < n ? gsl_vector_get(x, i) : 0.0) - mx);
        s += p[i];
    }
    for (double& v : p) v /= s;
    return p;
}

inline double neg_entropy(const gsl_vector* x, void* params) {
    const auto* o = static_cast<const SoftmaxObjective*>(params);
    try {
        const Measure m = Measure::unbounded({}, softmax(x, o->n));
        const double v = gabe(m, *o->h, *o->f).value;
        return std::isfinite(v) ? -v : GSL_POSINF;
    } catch (const Error&) {
        return GSL_POSINF;
    }
}

} // namespace detail

/// Multistart Nelder-Mead on softmax coordinates.
inline MaxEntropyReport max_entropy_probe(std::size_t n, const Hyper& h, const GenFn& f, std::size_t starts = 20,
                                          std::uint64_t seed = kDefaultSeed) {
    if (n < 2) fail(ErrorKind::BadParams, "max-entropy probe needs n >= 2");
    MaxEntropyReport rep;
    const double s = h.sum();
    rep.uniform_value = gabe(Measure::from_density(std::vector<double>(n, 1.0 / n)), h, f).value;
    rep.claimed_value = f.eval(std::pow(static_cast<double>(n), s - 1.0)) / (h.alpha() * s);
    rep.corner_value = f.eval(1.0) / (h.alpha() * s);
    rep.max_value = -GSL_POSINF;

    detail::SoftmaxObjective obj{n, &h, &f};
    gsl_multimin_function fn{&detail::neg_entropy, n - 1, &obj};
    gsl_multimin_fminimizer* mz = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n - 1);
    gsl_vector* x = gsl_vector_alloc(n - 1);
    gsl_vector* step = gsl_vector_alloc(n - 1);
    gsl_vector_set_all(step, 1.0);
    Rng rng(seed);
    for (std::size_t k = 0; k < starts; ++k) {
        for (std::size_t i = 0; i + 1 < n; ++i) gsl_vector_set(x, i, rng.uniform(-3.0, 3.0));
        gsl_multimin_fminimizer_set(mz, &fn, x, step);
        int status = GSL_CONTINUE;
        double prev = GSL_POSINF;
        std::size_t stall = 0;
        for (std::size_t it = 0; it < 20000 && status == GSL_CONTINUE; ++it) {
            if (gsl_multimin_fminimizer_iterate(mz)) break;
            status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(mz), 1e-10);
            const double cur = mz->fval;
            stall = std::abs(prev - cur) <= 1e-14 * (1.0 + std::abs(cur)) ? stall + 1 : 0;
            prev = cur;
            if (stall > 200) status = GSL_SUCCESS;
        }
        if (status != GSL_SUCCESS || !std::isfinite(mz->fval)) continue;
        ++rep.converged_starts;
        if (-mz->fval > rep.max_value) {
            rep.max_value = -mz->fval;
            rep.argmax = detail::softmax(gsl_multimin_fminimizer_x(mz), n);
        }
    }
    gsl_vector_free(step);
    gsl_vector_free(x);
    gsl_multimin_fminimizer_free(mz);
    if (rep.converged_starts == 0) fail(ErrorKind::NotConverged, "no Nelder-Mead start converged");
    return rep;
}

} // namespace gabdiv
