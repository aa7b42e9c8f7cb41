#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "gabdiv/divergence.hpp"
#include "gabdiv/error.hpp"
#include "gabdiv/measures.hpp"
#include "gabdiv/psi.hpp"
#include "gabdiv/psi_spec.hpp"
#include "gabdiv/random.hpp"
#include "gabdiv/validity.hpp"

namespace gabdiv {

// Randomized property suites behind `check-properties`. Trial t of row r uses
// the generator seeded with seed + r * trials + t, so rows are reproducible
// in isolation and independent of evaluation order.

/// Hyperparameter families swept by the suites.
enum class RegimeClass {
    PosPos,
    PosNeg,
    NegPos,
    NegNeg,
    AlphaZero,
    BetaZero,
    SumZero,
    BothZero,
    SumOne,
};

inline const char* to_string(RegimeClass c) {
    switch (c) {
    case RegimeClass::PosPos: return "general(+,+)";
    case RegimeClass::PosNeg: return "general(+,-)";
    case RegimeClass::NegPos: return "general(-,+)";
    case RegimeClass::NegNeg: return "general(-,-)";
    case RegimeClass::AlphaZero: return "alpha-zero";
    case RegimeClass::BetaZero: return "beta-zero";
    case RegimeClass::SumZero: return "sum-zero";
    case RegimeClass::BothZero: return "both-zero";
    case RegimeClass::SumOne: return "sum-one";
    }
    return "?";
}

inline std::vector<RegimeClass> all_regime_classes() {
    return {RegimeClass::PosPos,   RegimeClass::PosNeg,  RegimeClass::NegPos,   RegimeClass::NegNeg, RegimeClass::AlphaZero,
            RegimeClass::BetaZero, RegimeClass::SumZero, RegimeClass::BothZero, RegimeClass::SumOne};
}

/// The seven generating functions of the nonnegativity sweep.
inline std::vector<std::string> sweep_psi_specs() {
    return {"identity", "log", "power:0.5", "power:2", "bridge:1,2", "cdf-exp", "cdf-normal"};
}

struct PropertyRow {
    std::string suite;
    std::string psi;
    std::string regime;
    std::size_t trials = 0;
    std::size_t failures = 0;
    std::size_t errors = 0; ///< trials that threw
    double worst = 0.0;     ///< largest normalized violation seen
    double tolerance = 0.0;
    std::string first_error;

    bool passed() const { return failures == 0 && errors == 0; }
};

struct PropertyOptions {
    std::uint64_t seed = kDefaultSeed;
    std::size_t trials = 1000;
    std::vector<std::string> suites; ///< empty means all
};

namespace detail {

inline double away_from(Rng& rng, double lo, double hi, std::initializer_list<double> avoid, double gap = 0.05) {
    for (;;) {
        const double x = rng.uniform(lo, hi);
        bool ok = true;
        for (double a : avoid) ok = ok && std::abs(x - a) > gap;
        if (ok) return x;
    }
}

inline double signed_mag(Rng& rng, double sign) { return sign * rng.uniform(0.1, 2.5); }

inline Hyper sample_hyper(RegimeClass c, Rng& rng) {
    for (;;) {
        double a = 0.0, b = 0.0;
        switch (c) {
        case RegimeClass::PosPos: a = signed_mag(rng, 1); b = signed_mag(rng, 1); break;
        case RegimeClass::PosNeg: a = signed_mag(rng, 1); b = signed_mag(rng, -1); break;
        case RegimeClass::NegPos: a = signed_mag(rng, -1); b = signed_mag(rng, 1); break;
        case RegimeClass::NegNeg: a = signed_mag(rng, -1); b = signed_mag(rng, -1); break;
        case RegimeClass::AlphaZero: b = away_from(rng, -2.5, 2.5, {0.0, 1.0}, 0.1); break;
        case RegimeClass::BetaZero: a = away_from(rng, -2.5, 2.5, {0.0, 1.0}, 0.1); break;
        case RegimeClass::SumZero:
            a = away_from(rng, -2.5, 2.5, {0.0}, 0.1);
            b = -a;
            break;
        case RegimeClass::BothZero: break;
        case RegimeClass::SumOne:
            a = away_from(rng, -1.5, 2.5, {0.0, 1.0}, 0.1);
            b = 1.0 - a;
            if (a + b != 1.0) continue;
            break;
        }
        const double s = a + b;
        const bool general = c == RegimeClass::PosPos || c == RegimeClass::PosNeg || c == RegimeClass::NegPos ||
                             c == RegimeClass::NegNeg;
        if (general && (std::abs(s) < 0.05 || std::abs(s - 1.0) < 0.05)) continue;
        return Hyper(a, b);
    }
}

/// Random positive quadrature weights and a density of the given mass on them,
/// bounded below by a tenth of the uniform level.
inline std::vector<double> random_weights(Rng& rng, std::size_t n) {
    std::vector<double> w(n);
    for (double& v : w) v = rng.uniform(0.5, 2.0);
    return w;
}

inline std::vector<double> random_density(Rng& rng, const std::vector<double>& w, double mass) {
    const std::size_t n = w.size();
    std::vector<double> d = rng.simplex(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = (0.9 * d[i] + 0.1 / static_cast<double>(n)) * mass / w[i];
    return d;
}

struct RandomPair {
    Measure p;
    Measure q;
};

inline RandomPair random_pair(Rng& rng, bool probability, std::size_t n_min = 2, std::size_t n_max = 50) {
    const std::size_t n = n_min + rng.index(n_max - n_min + 1);
    const auto w = random_weights(rng, n);
    const double mp = probability ? 1.0 : rng.uniform(0.2, 1.0);
    const double mq = probability ? 1.0 : rng.uniform(0.2, 1.0);
    return {Measure::unbounded({}, random_density(rng, w, mp), w), Measure::unbounded({}, random_density(rng, w, mq), w)};
}

/// Runs `trial` over `trials` seeds and folds the normalized violations into a row.
/// `trial` returns the violation (positive means the property failed by that much).
inline PropertyRow run_row(std::string suite, std::string psi, std::string regime, double tol, std::uint64_t base,
                           std::size_t trials, const std::function<double(Rng&)>& trial) {
    PropertyRow row;
    row.suite = std::move(suite);
    row.psi = std::move(psi);
    row.regime = std::move(regime);
    row.trials = trials;
    row.tolerance = tol;
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng(base + t);
        try {
            const double v = trial(rng);
            if (v > row.worst) row.worst = v;
            if (!(v <= tol)) ++row.failures;
        } catch (const Error& e) {
            if (row.errors++ == 0) row.first_error = e.what();
        }
    }
    return row;
}

inline ValidityOptions coarse_grid() {
    ValidityOptions o;
    o.points = 201;
    return o;
}

} // namespace detail

/// gab >= -1e-9 * scale on random sub-probability pairs (probability pairs for alpha + beta = 1).
inline std::vector<PropertyRow> nonnegativity_suite(std::uint64_t seed, std::size_t trials,
                                                    std::uint64_t* next = nullptr) {
    std::vector<PropertyRow> rows;
    std::uint64_t base = seed;
    for (const std::string& spec : sweep_psi_specs()) {
        const GenFn f = parse_psi(spec);
        for (RegimeClass c : all_regime_classes()) {
            rows.push_back(detail::run_row("nonnegativity", spec, to_string(c), 1e-9, base, trials, [&](Rng& rng) {
                Hyper h = detail::sample_hyper(c, rng);
                // Only psi increasing on the side of 1 that the sign of alpha selects qualify.
                while (c == RegimeClass::SumOne && !detail::sum_one_check(f, h, detail::coarse_grid()).ok)
                    h = detail::sample_hyper(c, rng);
                const auto pq = detail::random_pair(rng, c == RegimeClass::SumOne);
                const auto d = gab(pq.p, pq.q, h, f);
                return -d.value / d.scale;
            }));
            base += trials;
        }
    }
    if (next) *next = base;
    return rows;
}

/// gab(P, P) = 0 within 1e-12 * scale for probability P.
inline std::vector<PropertyRow> identity_suite(std::uint64_t seed, std::size_t trials, std::uint64_t* next = nullptr) {
    std::vector<PropertyRow> rows;
    std::uint64_t base = seed;
    for (const std::string& spec : sweep_psi_specs()) {
        const GenFn f = parse_psi(spec);
        for (RegimeClass c : all_regime_classes()) {
            rows.push_back(detail::run_row("identity", spec, to_string(c), 1e-12, base, trials, [&](Rng& rng) {
                const Hyper h = detail::sample_hyper(c, rng);
                const auto pq = detail::random_pair(rng, true);
                const auto d = gab(pq.p, pq.p, h, f);
                return std::abs(d.value) / d.scale;
            }));
            base += trials;
        }
    }
    if (next) *next = base;
    return rows;
}

/// Duality, scaling, zooming (w in {2, -1, 0.5}) and reduction gaps within 1e-10 * scale.
inline std::vector<PropertyRow> structural_suite(std::uint64_t seed, std::size_t trials,
                                                 std::uint64_t* next = nullptr) {
    struct Check {
        std::string name;
        std::function<Gap(const Measure&, const Measure&, const Hyper&, const GenFn&, Rng&)> gap;
    };
    const std::vector<Check> checks = {
        {"duality", [](const Measure& p, const Measure& q, const Hyper& h, const GenFn& f,
                       Rng&) { return duality_gap(p, q, h, f); }},
        {"scaling", [](const Measure& p, const Measure& q, const Hyper& h, const GenFn& f,
                       Rng& rng) { return scaling_identity_gap(p, q, h, f, rng.uniform(0.5, 2.0)); }},
        {"zooming(w=2)", [](const Measure& p, const Measure& q, const Hyper& h, const GenFn& f,
                            Rng&) { return zooming_identity_gap(p, q, h, f, 2.0); }},
        {"zooming(w=-1)", [](const Measure& p, const Measure& q, const Hyper& h, const GenFn& f,
                             Rng&) { return zooming_identity_gap(p, q, h, f, -1.0); }},
        {"zooming(w=0.5)", [](const Measure& p, const Measure& q, const Hyper& h, const GenFn& f,
                              Rng&) { return zooming_identity_gap(p, q, h, f, 0.5); }},
        {"reduction", [](const Measure& p, const Measure& q, const Hyper& h, const GenFn& f,
                         Rng&) { return reduction_identity_gap(p, q, h, f); }},
    };
    std::vector<PropertyRow> rows;
    std::uint64_t base = seed;
    for (const Check& check : checks) {
        for (const std::string& spec : {std::string("identity"), std::string("log"), std::string("power:2"),
                                        std::string("cdf-normal")}) {
            const GenFn f = parse_psi(spec);
            rows.push_back(detail::run_row(check.name, spec, "all", 1e-10, base, trials, [&](Rng& rng) {
                const auto classes = all_regime_classes();
                const Hyper h = detail::sample_hyper(classes[rng.index(classes.size())], rng);
                const auto pq = detail::random_pair(rng, false);
                const Gap g = check.gap(pq.p, pq.q, h, f, rng);
                return std::abs(g.gap) / g.scale;
            }));
            base += trials;
        }
    }
    if (next) *next = base;
    return rows;
}

/// GAB with the matching psi against the classical closed forms, as a relative error.
inline std::vector<PropertyRow> special_case_suite(std::uint64_t seed, std::size_t trials,
                                                   std::uint64_t* next = nullptr) {
    struct Oracle {
        std::string family;
        std::string psi;
        std::function<std::vector<double>(Rng&)> params;
    };
    const std::vector<Oracle> oracles = {
        {"AB", "identity",
         [](Rng& rng) {
             const auto classes = all_regime_classes();
             const Hyper h = detail::sample_hyper(classes[rng.index(classes.size())], rng);
             return std::vector<double>{h.alpha(), h.beta()};
         }},
        {"AC", "log",
         [](Rng& rng) {
             const RegimeClass c[] = {RegimeClass::PosPos, RegimeClass::PosNeg, RegimeClass::NegPos,
                                      RegimeClass::NegNeg, RegimeClass::SumOne};
             const Hyper h = detail::sample_hyper(c[rng.index(5)], rng);
             return std::vector<double>{h.alpha(), h.beta()};
         }},
        {"Jones", "power",
         [](Rng& rng) {
             const double phi = rng.uniform(0.2, 3.0);
             const double g = detail::away_from(rng, -2.5, 2.5, {0.0, -1.0}, 0.1);
             return std::vector<double>{phi, g};
         }},
        {"power", "identity",
         [](Rng& rng) { return std::vector<double>{detail::away_from(rng, -1.5, 2.5, {0.0, 1.0}, 0.05)}; }},
    };
    std::vector<PropertyRow> rows;
    std::uint64_t base = seed;
    for (const Oracle& o : oracles) {
        const SpecialCase& sc = special_case(o.family);
        rows.push_back(detail::run_row("special:" + o.family, o.psi, "sampled", 1e-12, base, trials, [&](Rng& rng) {
            const auto v = o.params(rng);
            const auto pq = detail::random_pair(rng, sc.probability_only);
            const auto d = gab(pq.p, pq.q, sc.hyper(v), sc.psi(v));
            const double closed = sc.closed_form(pq.p, pq.q, v);
            const double mine = sc.constant(v) * d.value;
            return std::abs(mine - closed) / std::max(std::abs(closed), 1e-300);
        }));
        base += trials;
    }
    if (next) *next = base;
    return rows;
}

inline std::vector<std::string> property_suite_names() { return {"nonnegativity", "identity", "structural", "special"}; }

/// Runs the selected suites; seeds of later suites continue where earlier ones stopped.
inline std::vector<PropertyRow> run_properties(const PropertyOptions& opts) {
    auto wanted = [&](const std::string& name) {
        if (opts.suites.empty()) return true;
        for (const auto& s : opts.suites)
            if (s == name) return true;
        return false;
    };
    for (const auto& s : opts.suites) {
        bool known = false;
        for (const auto& n : property_suite_names()) known = known || n == s;
        if (!known) fail(ErrorKind::BadParams, "unknown property suite '" + s + "'");
    }
    std::vector<PropertyRow> rows;
    std::uint64_t base = opts.seed;
    auto append = [&](std::vector<PropertyRow> more) { rows.insert(rows.end(), more.begin(), more.end()); };
    if (wanted("nonnegativity")) append(nonnegativity_suite(base, opts.trials, &base));
    if (wanted("identity")) append(identity_suite(base, opts.trials, &base));
    if (wanted("structural")) append(structural_suite(base, opts.trials, &base));
    if (wanted("special")) append(special_case_suite(base, opts.trials, &base));
    return rows;
}

/// Fixed-width text table, one row per (suite, psi, regime).
inline std::string format_table(const std::vector<PropertyRow>& rows) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16s %-12s %-14s %7s %8s %6s %-24s %-8s %s\n", "suite", "psi", "regime", "trials",
                  "failures", "errors", "worst", "tol", "status");
    out += buf;
    std::size_t passed = 0;
    for (const auto& r : rows) {
        char worst[32], tol[32];
        std::snprintf(worst, sizeof worst, "%.17g", r.worst);
        std::snprintf(tol, sizeof tol, "%.0e", r.tolerance);
        std::snprintf(buf, sizeof buf, "%-16s %-12s %-14s %7zu %8zu %6zu %-24s %-8s %s\n", r.suite.c_str(),
                      r.psi.c_str(), r.regime.c_str(), r.trials, r.failures, r.errors, worst, tol,
                      r.passed() ? "PASS" : "FAIL");
        out += buf;
        if (r.passed()) ++passed;
        if (!r.first_error.empty()) out += "  first error: " + r.first_error + "\n";
    }
    std::snprintf(buf, sizeof buf, "%zu/%zu rows passed\n", passed, rows.size());
    out += buf;
    return out;
}

} // namespace gabdiv
