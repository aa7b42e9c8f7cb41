#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gabdiv/divergence.hpp"
#include "gabdiv/entropy.hpp"
#include "gabdiv/error.hpp"
#include "gabdiv/io.hpp"
#include "gabdiv/maxent.hpp"
#include "gabdiv/properties.hpp"
#include "gabdiv/psi_spec.hpp"
#include "gabdiv/random.hpp"
#include "gabdiv/validity.hpp"

namespace gabdiv::cli {

// sysexits.h values
inline constexpr int kExitUsage = 64;
inline constexpr int kExitData = 65;
inline constexpr int kExitSoftware = 70;

inline int exit_code(ErrorKind k) {
    switch (k) {
    case ErrorKind::DimensionMismatch:
    case ErrorKind::UnsupportedSupport:
    case ErrorKind::InvalidMeasure:
    case ErrorKind::BadParams:
    case ErrorKind::Infeasible: return kExitData;
    case ErrorKind::NonFiniteResult:
    case ErrorKind::FactorizationViolated:
    case ErrorKind::NotConverged:
    case ErrorKind::StepFailed: return kExitSoftware;
    }
    return kExitSoftware;
}

struct Config {
    std::string psi = "log";
    double alpha = 1.0;
    double beta = 1.0;
    std::vector<std::string> inputs;
    std::string format;
    std::uint64_t seed = kDefaultSeed;
    std::size_t grid = 101;
    std::size_t trials = 1000;
    std::vector<std::string> suites;
    std::size_t budget = 100000;
    double tol = 1e-8;
    std::size_t max_iter = 10000;
    bool no_trace = false;
};

namespace detail {

inline void add_hyper(CLI::App* sub, Config& c) {
    sub->add_option("--psi", c.psi, "generating function spec")->capture_default_str();
    sub->add_option("--alpha", c.alpha, "alpha")->capture_default_str();
    sub->add_option("--beta", c.beta, "beta")->capture_default_str();
}

inline void add_format(CLI::App* sub, Config& c, std::vector<std::string> allowed) {
    const std::string fallback = allowed.front();
    sub->add_option("--format", c.format, "output format")->check(CLI::IsMember(std::move(allowed)))->default_str(fallback);
}

inline std::string format_or(const Config& c, const char* fallback) { return c.format.empty() ? fallback : c.format; }

inline int div(const Config& c, std::ostream& out) {
    const Measure p = io::read_measure(c.inputs.at(0));
    const Measure q = io::read_measure(c.inputs.at(1));
    const auto d = gab(p, q, Hyper(c.alpha, c.beta), parse_psi(c.psi));
    out << io::dump(io::to_json(d)) << '\n';
    return 0;
}

inline int entropy(const Config& c, std::ostream& out) {
    const Measure p = io::read_measure(c.inputs.at(0));
    const auto e = gabe(p, Hyper(c.alpha, c.beta), parse_psi(c.psi));
    out << io::dump(io::to_json(e)) << '\n';
    return 0;
}

inline int validate(const Config& c, std::ostream& out) {
    const Hyper h(c.alpha, c.beta);
    ValidityOptions opts;
    opts.seed = c.seed;
    opts.witness_budget = c.budget;
    const auto report = check_validity(parse_psi(c.psi), h, opts);
    out << io::dump(io::to_json(report, h, c.psi)) << '\n';
    switch (report.verdict) {
    case Verdict::Valid: return 0;
    case Verdict::Invalid: return 1;
    case Verdict::Inconclusive: return 2;
    }
    return 2;
}

inline int maxent(const Config& c, std::ostream& out) {
    const MaxEntProblem pr = io::read_problem(c.inputs.at(0));
    MaxEntOptions opts;
    opts.tol = c.tol;
    opts.max_iter = c.max_iter;
    opts.keep_trace = !c.no_trace;
    out << io::dump(io::to_json(solve(pr, opts))) << '\n';
    return 0;
}

inline int curve(const Config& c, std::ostream& out) {
    const auto pts = bernoulli_curve(Hyper(c.alpha, c.beta), parse_psi(c.psi), uniform_grid(c.grid));
    if (format_or(c, "csv") == "csv") {
        out << io::curve_csv(pts);
        return 0;
    }
    io::Json rows = io::Json::array();
    for (const auto& pt : pts) {
        io::Json r;
        r["p"] = io::number(pt.p);
        r["entropy_scaled"] = io::number(pt.entropy_scaled);
        rows.push_back(r);
    }
    out << io::dump(rows) << '\n';
    return 0;
}

inline int properties(const Config& c, std::ostream& out) {
    PropertyOptions opts;
    opts.seed = c.seed;
    opts.trials = c.trials;
    opts.suites = c.suites;
    const auto rows = run_properties(opts);
    bool ok = true;
    for (const auto& r : rows) ok = ok && r.passed();
    if (format_or(c, "table") == "json") {
        io::Json arr = io::Json::array();
        for (const auto& r : rows) {
            io::Json j;
            j["suite"] = r.suite;
            j["psi"] = r.psi;
            j["regime"] = r.regime;
            j["trials"] = r.trials;
            j["failures"] = r.failures;
            j["errors"] = r.errors;
            j["worst"] = io::number(r.worst);
            j["tolerance"] = io::number(r.tolerance);
            j["status"] = r.passed() ? "PASS" : "FAIL";
            arr.push_back(j);
        }
        io::Json top;
        top["seed"] = c.seed;
        top["trials"] = c.trials;
        top["rows"] = arr;
        top["passed"] = ok;
        out << io::dump(top) << '\n';
    } else {
        out << "seed " << c.seed << ", " << c.trials << " trials per row\n" << format_table(rows);
    }
    return ok ? 0 : 1;
}

} // namespace detail

/// Parses argv, runs one subcommand and returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generalized Alpha-Beta divergence toolkit", "gabdiv"};
    app.require_subcommand(1);
    Config c;

    auto* div = app.add_subcommand("div", "divergence between two measure files");
    div->add_option("P", c.inputs, "measure files P Q")->required()->expected(2);
    detail::add_hyper(div, c);
    detail::add_format(div, c, {"json"});

    auto* ent = app.add_subcommand("entropy", "entropy of a measure file");
    ent->add_option("P", c.inputs, "measure file")->required()->expected(1);
    detail::add_hyper(ent, c);
    detail::add_format(ent, c, {"json"});

    auto* val = app.add_subcommand("validate-psi", "check a generating function; exit 0/1/2 = Valid/Invalid/Inconclusive");
    detail::add_hyper(val, c);
    val->add_option("--seed", c.seed, "witness search seed")->capture_default_str();
    val->add_option("--budget", c.budget, "witness search evaluations")->capture_default_str();
    detail::add_format(val, c, {"json"});

    auto* mx = app.add_subcommand("maxent", "solve a maximum-entropy problem file");
    mx->add_option("problem", c.inputs, "problem file")->required()->expected(1);
    mx->add_option("--tol", c.tol, "convergence tolerance")->capture_default_str();
    mx->add_option("--max-iter", c.max_iter, "iteration cap")->capture_default_str();
    mx->add_flag("--no-trace", c.no_trace, "omit the residual trace");
    detail::add_format(mx, c, {"json"});

    auto* cur = app.add_subcommand("curve", "scaled Bernoulli entropy curve");
    detail::add_hyper(cur, c);
    cur->add_option("--grid", c.grid, "number of grid points")->check(CLI::Range(2, 10000000))->capture_default_str();
    detail::add_format(cur, c, {"csv", "json"});

    auto* props = app.add_subcommand("check-properties", "randomized nonnegativity and identity suites");
    props->add_option("--seed", c.seed, "base seed")->capture_default_str();
    props->add_option("--trials", c.trials, "trials per row")->check(CLI::PositiveNumber)->capture_default_str();
    props->add_option("--suite", c.suites, "restrict to these suites")
        ->check(CLI::IsMember(property_suite_names()));
    detail::add_format(props, c, {"table", "json"});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : kExitUsage;
    }
    c.seed = seed_from_env(c.seed);

    try {
        if (*div) return detail::div(c, out);
        if (*ent) return detail::entropy(c, out);
        if (*val) return detail::validate(c, out);
        if (*mx) return detail::maxent(c, out);
        if (*cur) return detail::curve(c, out);
        if (*props) return detail::properties(c, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitSoftware;
    }
    return kExitUsage;
}

} // namespace gabdiv::cli
