#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gabdiv/error.hpp"

namespace gabdiv {

enum class Smoothness { C0, C1, C2 };

inline const char* to_string(Smoothness s) {
    switch (s) {
    case Smoothness::C0: return "C0";
    case Smoothness::C1: return "C1";
    case Smoothness::C2: return "C2";
    }
    return "C0";
}

using ScalarFn = std::function<double(double)>;

/// A generating function psi on [0, inf) with its derivatives.
struct GenFn {
    std::string name;
    ScalarFn eval;
    ScalarFn deriv;
    ScalarFn second; // may be empty
    Smoothness smoothness = Smoothness::C2;

    double operator()(double x) const { return eval(x); }
    double d1(double x) const { return deriv(x); }
    bool has_second() const { return static_cast<bool>(second); }

    /// psi''(x), falling back to a central difference of psi'.
    double d2(double x) const {
        if (second) return second(x);
        const double h = 1e-5 * std::max(x, 1e-3);
        return (deriv(x + h) - deriv(x - h)) / (2.0 * h);
    }
};

inline constexpr double kPsiClip = 700.0;

/// Psi(x) = psi(e^x), with x clipped to [-700, 700].
inline double big_psi(const GenFn& f, double x) {
    const double t = std::clamp(x, -kPsiClip, kPsiClip);
    const double v = f.eval(std::exp(t));
    if (std::isnan(v) || std::isinf(v)) fail(ErrorKind::NonFiniteResult, f.name + ": Psi overflow at " + std::to_string(x));
    return v;
}

/// Psi'(x) = psi'(e^x) e^x.
inline double big_psi_deriv(const GenFn& f, double x) {
    const double e = std::exp(std::clamp(x, -kPsiClip, kPsiClip));
    const double v = f.deriv(e) * e;
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteResult, f.name + ": Psi' overflow at " + std::to_string(x));
    return v;
}

/// Psi''(x) = psi''(e^x) e^{2x} + psi'(e^x) e^x.
inline double big_psi_second(const GenFn& f, double x) {
    const double e = std::exp(std::clamp(x, -kPsiClip, kPsiClip));
    const double v = f.d2(e) * e * e + f.deriv(e) * e;
    if (!std::isfinite(v)) fail(ErrorKind::NonFiniteResult, f.name + ": Psi'' overflow at " + std::to_string(x));
    return v;
}

namespace detail {

inline double std_normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }
inline double std_normal_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); }

inline void expect_params(const std::string& name, const std::vector<double>& params, std::size_t n) {
    if (params.size() != n)
        fail(ErrorKind::BadParams, name + " expects " + std::to_string(n) + " parameter(s), got " +
                                       std::to_string(params.size()));
}

inline std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline GenFn make_identity() {
    return {"identity", [](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; },
            Smoothness::C2};
}

inline GenFn make_log() {
    return {"log", [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; },
            [](double x) { return -1.0 / (x * x); }, Smoothness::C2};
}

inline GenFn make_power(double phi) {
    if (phi == 0.0 || !std::isfinite(phi)) fail(ErrorKind::BadParams, "power needs a finite nonzero exponent");
    return {"power:" + fmt_num(phi), [phi](double x) { return std::pow(x, phi) / phi; },
            [phi](double x) { return std::pow(x, phi - 1.0); },
            [phi](double x) { return (phi - 1.0) * std::pow(x, phi - 2.0); }, Smoothness::C2};
}

inline GenFn make_bridge(double c1, double c2) {
    if (!(c1 > 0.0) || !(c2 > 0.0) || !std::isfinite(c1) || !std::isfinite(c2))
        fail(ErrorKind::BadParams, "bridge needs c1 > 0 and c2 > 0");
    return {"bridge:" + fmt_num(c1) + "," + fmt_num(c2),
            [c1, c2](double x) { return std::log(c1 + std::pow(x, c2)); },
            [c1, c2](double x) {
                const double u = std::pow(x, c2);
                return c2 * std::pow(x, c2 - 1.0) / (c1 + u);
            },
            [c1, c2](double x) {
                const double u = std::pow(x, c2);
                const double s = c1 + u;
                return c2 * std::pow(x, c2 - 2.0) * ((c2 - 1.0) * c1 - u) / (s * s);
            },
            Smoothness::C2};
}

// Psi(t) = int_{-inf}^t F(s) ds for the unit exponential law.
inline GenFn make_cdf_exp() {
    return {"cdf-exp", [](double x) { return x < 1.0 ? 0.0 : 1.0 / x + std::log(x) - 1.0; },
            [](double x) { return x < 1.0 ? 0.0 : (x - 1.0) / (x * x); },
            [](double x) { return x < 1.0 ? 0.0 : (2.0 - x) / (x * x * x); }, Smoothness::C1};
}

// Same construction for the standard normal law.
inline GenFn make_cdf_normal() {
    return {"cdf-normal",
            [](double x) {
                if (x == 0.0) return 0.0;
                const double t = std::log(x);
                return t * std_normal_cdf(t) + std_normal_pdf(t);
            },
            [](double x) {
                if (x == 0.0) return 0.0;
                return std_normal_cdf(std::log(x)) / x;
            },
            [](double x) {
                if (x == 0.0) return 0.0;
                const double t = std::log(x);
                return (std_normal_pdf(t) - std_normal_cdf(t)) / (x * x);
            },
            Smoothness::C2};
}

// params: a1,b1,c1, a2,b2,c2, ..., a_{k+1},b_{k+1}
inline GenFn make_pwl(const std::vector<double>& params) {
    if (params.size() < 2 || (params.size() - 2) % 3 != 0)
        fail(ErrorKind::BadParams, "pwl expects triples a,b,c followed by a final slope and intercept");
    const std::size_t k = (params.size() - 2) / 3;
    std::vector<double> a(k + 1), b(k + 1), c(k);
    for (std::size_t i = 0; i < k; ++i) {
        a[i] = params[3 * i];
        b[i] = params[3 * i + 1];
        c[i] = params[3 * i + 2];
    }
    a[k] = params[3 * k];
    b[k] = params[3 * k + 1];
    for (double v : params)
        if (!std::isfinite(v)) fail(ErrorKind::BadParams, "pwl parameters must be finite");
    for (std::size_t i = 0; i < k; ++i) {
        if (!(a[i] < a[i + 1])) fail(ErrorKind::BadParams, "pwl slopes must be strictly increasing");
        if (i + 1 < k && !(c[i] < c[i + 1])) fail(ErrorKind::BadParams, "pwl breakpoints must be increasing");
        const double l = a[i] * c[i] + b[i];
        const double r = a[i + 1] * c[i] + b[i + 1];
        if (std::abs(l - r) > 1e-12 * (1.0 + std::abs(l)))
            fail(ErrorKind::BadParams, "pwl pieces must meet at every breakpoint");
    }
    auto piece = [c](double t) {
        return static_cast<std::size_t>(std::lower_bound(c.begin(), c.end(), t) - c.begin());
    };
    std::string name = "pwl:";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) name += (i % 3 == 0) ? ";" : ",";
        name += fmt_num(params[i]);
    }
    return {name,
            [a, b, piece](double x) {
                const double t = std::log(x);
                const std::size_t i = piece(t);
                return a[i] * t + b[i];
            },
            [a, piece](double x) { return a[piece(std::log(x))] / x; },
            [a, piece](double x) { return -a[piece(std::log(x))] / (x * x); }, Smoothness::C0};
}

} // namespace detail

/// Built-in generating functions: identity, log, power (phi), bridge (c1, c2),
/// cdf-exp, cdf-normal, pwl (a1, b1, c1, ..., a_{k+1}, b_{k+1}).
inline GenFn builtin(const std::string& name, const std::vector<double>& params = {}) {
    if (name == "identity") {
        detail::expect_params(name, params, 0);
        return detail::make_identity();
    }
    if (name == "log") {
        detail::expect_params(name, params, 0);
        return detail::make_log();
    }
    if (name == "power") {
        detail::expect_params(name, params, 1);
        return detail::make_power(params[0]);
    }
    if (name == "bridge") {
        detail::expect_params(name, params, 2);
        return detail::make_bridge(params[0], params[1]);
    }
    if (name == "cdf-exp") {
        detail::expect_params(name, params, 0);
        return detail::make_cdf_exp();
    }
    if (name == "cdf-normal") {
        detail::expect_params(name, params, 0);
        return detail::make_cdf_normal();
    }
    if (name == "pwl") return detail::make_pwl(params);
    fail(ErrorKind::BadParams, "unknown generating function '" + name + "'");
}

/// sum_k c_k psi_k with every c_k > 0.
inline GenFn combine_linear(std::vector<GenFn> fs, std::vector<double> coeffs) {
    if (fs.empty() || fs.size() != coeffs.size())
        fail(ErrorKind::BadParams, "combine_linear needs one positive coefficient per function");
    std::string name = "lin:";
    Smoothness sm = Smoothness::C2;
    bool all_second = true;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (!(coeffs[i] > 0.0) || !std::isfinite(coeffs[i]))
            fail(ErrorKind::BadParams, "combine_linear coefficients must be positive");
        if (i) name += "+";
        name += detail::fmt_num(coeffs[i]) + "*" + fs[i].name;
        sm = std::min(sm, fs[i].smoothness);
        all_second = all_second && fs[i].has_second();
    }
    auto sum = [fs, coeffs](auto member) {
        return [fs, coeffs, member](double x) {
            double s = 0.0;
            for (std::size_t i = 0; i < fs.size(); ++i) s += coeffs[i] * (fs[i].*member)(x);
            return s;
        };
    };
    GenFn out{name, sum(&GenFn::eval), sum(&GenFn::deriv), {}, sm};
    if (all_second) out.second = sum(&GenFn::second);
    return out;
}

/// psi(x) = Psi_outer(psi_inner(x)) = outer(exp(inner(x))).
inline GenFn compose(GenFn outer, GenFn inner) {
    GenFn out;
    out.name = "comp:" + outer.name + "," + inner.name;
    out.smoothness = std::min(outer.smoothness, inner.smoothness);
    out.eval = [outer, inner](double x) { return big_psi(outer, inner.eval(x)); };
    out.deriv = [outer, inner](double x) { return big_psi_deriv(outer, inner.eval(x)) * inner.deriv(x); };
    out.second = [outer, inner](double x) {
        const double y = inner.eval(x);
        const double d = inner.deriv(x);
        return big_psi_second(outer, y) * d * d + big_psi_deriv(outer, y) * inner.d2(x);
    };
    return out;
}

/// A scalar map with two derivatives, applied on the value side of a generating function.
struct ValueMap {
    ScalarFn fn;
    ScalarFn d1;
    ScalarFn d2;
};

inline ValueMap identity_map() {
    return {[](double y) { return y; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
}

/// x -> g(psi(x)).
inline GenFn post_compose(const ValueMap& g, const GenFn& f) {
    GenFn out;
    out.name = "post:" + f.name;
    out.smoothness = f.smoothness;
    out.eval = [g, f](double x) { return g.fn(f.eval(x)); };
    out.deriv = [g, f](double x) { return g.d1(f.eval(x)) * f.deriv(x); };
    out.second = [g, f](double x) {
        const double d = f.deriv(x);
        return g.d2(f.eval(x)) * d * d + g.d1(f.eval(x)) * f.d2(x);
    };
    return out;
}

} // namespace gabdiv
