#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gabdiv/error.hpp"
#include "gabdiv/measures.hpp"
#include "gabdiv/psi.hpp"

namespace gabdiv {

struct DivergenceValue {
    double value = 0.0;
    Regime regime = Regime::General;
    std::vector<std::string> warnings;
    /// 1 + sum of the magnitudes of the weighted psi terms; tolerances are relative to it.
    double scale = 1.0;
};

/// A difference of two expressions that should agree, with the scale of its terms.
struct Gap {
    double gap = 0.0;
    double scale = 1.0;
};

namespace detail {

inline void require_support(const Measure& m, bool negative_exponent, const char* what) {
    if (negative_exponent && !m.strictly_positive())
        fail(ErrorKind::UnsupportedSupport, std::string(what) + " has a zero atom under a negative exponent");
}

inline void require_smooth(const GenFn& f, Regime r) {
    if (f.smoothness == Smoothness::C0)
        fail(ErrorKind::BadParams, f.name + " is only continuous; the " + std::string(to_string(r)) +
                                       " regime needs a differentiable psi");
}

inline DivergenceValue finish(double value, double scale, Regime r) {
    if (std::isnan(value) || std::isnan(scale)) fail(ErrorKind::NonFiniteResult, "divergence evaluated to NaN");
    DivergenceValue out;
    out.value = value;
    out.regime = r;
    out.scale = scale;
    return out;
}

// [psi'(S_a(p)) d*(p^a, q^a) - psi(S_a(p)) + psi(S_a(q))] / a^2
inline DivergenceValue beta_zero(const Measure& p, const Measure& q, double a, const GenFn& f, Regime r) {
    require_support(p, a < 0.0, "first measure");
    require_support(q, a < 0.0, "second measure");
    double sp = 0.0, sq = 0.0, kl_term = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pa = pow0(p.density(i), a);
        const double qa = pow0(q.density(i), a);
        const double mu = p.weight(i);
        sp += pa * mu;
        sq += qa * mu;
        if (pa == 0.0) continue;
        if (qa == 0.0) {
            kl_term = kInf;
            continue;
        }
        kl_term += pa * a * (std::log(p.density(i)) - std::log(q.density(i))) * mu;
    }
    const double d1 = f.deriv(sp);
    const double t1 = (d1 == 0.0 && std::isinf(kl_term)) ? 0.0 : d1 * kl_term;
    const double t2 = f.eval(sp);
    const double t3 = f.eval(sq);
    const double a2 = a * a;
    return finish((t1 - t2 + t3) / a2, 1.0 + (std::abs(t1) + std::abs(t2) + std::abs(t3)) / a2, r);
}

// [psi'(M) a sum ln(q/p) + psi(sum (p/q)^a) - psi(M)] / a^2, M the total base weight
inline DivergenceValue sum_zero(const Measure& p, const Measure& q, double a, const GenFn& f) {
    require_support(p, true, "first measure");
    require_support(q, true, "second measure");
    const double m = p.base_mass();
    double log_ratio = 0.0, ratio_pow = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double lp = std::log(p.density(i));
        const double lq = std::log(q.density(i));
        log_ratio += (lq - lp) * p.weight(i);
        ratio_pow += std::exp(a * (lp - lq)) * p.weight(i);
    }
    const double t1 = f.deriv(m) * a * log_ratio;
    const double t2 = f.eval(ratio_pow);
    const double t3 = f.eval(m);
    const double a2 = a * a;
    return finish((t1 + t2 - t3) / a2, 1.0 + (std::abs(t1) + std::abs(t2) + std::abs(t3)) / a2, Regime::SumZero);
}

// psi'(M)/2 sum (ln p - ln q)^2 + psi''(M)/2 (sum (ln p - ln q))^2
inline DivergenceValue both_zero(const Measure& p, const Measure& q, const GenFn& f) {
    require_support(p, true, "first measure");
    require_support(q, true, "second measure");
    const double m = p.base_mass();
    double sq = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::log(p.density(i)) - std::log(q.density(i));
        sq += d * d * p.weight(i);
        lin += d * p.weight(i);
    }
    const double t1 = 0.5 * f.deriv(m) * sq;
    const double t2 = 0.5 * f.d2(m) * lin * lin;
    return finish(t1 + t2, 1.0 + std::abs(t1) + std::abs(t2), Regime::BothZero);
}

inline DivergenceValue general(const Measure& p, const Measure& q, double a, double b, const GenFn& f, Regime r) {
    const double s = a + b;
    require_support(p, a < 0.0 || s < 0.0, "first measure");
    require_support(q, b < 0.0 || s < 0.0, "second measure");
    const double t1 = f.eval(norm_pow(p, s)) / (b * s);
    const double t2 = f.eval(norm_pow(q, s)) / (a * s);
    const double t3 = f.eval(inner(p, q, a, b)) / (a * b);
    return finish(t1 + t2 - t3, 1.0 + std::abs(t1) + std::abs(t2) + std::abs(t3), r);
}

} // namespace detail

/// The generalized alpha-beta divergence of P from Q.
inline DivergenceValue gab(const Measure& p, const Measure& q, const Hyper& h, const GenFn& f) {
    require_same_alphabet(p, q);
    const Regime r = h.regime();
    const double a = h.alpha();
    const double b = h.beta();
    DivergenceValue out;
    switch (r) {
    case Regime::General:
    case Regime::SumOne: out = detail::general(p, q, a, b, f, r); break;
    case Regime::BetaZero:
        detail::require_smooth(f, r);
        out = detail::beta_zero(p, q, a, f, r);
        break;
    case Regime::AlphaZero:
        detail::require_smooth(f, r);
        out = detail::beta_zero(q, p, b, f, r);
        break;
    case Regime::SumZero:
        detail::require_smooth(f, r);
        out = detail::sum_zero(p, q, a, f);
        break;
    case Regime::BothZero:
        detail::require_smooth(f, r);
        out = detail::both_zero(p, q, f);
        break;
    }
    if (h.near_boundary())
        out.warnings.push_back("hyperparameters lie within 1e-6 of a regime boundary; general formula may be ill-conditioned");
    return out;
}

// ---------------------------------------------------------------------------
// Classical families

/// A classical divergence that equals `constant * gab` for the listed psi and (alpha, beta).
struct SpecialCase {
    std::string name;
    std::size_t n_params;
    std::function<GenFn(const std::vector<double>&)> psi;
    std::function<Hyper(const std::vector<double>&)> hyper;
    std::function<double(const std::vector<double>&)> constant;
    std::function<double(const Measure&, const Measure&, const std::vector<double>&)> closed_form;
    bool probability_only = false;
};

namespace detail {

inline double sum_log_ratio(const Measure& p, const Measure& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::log(q.density(i) / p.density(i)) * p.weight(i);
    return s;
}

inline double sum_ratio_pow(const Measure& p, const Measure& q, double a) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::pow(p.density(i) / q.density(i), a) * p.weight(i);
    return s;
}

inline double ab_closed_form(const Measure& p, const Measure& q, double a, double b) {
    require_same_alphabet(p, q);
    if (a == 0.0 && b == 0.0) {
        require_support(p, true, "first measure");
        require_support(q, true, "second measure");
        double s = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double d = std::log(p.density(i)) - std::log(q.density(i));
            s += d * d * p.weight(i);
        }
        return 0.5 * s;
    }
    if (b == 0.0 || a == 0.0) {
        const Measure& x = b == 0.0 ? p : q;
        const Measure& y = b == 0.0 ? q : p;
        const double c = b == 0.0 ? a : b;
        require_support(x, c < 0.0, "measure");
        require_support(y, c < 0.0, "measure");
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double xc = pow0(x.density(i), c);
            const double yc = pow0(y.density(i), c);
            if (xc > 0.0) s += (yc == 0.0 ? kInf : xc * std::log(xc / yc)) * x.weight(i);
        }
        return (s - norm_pow(x, c) + norm_pow(y, c)) / (c * c);
    }
    if (a + b == 0.0) {
        require_support(p, true, "first measure");
        require_support(q, true, "second measure");
        return (a * sum_log_ratio(p, q) + sum_ratio_pow(p, q, a) - p.base_mass()) / (a * a);
    }
    const double s = a + b;
    require_support(p, a < 0.0 || s < 0.0, "first measure");
    require_support(q, b < 0.0 || s < 0.0, "second measure");
    const double la = a / s;
    const double lb = 1.0 - la;
    return (la * norm_pow(p, s) + lb * norm_pow(q, s) - inner(p, q, a, b)) / (a * b);
}

inline void need(bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::BadParams, what);
}

inline double log_checked(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) fail(ErrorKind::NonFiniteResult, "logarithm of a nonpositive or infinite term");
    return std::log(x);
}

inline std::vector<SpecialCase> build_registry() {
    using P = std::vector<double>;
    std::vector<SpecialCase> reg;
    auto one = [](const P&) { return 1.0; };

    reg.push_back({"AB", 2, [](const P&) { return builtin("identity"); },
                   [](const P& v) { return Hyper(v[0], v[1]); }, one,
                   [](const Measure& p, const Measure& q, const P& v) { return ab_closed_form(p, q, v[0], v[1]); }});

    reg.push_back({"KL", 0, [](const P&) { return builtin("identity"); },
                   [](const P&) { return Hyper(1.0, 0.0); }, one,
                   [](const Measure& p, const Measure& q, const P&) { return kl(p, q); }, true});

    // Cressie-Read power divergence, lambda in {0, 1} taken as the limiting forms.
    reg.push_back({"power", 1, [](const P&) { return builtin("identity"); },
                   [](const P& v) { return Hyper(v[0], 1.0 - v[0]); }, one,
                   [](const Measure& p, const Measure& q, const P& v) {
                       const double l = v[0];
                       if (l == 1.0) return kl(p, q) - p.mass() + q.mass();
                       if (l == 0.0) return kl(q, p) - q.mass() + p.mass();
                       return (inner(p, q, l, 1.0 - l) - l * p.mass() + (l - 1.0) * q.mass()) / (l * (l - 1.0));
                   }});

    reg.push_back({"beta", 1, [](const P&) { return builtin("identity"); },
                   [](const P& v) { return Hyper(1.0, v[0]); }, one,
                   [](const Measure& p, const Measure& q, const P& v) {
                       const double b = v[0];
                       require_same_alphabet(p, q);
                       if (b == 0.0) return kl(p, q) - p.mass() + q.mass();
                       if (b == -1.0) {
                           require_support(p, true, "first measure");
                           require_support(q, true, "second measure");
                           return sum_log_ratio(p, q) + sum_ratio_pow(p, q, 1.0) - p.base_mass();
                       }
                       require_support(p, 1.0 + b < 0.0, "first measure");
                       require_support(q, b < 0.0, "second measure");
                       return (norm_pow(p, 1.0 + b) / b - (1.0 + b) / b * inner(p, q, 1.0, b) + norm_pow(q, 1.0 + b)) /
                              (1.0 + b);
                   }});

    reg.push_back({"DPD", 1, [](const P&) { return builtin("identity"); },
                   [](const P& v) {
                       need(v[0] != 0.0 && v[0] != -1.0, "DPD needs a not in {0, -1}");
                       return Hyper(v[0], 1.0);
                   },
                   [](const P& v) { return 1.0 + v[0]; },
                   [](const Measure& p, const Measure& q, const P& v) {
                       const double a = v[0];
                       need(a != 0.0 && a != -1.0, "DPD needs a not in {0, -1}");
                       require_support(p, a < 0.0 || 1.0 + a < 0.0, "first measure");
                       require_support(q, 1.0 + a < 0.0, "second measure");
                       return norm_pow(p, 1.0 + a) - (1.0 + 1.0 / a) * inner(p, q, a, 1.0) + norm_pow(q, 1.0 + a) / a;
                   }});

    // S-divergence with alpha = B, beta = A = 1 + a - B.
    auto s_check = [](const P& v) {
        const double a = v[0], b = v[1], c = 1.0 + v[0] - v[1];
        need(b != 0.0 && c != 0.0 && 1.0 + a != 0.0, "S-type families need A, B and 1 + a nonzero");
    };
    reg.push_back({"S", 2, [](const P&) { return builtin("identity"); },
                   [s_check](const P& v) {
                       s_check(v);
                       return Hyper(v[1], 1.0 + v[0] - v[1]);
                   },
                   [](const P& v) { return 1.0 + v[0]; },
                   [s_check](const Measure& p, const Measure& q, const P& v) {
                       s_check(v);
                       const double a = v[0], b = v[1], c = 1.0 + v[0] - v[1];
                       require_support(p, b < 0.0 || 1.0 + a < 0.0, "first measure");
                       require_support(q, c < 0.0 || 1.0 + a < 0.0, "second measure");
                       return norm_pow(p, 1.0 + a) / c - (1.0 + a) / (c * b) * inner(p, q, b, c) + norm_pow(q, 1.0 + a) / b;
                   }});

    reg.push_back({"AC", 2, [](const P&) { return builtin("log"); },
                   [](const P& v) {
                       need(Hyper::classify(v[0], v[1]) == Regime::General ||
                                Hyper::classify(v[0], v[1]) == Regime::SumOne,
                            "AC needs alpha, beta and alpha + beta nonzero");
                       return Hyper(v[0], v[1]);
                   },
                   one,
                   [](const Measure& p, const Measure& q, const P& v) {
                       const double a = v[0], b = v[1], s = a + b;
                       need(a != 0.0 && b != 0.0 && s != 0.0, "AC needs alpha, beta and alpha + beta nonzero");
                       require_support(p, a < 0.0 || s < 0.0, "first measure");
                       require_support(q, b < 0.0 || s < 0.0, "second measure");
                       return log_checked(norm_pow(p, s)) / (b * s) + log_checked(norm_pow(q, s)) / (a * s) -
                              log_checked(inner(p, q, a, b)) / (a * b);
                   }});

    reg.push_back({"LSD", 2, [](const P&) { return builtin("log"); },
                   [s_check](const P& v) {
                       s_check(v);
                       return Hyper(v[1], 1.0 + v[0] - v[1]);
                   },
                   [](const P& v) { return 1.0 + v[0]; },
                   [s_check](const Measure& p, const Measure& q, const P& v) {
                       s_check(v);
                       const double a = v[0], b = v[1], c = 1.0 + v[0] - v[1];
                       require_support(p, b < 0.0 || 1.0 + a < 0.0, "first measure");
                       require_support(q, c < 0.0 || 1.0 + a < 0.0, "second measure");
                       return log_checked(norm_pow(p, 1.0 + a)) / c + log_checked(norm_pow(q, 1.0 + a)) / b -
                              (1.0 + a) / (c * b) * log_checked(inner(p, q, b, c));
                   }});

    reg.push_back({"gamma", 1, [](const P&) { return builtin("log"); },
                   [](const P& v) {
                       need(v[0] != 0.0 && v[0] != 1.0, "gamma needs gamma not in {0, 1}");
                       return Hyper(v[0], 1.0 - v[0]);
                   },
                   one,
                   [](const Measure& p, const Measure& q, const P& v) {
                       const double g = v[0];
                       need(g != 0.0 && g != 1.0, "gamma needs gamma not in {0, 1}");
                       require_support(p, g < 0.0, "first measure");
                       require_support(q, 1.0 - g < 0.0, "second measure");
                       const double c = log_checked(inner(p, q, g, 1.0 - g));
                       return (c - g * log_checked(p.mass()) - (1.0 - g) * log_checked(q.mass())) / (g * (g - 1.0));
                   }});

    // Jones et al. (phi, gamma) family.
    reg.push_back({"Jones", 2, [](const P& v) { return builtin("power", {v[0]}); },
                   [](const P& v) {
                       need(v[0] != 0.0 && v[1] != 0.0 && v[1] != -1.0, "Jones needs phi != 0 and gamma not in {0, -1}");
                       return Hyper(v[1], 1.0);
                   },
                   [](const P& v) { return 1.0 + v[1]; },
                   [](const Measure& p, const Measure& q, const P& v) {
                       const double phi = v[0], g = v[1];
                       need(phi != 0.0 && g != 0.0 && g != -1.0, "Jones needs phi != 0 and gamma not in {0, -1}");
                       require_support(p, g < 0.0 || 1.0 + g < 0.0, "first measure");
                       require_support(q, 1.0 + g < 0.0, "second measure");
                       return std::pow(norm_pow(p, 1.0 + g), phi) / phi -
                              (1.0 + g) / (g * phi) * std::pow(inner(p, q, g, 1.0), phi) +
                              std::pow(norm_pow(q, 1.0 + g), phi) / (g * phi);
                   }});
    return reg;
}

} // namespace detail

inline const std::vector<SpecialCase>& special_cases() {
    static const std::vector<SpecialCase> reg = detail::build_registry();
    return reg;
}

inline const SpecialCase& special_case(const std::string& name) {
    for (const auto& c : special_cases())
        if (c.name == name) return c;
    fail(ErrorKind::BadParams, "unknown special case '" + name + "'");
}

/// Closed form of a classical family, evaluated by direct summation.
inline double gab_special(const std::string& name, const Measure& p, const Measure& q,
                          const std::vector<double>& params = {}) {
    const SpecialCase& c = special_case(name);
    if (params.size() != c.n_params)
        fail(ErrorKind::BadParams, name + " expects " + std::to_string(c.n_params) + " parameter(s)");
    require_same_alphabet(p, q);
    return c.closed_form(p, q, params);
}

// ---------------------------------------------------------------------------
// Structural identities

/// d(P, Q; alpha, beta) - d(Q, P; beta, alpha).
inline Gap duality_gap(const Measure& p, const Measure& q, const Hyper& h, const GenFn& f) {
    const auto l = gab(p, q, h, f);
    const auto r = gab(q, p, h.swapped(), f);
    return {l.value - r.value, std::max(l.scale, r.scale)};
}

/// psi_k(x) = psi(k x).
inline GenFn scale_argument(const GenFn& f, double k) {
    GenFn out;
    out.name = f.name + "@" + detail::fmt_num(k);
    out.smoothness = f.smoothness;
    out.eval = [f, k](double x) { return f.eval(k * x); };
    out.deriv = [f, k](double x) { return k * f.deriv(k * x); };
    out.second = [f, k](double x) { return k * k * f.d2(k * x); };
    return out;
}

inline Measure scaled(const Measure& m, double c) {
    std::vector<double> d(m.density().begin(), m.density().end());
    for (double& v : d) v *= c;
    return m.with_density(std::move(d));
}

/// d(cP, cQ; psi) - d(P, Q; psi_{c^{alpha+beta}}), c > 0.
inline Gap scaling_identity_gap(const Measure& p, const Measure& q, const Hyper& h, const GenFn& f, double c) {
    if (!(c > 0.0)) fail(ErrorKind::BadParams, "scaling constant must be positive");
    const auto l = gab(scaled(p, c), scaled(q, c), h, f);
    const auto r = gab(p, q, h, scale_argument(f, std::pow(c, h.sum())));
    return {l.value - r.value, std::max(l.scale, r.scale)};
}

/// d(P^w, Q^w; alpha, beta) - w^2 d(P, Q; w alpha, w beta).
inline Gap zooming_identity_gap(const Measure& p, const Measure& q, const Hyper& h, const GenFn& f, double w) {
    if (w == 0.0 || !std::isfinite(w)) fail(ErrorKind::BadParams, "zoom exponent must be nonzero");
    const auto l = gab(zoom_unnorm(p, w).measure, zoom_unnorm(q, w).measure, h, f);
    const auto r = gab(p, q, Hyper(w * h.alpha(), w * h.beta()), f);
    return {l.value - w * w * r.value, std::max(l.scale, w * w * r.scale)};
}

/// Largest gap among d(P, Q) = d(P^b, Q^b; a/b, 1)/b^2 and d(P^a, Q^a; 1, b/a)/a^2.
inline Gap reduction_identity_gap(const Measure& p, const Measure& q, const Hyper& h, const GenFn& f) {
    const auto base = gab(p, q, h, f);
    Gap out{0.0, base.scale};
    auto consider = [&](double w, const Hyper& reduced) {
        const auto r = gab(zoom_unnorm(p, w).measure, zoom_unnorm(q, w).measure, reduced, f);
        const double g = base.value - r.value / (w * w);
        out.scale = std::max(out.scale, r.scale / (w * w));
        if (std::abs(g) > std::abs(out.gap)) out.gap = g;
    };
    if (h.beta() != 0.0) consider(h.beta(), Hyper(h.alpha() / h.beta(), 1.0));
    if (h.alpha() != 0.0) consider(h.alpha(), Hyper(1.0, h.beta() / h.alpha()));
    return out;
}

// ---------------------------------------------------------------------------
// Contamination and the Pythagorean relation

/// Density ((1 - eps) p0^a + eps delta^a)^{1/a}.
inline Measure alpha_convex_mix(const Measure& p0, const Measure& delta, double eps, double alpha) {
    require_same_alphabet(p0, delta);
    if (!(eps >= 0.0 && eps <= 1.0)) fail(ErrorKind::BadParams, "eps must lie in [0, 1]");
    if (alpha == 0.0) fail(ErrorKind::BadParams, "alpha must be nonzero");
    if (eps == 0.0) return p0;
    if (eps == 1.0) return delta;
    std::vector<double> d(p0.size());
    for (std::size_t i = 0; i < p0.size(); ++i) {
        const double x = p0.density(i);
        const double y = delta.density(i);
        if (alpha < 0.0 && (x == 0.0 || y == 0.0)) {
            if (x == 0.0 && y == 0.0) {
                d[i] = 0.0;
                continue;
            }
            fail(ErrorKind::UnsupportedSupport, "negative alpha mix with a one-sided zero atom");
        }
        d[i] = std::pow((1.0 - eps) * pow0(x, alpha) + eps * pow0(y, alpha), 1.0 / alpha);
    }
    return p0.with_density(std::move(d));
}

/// -(1/(alpha beta)) [psi(<p, q>) - lambda psi(||q||^{alpha+beta})] with lambda = beta/(alpha+beta).
inline double d_tilde(const Measure& p, const Measure& q, const Hyper& h, const GenFn& f) {
    if (h.regime() != Regime::General && h.regime() != Regime::SumOne)
        fail(ErrorKind::BadParams, "d_tilde needs alpha, beta and alpha + beta nonzero");
    const double a = h.alpha(), b = h.beta(), s = a + b;
    detail::require_support(p, a < 0.0, "first measure");
    detail::require_support(q, b < 0.0 || s < 0.0, "second measure");
    const double lam = b / s;
    return -(f.eval(inner(p, q, a, b)) - lam * f.eval(norm_pow(q, s))) / (a * b);
}

/// d(p_eps, q) - d(p_eps, p0) - d(p0, q).
inline Gap pythagorean_gap(const Measure& p_eps, const Measure& p0, const Measure& q, const Hyper& h,
                           const GenFn& f) {
    if (h.regime() != Regime::General && h.regime() != Regime::SumOne)
        fail(ErrorKind::BadParams, "the Pythagorean gap needs alpha, beta and alpha + beta nonzero");
    const auto a = gab(p_eps, q, h, f);
    const auto b = gab(p_eps, p0, h, f);
    const auto c = gab(p0, q, h, f);
    return {a.value - b.value - c.value, a.scale + b.scale + c.scale};
}

/// max{<delta, p0>, <delta, q>}.
inline double v_delta(const Measure& delta, const Measure& p0, const Measure& q, const Hyper& h) {
    return std::max(inner(delta, p0, h), inner(delta, q, h));
}

struct EnvelopeFit {
    double c1 = 0.0;
    double c2 = 0.0;
    double max_rel_residual = 0.0;
};

/// Least-squares fit |gap| ~ c1 eps v + c2 |ln(1 - eps)| with nonnegative constants.
inline EnvelopeFit fit_pythagorean_envelope(const std::vector<double>& eps, const std::vector<double>& gaps,
                                            double v) {
    const auto n = static_cast<Eigen::Index>(eps.size());
    if (n == 0 || eps.size() != gaps.size()) fail(ErrorKind::BadParams, "envelope fit needs matching grids");
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = eps[i] * v;
        a(i, 1) = std::abs(std::log1p(-eps[i]));
        y(i) = std::abs(gaps[i]);
    }
    // Relative least squares: weight each row by 1/|gap|.
    Eigen::VectorXd w = y.cwiseMax(1e-300).cwiseInverse();
    Eigen::MatrixXd aw = w.asDiagonal() * a;
    Eigen::VectorXd yw = w.cwiseProduct(y);
    Eigen::Vector2d c = aw.colPivHouseholderQr().solve(yw);
    if (!(c(0) >= 0.0) || !(c(1) >= 0.0)) {
        const int keep = (c(0) >= 0.0) ? 0 : 1;
        const double num = aw.col(keep).dot(yw);
        const double den = aw.col(keep).squaredNorm();
        c.setZero();
        c(keep) = den > 0.0 ? std::max(0.0, num / den) : 0.0;
    }
    EnvelopeFit out{c(0), c(1), 0.0};
    for (Eigen::Index i = 0; i < n; ++i) {
        const double fit = a.row(i).dot(c);
        const double rel = std::abs(fit - y(i)) / std::max(y(i), 1e-300);
        out.max_rel_residual = std::max(out.max_rel_residual, rel);
    }
    return out;
}

} // namespace gabdiv
