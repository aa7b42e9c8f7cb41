#include <gtest/gtest.h>

#include <cmath>

#include "gabdiv/divergence.hpp"
#include "gabdiv/properties.hpp"
#include "gabdiv/psi_spec.hpp"
#include "gabdiv/random.hpp"

using namespace gabdiv;

namespace {

Measure pm(std::vector<double> d) { return Measure::from_density(std::move(d)); }

const Measure kP = pm({0.5, 0.5});
const Measure kQ = pm({0.25, 0.75});

Measure random_prob(Rng& rng, std::size_t n) {
    auto d = rng.simplex(n);
    for (double& v : d) v = 0.9 * v + 0.1 / static_cast<double>(n);
    return pm(d);
}

} // namespace

TEST(Gab, ZeroOnEqualProbabilityMeasures) {
    Rng rng(5);
    for (const char* spec : {"identity", "log", "power:2", "bridge:1,2", "cdf-normal"})
        for (const Hyper& h : {Hyper(1, 1), Hyper(2, -0.5), Hyper(-1, 3), Hyper(0.3, 0.7), Hyper(1, 0), Hyper(0, 2),
                               Hyper(1.5, -1.5), Hyper(0, 0)}) {
            const Measure p = random_prob(rng, 7);
            EXPECT_NEAR(gab(p, p, h, parse_psi(spec)).value, 0.0, 1e-12) << spec;
        }
}

TEST(Gab, BetaZeroIdentityIsKl) {
    const auto d = gab(kP, kQ, Hyper(1, 0), builtin("identity"));
    EXPECT_EQ(d.regime, Regime::BetaZero);
    EXPECT_NEAR(d.value, 0.143841036225890, 1e-14);
}

TEST(Gab, IdentityAtOneOneIsHalfSquaredDistance) {
    const auto d = gab(kP, kQ, Hyper(1, 1), builtin("identity"));
    EXPECT_EQ(d.regime, Regime::General);
    EXPECT_NEAR(d.value, 0.0625, 1e-15);
    EXPECT_GT(d.scale, 1.0);
}

TEST(Gab, RegimeRecorded) {
    const GenFn f = builtin("log");
    EXPECT_EQ(gab(kP, kQ, Hyper(0, 2), f).regime, Regime::AlphaZero);
    EXPECT_EQ(gab(kP, kQ, Hyper(2, -2), f).regime, Regime::SumZero);
    EXPECT_EQ(gab(kP, kQ, Hyper(0, 0), f).regime, Regime::BothZero);
    EXPECT_EQ(gab(kP, kQ, Hyper(0.5, 0.5), f).regime, Regime::SumOne);
}

TEST(Gab, BothZeroIsHalfSquaredLogRatio) {
    const double l0 = std::log(0.5 / 0.25), l1 = std::log(0.5 / 0.75);
    const double sq = l0 * l0 + l1 * l1, lin = l0 + l1;
    EXPECT_NEAR(gab(kP, kQ, Hyper(0, 0), builtin("identity")).value, 0.5 * sq, 1e-15);
    // Base mass 2: psi'(2) = 1/2, psi''(2) = -1/4.
    EXPECT_NEAR(gab(kP, kQ, Hyper(0, 0), builtin("log")).value, 0.25 * sq - 0.125 * lin * lin, 1e-15);
}

TEST(Gab, EdgeRegimesNeedDifferentiablePsi) {
    const GenFn pwl = parse_psi("pwl:1,0,1;2,-1");
    EXPECT_NO_THROW(gab(kP, kQ, Hyper(1, 1), pwl));
    for (const Hyper& h : {Hyper(1, 0), Hyper(0, 1.5), Hyper(1, -1), Hyper(0, 0)}) {
        try {
            gab(kP, kQ, h, pwl);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::BadParams);
        }
    }
}

TEST(Gab, ZeroAtomsUnderNegativeExponents) {
    const Measure z = pm({0.0, 1.0});
    try {
        gab(z, kQ, Hyper(-1, 2), builtin("identity"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnsupportedSupport);
    }
    EXPECT_THROW(gab(z, kQ, Hyper(0, 0), builtin("identity")), Error);
    EXPECT_NO_THROW(gab(z, kQ, Hyper(2, 1), builtin("identity")));
}

TEST(Gab, AlphabetMismatch) {
    EXPECT_THROW(gab(kP, pm({0.2, 0.3, 0.5}), Hyper(1, 1), builtin("identity")), Error);
}

TEST(Gab, WarnsNearRegimeBoundary) {
    EXPECT_FALSE(gab(kP, kQ, Hyper(1, 1e-8), builtin("log")).warnings.empty());
    EXPECT_TRUE(gab(kP, kQ, Hyper(1, 0.5), builtin("log")).warnings.empty());
}

TEST(Gab, LimitsApproachEdgeForms) {
    Rng rng(9);
    const Measure p = random_prob(rng, 6);
    const Measure q = random_prob(rng, 6);
    struct Edge {
        Hyper edge;
        std::function<Hyper(double)> near;
    };
    const std::vector<Edge> edges = {
        {Hyper(0.7, 0), [](double t) { return Hyper(0.7, t); }},
        {Hyper(0, 0.7), [](double t) { return Hyper(t, 0.7); }},
        {Hyper(0.7, -0.7), [](double t) { return Hyper(0.7, -0.7 + t); }},
        {Hyper(0, 0), [](double t) { return Hyper(t, 2.0 * t); }},
    };
    for (const char* spec : {"identity", "log"}) {
        const GenFn f = parse_psi(spec);
        for (const Edge& e : edges) {
            const auto target = gab(p, q, e.edge, f);
            double prev = 0.0;
            for (int k = 2; k <= 4; ++k) {
                const double t = std::pow(10.0, -k);
                const double gap = std::abs(gab(p, q, e.near(t), f).value - target.value);
                if (k > 2) {
                    EXPECT_LE(gap, prev * 0.2) << spec << " k=" << k;
                }
                prev = gap;
            }
            EXPECT_LE(prev, 1e-3 * target.scale);
        }
    }
}

TEST(Special, KlRow) {
    EXPECT_NEAR(gab_special("KL", kP, kQ), 0.143841036225890, 1e-14);
    EXPECT_THROW(gab_special("KL", kP, kQ, {1.0}), Error);
    EXPECT_THROW(gab_special("nope", kP, kQ), Error);
}

TEST(Special, GammaRejectsDegenerateParameters) {
    EXPECT_THROW(gab_special("gamma", kP, kQ, {1.0}), Error);
    EXPECT_THROW(gab_special("gamma", kP, kQ, {0.0}), Error);
    EXPECT_NO_THROW(gab_special("gamma", kP, kQ, {0.5}));
}

TEST(Special, AbMatchesDpdUpToConstant) {
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
        const Measure p = random_prob(rng, 5), q = random_prob(rng, 5);
        const double ab = gab_special("AB", p, q, {1.0, 1.0});
        const double dpd = gab_special("DPD", p, q, {1.0});
        EXPECT_NEAR(dpd, special_case("DPD").constant({1.0}) * ab, 1e-14);
    }
}

TEST(Special, EveryRowMatchesGab) {
    const std::vector<std::pair<std::string, std::vector<double>>> cases = {
        {"AB", {0.7, 1.3}},    {"AB", {2.0, -0.5}},  {"AB", {1.0, 0.0}},  {"AB", {0.0, 0.0}}, {"AB", {1.5, -1.5}},
        {"KL", {}},            {"power", {0.3}},     {"power", {1.0}},    {"power", {-0.5}},  {"beta", {0.5}},
        {"beta", {2.0}},       {"DPD", {0.5}},       {"DPD", {2.0}},      {"S", {0.5, 0.7}},  {"S", {1.0, 0.3}},
        {"AC", {0.7, 1.3}},    {"AC", {-0.5, 2.0}},  {"LSD", {0.5, 0.7}}, {"gamma", {0.5}},   {"gamma", {2.0}},
        {"Jones", {0.5, 1.0}}, {"Jones", {2.0, 0.5}}};
    Rng rng(8);
    for (const auto& [name, v] : cases) {
        const SpecialCase& sc = special_case(name);
        for (int t = 0; t < 20; ++t) {
            Measure p = random_prob(rng, 6), q = random_prob(rng, 6);
            if (!sc.probability_only) {
                p = pm({0.3, 0.2, 0.1});
                q = pm({0.1, 0.4, 0.3});
            }
            const double closed = gab_special(name, p, q, v);
            const double via = sc.constant(v) * gab(p, q, sc.hyper(v), sc.psi(v)).value;
            EXPECT_NEAR(via, closed, 1e-12 * std::max(1.0, std::abs(closed))) << name;
        }
    }
}

TEST(Identities, DualityExamples) {
    EXPECT_EQ(duality_gap(kP, kP, Hyper(0.4, 1.1), builtin("log")).gap, 0.0);
    const Gap g = duality_gap(kP, kQ, Hyper(0.4, 1.1), builtin("log"));
    EXPECT_LE(std::abs(g.gap), 1e-10 * g.scale);
}

TEST(Identities, ZoomingExamples) {
    const Measure p = pm({0.1, 0.6, 0.3}), q = pm({0.3, 0.3, 0.4});
    EXPECT_EQ(zooming_identity_gap(p, q, Hyper(0.5, 0.5), builtin("log"), 1.0).gap, 0.0);
    const Gap two = zooming_identity_gap(p, q, Hyper(0.5, 0.5), builtin("log"), 2.0);
    EXPECT_LE(std::abs(two.gap), 1e-10 * two.scale);
    const Gap neg = zooming_identity_gap(p, q, Hyper(0.5, 1.5), builtin("identity"), -1.0);
    EXPECT_LE(std::abs(neg.gap), 1e-10 * neg.scale);
    EXPECT_THROW(zooming_identity_gap(p, q, Hyper(1, 1), builtin("log"), 0.0), Error);
}

TEST(Identities, ScalingAndReduction) {
    const Measure p = pm({0.1, 0.6, 0.3}), q = pm({0.3, 0.3, 0.4});
    for (double c : {0.3, 1.0, 2.5}) {
        const Gap g = scaling_identity_gap(p, q, Hyper(1.2, -0.4), builtin("power", {2.0}), c);
        EXPECT_LE(std::abs(g.gap), 1e-10 * g.scale);
    }
    EXPECT_THROW(scaling_identity_gap(p, q, Hyper(1, 1), builtin("log"), -1.0), Error);
    const Gap r = reduction_identity_gap(p, q, Hyper(0.7, 2.0), builtin("cdf-normal"));
    EXPECT_LE(std::abs(r.gap), 1e-10 * r.scale);
}

TEST(Identities, RandomizedSuitesPass) {
    for (const auto& row : structural_suite(42, 200)) EXPECT_TRUE(row.passed()) << row.suite << " " << row.psi;
    for (const auto& row : nonnegativity_suite(42, 100)) EXPECT_TRUE(row.passed()) << row.psi << " " << row.regime;
}

TEST(Contamination, MixExamples) {
    const Measure p0 = pm({0.5, 0.5}), delta = pm({1.0, 0.0});
    EXPECT_EQ(alpha_convex_mix(p0, delta, 0.0, 2.0).density(0), 0.5);
    EXPECT_EQ(alpha_convex_mix(p0, delta, 1.0, 2.0).density(1), 0.0);
    const Measure m = alpha_convex_mix(p0, delta, 0.1, 1.0);
    EXPECT_NEAR(m.density(0), 0.55, 1e-15);
    EXPECT_NEAR(m.density(1), 0.45, 1e-15);
    EXPECT_THROW(alpha_convex_mix(p0, delta, 0.5, -1.0), Error);
    EXPECT_THROW(alpha_convex_mix(p0, delta, 1.5, 1.0), Error);
}

TEST(Contamination, DTildeIdentity) {
    Rng rng(12);
    for (int t = 0; t < 100; ++t) {
        const Measure p = random_prob(rng, 8), q = random_prob(rng, 8);
        const Hyper h(rng.uniform(0.2, 2.0), rng.uniform(-0.5, 2.0) + 0.6);
        const GenFn f = builtin(t % 2 ? "log" : "identity");
        const double lhs = gab(p, q, h, f).value;
        const double rhs = -d_tilde(p, p, h, f) + d_tilde(p, q, h, f);
        EXPECT_NEAR(lhs, rhs, 1e-12);
    }
}

TEST(Contamination, DTildeExamples) {
    const Hyper h(0.8, 1.7);
    const GenFn f = builtin("power", {0.5});
    const double la = h.alpha() / h.sum();
    EXPECT_NEAR(d_tilde(kQ, kQ, h, f), -la * f(norm_pow(kQ, h.sum())) / (h.alpha() * h.beta()), 1e-15);
    EXPECT_NEAR(d_tilde(kP, kQ, Hyper(1, 1), builtin("log")), 0.458145365937078, 1e-14);
    EXPECT_THROW(d_tilde(kP, kQ, Hyper(1, 0), builtin("log")), Error);
}

TEST(Pythagorean, ZeroContamination) {
    const Measure p0 = pm({0.2, 0.3, 0.5}), q = pm({0.4, 0.4, 0.2});
    const Gap g = pythagorean_gap(p0, p0, q, Hyper(0.7, 0.6), builtin("identity"));
    EXPECT_NEAR(g.gap, 0.0, 1e-15);
}

TEST(Pythagorean, LogGapIsFirstOrder) {
    const Measure p0 = pm({0.2, 0.3, 0.5}), q = pm({0.4, 0.4, 0.2}), delta = pm({0.7, 0.2, 0.1});
    const Hyper h(0.6, 0.9);
    std::vector<double> le, lg;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const Measure pe = alpha_convex_mix(p0, delta, eps, h.alpha());
        le.push_back(std::log(eps));
        lg.push_back(std::log(std::abs(pythagorean_gap(pe, p0, q, h, builtin("log")).gap)));
    }
    const double slope = (lg.back() - lg.front()) / (le.back() - le.front());
    EXPECT_GE(slope, 0.8);
}

TEST(Pythagorean, IdentityEnvelope) {
    const Measure p0 = pm({0.2, 0.3, 0.5}), q = pm({0.4, 0.4, 0.2}), delta = pm({0.7, 0.2, 0.1});
    const Hyper h(0.6, 0.9);
    std::vector<double> eps = {1e-1, 1e-2, 1e-3, 1e-4}, gaps;
    for (double e : eps)
        gaps.push_back(pythagorean_gap(alpha_convex_mix(p0, delta, e, h.alpha()), p0, q, h, builtin("identity")).gap);
    const EnvelopeFit fit = fit_pythagorean_envelope(eps, gaps, v_delta(delta, p0, q, h));
    EXPECT_GE(fit.c1, 0.0);
    EXPECT_GE(fit.c2, 0.0);
    EXPECT_LE(fit.max_rel_residual, 0.1);
}

TEST(Semicontinuity, SequenceConverges) {
    const Measure p = pm({0.2, 0.3, 0.5}), q = pm({0.4, 0.4, 0.2});
    const Hyper h(0.5, 1.0);
    const GenFn f = builtin("cdf-normal");
    const double target = gab(p, q, h, f).value;
    double last = 1.0;
    for (int k = 1; k <= 12; ++k) {
        const double e = std::pow(2.0, -3 * k);
        const Measure pn = pm({0.2 + e, 0.3 - e, 0.5});
        last = std::abs(gab(pn, q, h, f).value - target);
    }
    EXPECT_LE(last, 1e-8);
}
