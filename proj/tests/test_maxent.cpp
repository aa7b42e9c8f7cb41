#include <gtest/gtest.h>

#include <cmath>

#include "gabdiv/maxent.hpp"
#include "gabdiv/psi_spec.hpp"
#include "gabdiv/random.hpp"

using namespace gabdiv;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

MaxEntProblem binary_problem(double target, Hyper h = Hyper(1, 1), const char* psi = "log") {
    MaxEntProblem pr;
    pr.n = 2;
    pr.g = Eigen::MatrixXd(1, 2);
    pr.g << 0.0, 1.0;
    pr.G = vec({target});
    pr.h = h;
    pr.f = parse_psi(psi);
    return pr;
}

MaxEntProblem unconstrained(std::size_t n, Hyper h, const char* psi = "log") {
    MaxEntProblem pr;
    pr.n = n;
    pr.g = Eigen::MatrixXd(0, static_cast<Eigen::Index>(n));
    pr.G = Eigen::VectorXd(0);
    pr.h = h;
    pr.f = parse_psi(psi);
    return pr;
}

// Random rows, targets taken from a strictly positive point so the problem is feasible.
MaxEntProblem random_problem(Rng& rng, Hyper h) {
    MaxEntProblem pr;
    pr.n = 3 + rng.index(18);
    const auto m = static_cast<Eigen::Index>(rng.index(4));
    const auto n = static_cast<Eigen::Index>(pr.n);
    pr.g = Eigen::MatrixXd(m, n);
    for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index i = 0; i < n; ++i) pr.g(r, i) = rng.uniform(0.0, 1.0);
    const auto w = rng.simplex(pr.n);
    Eigen::VectorXd q(n);
    for (Eigen::Index i = 0; i < n; ++i) q(i) = 0.5 * w[static_cast<std::size_t>(i)] + 0.5 / static_cast<double>(n);
    pr.G = pr.g * q;
    pr.h = h;
    pr.f = builtin("log");
    return pr;
}

} // namespace

TEST(Constants, C1C2Examples) {
    EXPECT_NEAR(c2(vec({0.5, 0.5}), Hyper(1, 1)), 0.0, 1e-15);
    EXPECT_NEAR(c1(vec({1.0, 0.0, 0.0}), Hyper(0.7, 0.4)), 0.0, 1e-15);
    EXPECT_NEAR(c2(vec({1.0, 0.0, 0.0}), Hyper(0.7, 0.4)), 0.0, 1e-15);
    EXPECT_NEAR(c1(vec({0.25, 0.75}), Hyper(0.5, 0.5)), 0.0, 1e-15);
    EXPECT_NEAR(c2(vec({0.25, 0.75}), Hyper(0.5, 0.5)), 0.235001814622868, 1e-14);
    EXPECT_THROW(c1(vec({0.5, 0.5}), Hyper(0, 1)), Error);
}

TEST(FixedPointStep, UnconstrainedGivesUniform) {
    for (const char* psi : {"power:2", "identity", "cdf-normal"}) {
        const MaxEntProblem pr = unconstrained(4, Hyper(2, -3), psi);
        const Eigen::VectorXd q = fixed_point_step(vec({0.1, 0.2, 0.3, 0.4}), Eigen::VectorXd(0), pr);
        for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(q(i), 0.25, 1e-14) << psi;
    }
    // The bare bracket is Psi'(c1) - Psi'(c2); negative here.
    try {
        fixed_point_step(vec({0.1, 0.2, 0.3, 0.4}), Eigen::VectorXd(0), unconstrained(4, Hyper(1, 1), "identity"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::StepFailed);
    }
}

TEST(FixedPointStep, LogReducesToPowerOfMultiplierSum) {
    MaxEntProblem pr = binary_problem(0.6, Hyper(1, 2));
    pr.g << 1.0, 3.0;
    const Eigen::VectorXd q = fixed_point_step(vec({0.5, 0.5}), vec({1.0}), pr);
    const double a = 1.0, b = std::pow(3.0, 0.5);
    EXPECT_NEAR(q(0), a / (a + b), 1e-12);
}

TEST(FixedPointStep, RejectsBadInput) {
    const MaxEntProblem pr = binary_problem(0.7);
    EXPECT_THROW(fixed_point_step(vec({0.0, 1.0}), vec({1.0}), pr), Error);
    EXPECT_THROW(fixed_point_step(vec({0.5, 0.5}), vec({1.0, 2.0}), pr), Error);
    EXPECT_THROW(fixed_point_step(vec({0.5, 0.5}), vec({1.0}), pr, 0.0), Error);
}

TEST(Solve, BinaryExample) {
    const MaxEntProblem pr = binary_problem(0.7);
    const MaxEntSolution s = solve(pr);
    EXPECT_NEAR(s.q(0), 0.3, 1e-10);
    EXPECT_NEAR(s.q(1), 0.7, 1e-10);
    EXPECT_LE(s.constraint_residual, 1e-8);
    EXPECT_LE(s.fixed_point_residual, 1e-8);
    const MaxEntSolution c = closed_form_log(pr);
    EXPECT_NEAR(c.q(0), s.q(0), 1e-8);
    EXPECT_NEAR(c.q(1), s.q(1), 1e-8);
}

TEST(Solve, Infeasible) {
    for (double target : {-0.1, 1.5}) {
        try {
            solve(binary_problem(target));
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::Infeasible);
        }
    }
}

TEST(Solve, UnconstrainedIsUniform) {
    for (const Hyper& h : {Hyper(1, 1), Hyper(0.5, 2), Hyper(2, -3), Hyper(2, 0), Hyper(1.5, -1.5)}) {
        const MaxEntSolution s = solve(unconstrained(5, h));
        for (Eigen::Index i = 0; i < 5; ++i) {
            EXPECT_NEAR(s.q(i), 0.2, 1e-10);
            EXPECT_NEAR(s.p(i), 0.2, 1e-10);
        }
    }
    const MaxEntSolution c = closed_form_log(unconstrained(5, Hyper(1, 1)));
    for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(c.q(i), 0.2, 1e-12);
}

TEST(Solve, FixedPointHolds) {
    Rng rng(6);
    for (const Hyper& h : {Hyper(1, 1), Hyper(0.5, 2), Hyper(2, 0), Hyper(1.5, -1.5)}) {
        MaxEntProblem pr = random_problem(rng, h);
        pr.f = builtin("power", {0.5});
        const MaxEntSolution s = solve(pr);
        const Eigen::VectorXd next = fixed_point_step(s.q, s.lambda, pr, 1.0, s.nu);
        EXPECT_LE((next - s.q).lpNorm<Eigen::Infinity>(), 1e-8);
        EXPECT_NEAR(s.q.sum(), 1.0, 1e-12);
        EXPECT_LE(kkt_residual(pr, s), 1e-6);
    }
}

TEST(Solve, AgreesWithClosedForm) {
    Rng rng(7);
    for (int t = 0; t < 20; ++t) {
        const MaxEntProblem pr = random_problem(rng, Hyper(rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)));
        const MaxEntSolution s = solve(pr);
        const MaxEntSolution c = closed_form_log(pr);
        EXPECT_LE((s.q - c.q).lpNorm<Eigen::Infinity>(), 1e-8);
        EXPECT_LE(s.constraint_residual, 1e-8);
        EXPECT_LE(c.constraint_residual, 1e-10);
    }
}

TEST(Solve, UniqueAcrossStarts) {
    Rng rng(8);
    const MaxEntProblem pr = random_problem(rng, Hyper(-1, 3));
    const MaxEntSolution base = solve(pr);
    for (int k = 0; k < 10; ++k) {
        MaxEntOptions o;
        o.start = random_feasible_start(pr, rng);
        EXPECT_LE((solve(pr, o).q - base.q).lpNorm<Eigen::Infinity>(), 1e-6);
    }
}

TEST(Solve, ReturnsEscortAndZoom) {
    const MaxEntProblem pr = binary_problem(0.7, Hyper(2, 1));
    const MaxEntSolution s = solve(pr);
    const double r = std::sqrt(s.q(1) / s.q(0));
    EXPECT_NEAR(s.p(1) / s.p(0), r, 1e-10);
    EXPECT_NEAR(s.p.sum(), 1.0, 1e-12);
}

TEST(Solve, TraceIsOptional) {
    MaxEntOptions o;
    o.keep_trace = false;
    EXPECT_TRUE(solve(binary_problem(0.7), o).trace.empty());
    EXPECT_FALSE(solve(binary_problem(0.7)).trace.empty());
}

TEST(ClosedForm, AffineConstraintIsMonotone) {
    MaxEntProblem pr;
    pr.n = 6;
    pr.g = Eigen::MatrixXd(1, 6);
    for (Eigen::Index i = 0; i < 6; ++i) pr.g(0, i) = static_cast<double>(i);
    pr.G = vec({3.2});
    pr.h = Hyper(1, 1);
    const MaxEntSolution c = closed_form_log(pr);
    for (Eigen::Index i = 1; i < 6; ++i) EXPECT_GT(c.q(i), c.q(i - 1));
    // q_i is affine in i when alpha / beta = 1.
    for (Eigen::Index i = 2; i < 6; ++i) EXPECT_NEAR(c.q(i) - c.q(i - 1), c.q(1) - c.q(0), 1e-12);
}

TEST(ClosedForm, NeedsLog) {
    EXPECT_THROW(closed_form_log(binary_problem(0.7, Hyper(1, 1), "identity")), Error);
    EXPECT_THROW(closed_form_log(binary_problem(0.7, Hyper(2, 0))), Error);
    EXPECT_THROW(solve(binary_problem(0.7, Hyper(0.5, 0.5))), Error);
}
