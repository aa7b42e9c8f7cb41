#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gabdiv/detail/simplex_lp.hpp"
#include "gabdiv/entropy.hpp"
#include "gabdiv/error.hpp"
#include "gabdiv/measures.hpp"
#include "gabdiv/psi.hpp"
#include "gabdiv/psi_spec.hpp"
#include "gabdiv/random.hpp"

namespace gabdiv {

// Maximize the entropy of P subject to sum_i g_r(a_i) q_i = G_r, where q is the
// alpha-escort of P. The solver works in q and returns p = q^[1/alpha].

struct MaxEntProblem {
    std::size_t n = 0;
    Eigen::MatrixXd g; // m x n
    Eigen::VectorXd G;
    Hyper h{1.0, 1.0};
    GenFn f = builtin("log");

    std::size_t m() const { return static_cast<std::size_t>(g.rows()); }
};

struct MaxEntOptions {
    double tol = 1e-8;
    int max_iter = 10000;
    double omega = 0.5;
    double min_omega = 1e-6;
    std::optional<Eigen::VectorXd> start;
    bool keep_trace = true;
};

struct MaxEntSolution {
    Eigen::VectorXd q;
    Eigen::VectorXd p;
    Eigen::VectorXd lambda; // closed-form convention
    double nu = 0.0; // intercept inside the fixed-point bracket
    Eigen::VectorXd lambda_raw; // gradient of the entropy in q equals -lambda_raw . (g - G)
    double nu_raw = 0.0;        // intercept before rescaling
    double constraint_residual = 0.0;
    double fixed_point_residual = 0.0;
    int iterations = 0;
    std::vector<double> trace;
};

namespace detail {

inline double sum_pow(const Eigen::VectorXd& q, double a) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        if (q(i) < 0.0) fail(ErrorKind::InvalidMeasure, "negative escort coordinate");
        if (q(i) == 0.0 && a < 0.0) fail(ErrorKind::UnsupportedSupport, "zero coordinate under a negative power");
        s += pow0(q(i), a);
    }
    return s;
}

inline Eigen::MatrixXd augmented(const MaxEntProblem& pr) {
    Eigen::MatrixXd a(pr.g.rows() + 1, static_cast<Eigen::Index>(pr.n));
    a.row(0).setOnes();
    a.bottomRows(pr.g.rows()) = pr.g;
    return a;
}

inline Eigen::VectorXd targets(const MaxEntProblem& pr) {
    Eigen::VectorXd b(pr.G.size() + 1);
    b(0) = 1.0;
    b.tail(pr.G.size()) = pr.G;
    return b;
}

inline void check_problem(const MaxEntProblem& pr) {
    const double a = pr.h.alpha(), s = pr.h.sum();
    if (a == 0.0) fail(ErrorKind::BadParams, "maxent needs alpha != 0");
    if (s == 1.0) fail(ErrorKind::BadParams, "maxent needs alpha + beta != 1");
    if (pr.n == 0) fail(ErrorKind::BadParams, "empty alphabet");
    if (pr.g.rows() > 0 && pr.g.cols() != static_cast<Eigen::Index>(pr.n))
        fail(ErrorKind::DimensionMismatch, "g has " + std::to_string(pr.g.cols()) + " columns, n = " + std::to_string(pr.n));
    if (pr.G.size() != pr.g.rows()) fail(ErrorKind::DimensionMismatch, "G and g disagree on the number of constraints");
    if (!pr.g.allFinite() || !pr.G.allFinite()) fail(ErrorKind::BadParams, "non-finite constraint data");
    const Eigen::MatrixXd aug = augmented(pr);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(aug);
    lu.setThreshold(1e-10);
    if (lu.rank() < aug.rows())
        fail(ErrorKind::BadParams, "constraint rows are linearly dependent (with the normalization row)");
    if (pr.h.regime() == Regime::BetaZero && pr.f.smoothness != Smoothness::C2)
        fail(ErrorKind::BadParams, "beta = 0 needs a C2 psi");
}

/// Strictly positive feasible point maximizing min_i q_i, or Infeasible.
inline Eigen::VectorXd maximin_point(const MaxEntProblem& pr) {
    const auto n = static_cast<Eigen::Index>(pr.n);
    const Eigen::MatrixXd aug = augmented(pr);
    Eigen::MatrixXd a(aug.rows(), n + 1);
    a.col(0) = aug.rowwise().sum();
    a.rightCols(n) = aug;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
    c(0) = 1.0;
    const LpResult lp = lp_maximize(a, targets(pr), c);
    if (lp.status != LpStatus::Optimal) fail(ErrorKind::Infeasible, "constraints have no solution on the simplex");
    if (lp.x(0) <= 1e-12) fail(ErrorKind::Infeasible, "no strictly positive distribution meets the constraints");
    Eigen::VectorXd q = lp.x.tail(n).array() + lp.x(0);
    return q / q.sum();
}

// q_next_i = K (base_i + coef_i L_i)^e  or  exp(base_i + coef_i L_i),  L = nu + lambda . g
struct StepModel {
    bool exponential = false;
    bool clip = false; // e > 0 only: nonpositive brackets map to zero mass
    double k = 1.0;
    double e = 1.0;
    Eigen::VectorXd base;
    Eigen::VectorXd coef;

    bool eval(const Eigen::VectorXd& big_l, Eigen::VectorXd& q, Eigen::VectorXd& dq) const {
        const Eigen::Index n = base.size();
        q.resize(n);
        dq.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = base(i) + coef(i) * big_l(i);
            if (exponential) {
                q(i) = std::exp(x);
                dq(i) = coef(i) * q(i);
            } else {
                if (!(x > 0.0)) {
                    if (!clip) return false;
                    q(i) = dq(i) = 0.0;
                    continue;
                }
                q(i) = k * std::pow(x, e);
                dq(i) = e * coef(i) * q(i) / x;
            }
            if (!std::isfinite(q(i)) || !std::isfinite(dq(i))) return false;
        }
        return true;
    }

    // Sum of antiderivatives of q_next_i in L_i; NaN outside the domain.
    double potential(const Eigen::VectorXd& big_l) const {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < base.size(); ++i) {
            const double x = base(i) + coef(i) * big_l(i);
            if (exponential) sum += std::exp(x) / coef(i);
            else if (!(x > 0.0) && clip) continue;
            else if (!(x > 0.0)) return std::nan("");
            else if (e == -1.0) sum += k * std::log(x) / coef(i);
            else sum += k * std::pow(x, e + 1.0) / (coef(i) * (e + 1.0));
        }
        return sum;
    }

    // Sign that makes the potential convex.
    double orientation() const { return (exponential ? coef(0) : e * coef(0)) > 0.0 ? 1.0 : -1.0; }

    // Multiplier field that reproduces q exactly.
    Eigen::VectorXd invert(const Eigen::VectorXd& q) const {
        Eigen::VectorXd l(q.size());
        for (Eigen::Index i = 0; i < q.size(); ++i) {
            const double x = exponential ? std::log(q(i)) : std::pow(q(i) / k, 1.0 / e);
            l(i) = (x - base(i)) / coef(i);
        }
        return l;
    }
};

inline StepModel step_model(const MaxEntProblem& pr, const Eigen::VectorXd& q) {
    const double a = pr.h.alpha(), b = pr.h.beta(), s = pr.h.sum();
    const auto n = q.size();
    const double s_inv = sum_pow(q, 1.0 / a);
    const double c2 = -a * std::log(s_inv);
    Eigen::VectorXd u(n);
    for (Eigen::Index i = 0; i < n; ++i) u(i) = std::pow(q(i), 1.0 / a - 1.0) / s_inv;

    StepModel mdl;
    switch (pr.h.regime()) {
    case Regime::BetaZero: {
        double hq = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) hq += q(i) * std::log(q(i));
        const double d1 = big_psi_deriv(pr.f, c2), d2 = big_psi_second(pr.f, c2);
        mdl.exponential = true;
        mdl.base = (d2 / d1) * (hq + c2) * u.array() - 1.0;
        mdl.coef = Eigen::VectorXd::Constant(n, a * a / d1);
        break;
    }
    case Regime::SumZero: {
        const double dn = pr.f.deriv(static_cast<double>(pr.n));
        if (!(dn > 0.0)) fail(ErrorKind::StepFailed, "psi'(n) must be positive");
        mdl.k = dn;
        mdl.e = -1.0;
        mdl.base = (static_cast<double>(pr.n) * dn - big_psi_deriv(pr.f, c2)) * u;
        mdl.coef = Eigen::VectorXd::Constant(n, -a * a);
        break;
    }
    default: {
        const double kk = s / a;
        const double s_k = sum_pow(q, kk);
        const double c1 = std::log(s_k) - s * std::log(s_inv);
        const double d1 = big_psi_deriv(pr.f, c1);
        if (!(d1 > 0.0)) fail(ErrorKind::StepFailed, "Psi'(c1) must be positive");
        mdl.e = a / (s - 1.0);
        mdl.k = std::pow(s_k / d1, mdl.e);
        mdl.base = Eigen::VectorXd::Constant(n, (d1 - big_psi_deriv(pr.f, c2)) / s_inv);
        mdl.coef.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) mdl.coef(i) = a * b * std::pow(q(i), 1.0 - 1.0 / a);
        break;
    }
    }
    return mdl;
}

/// Intercept-only multipliers whose model output sums to one.
inline Eigen::VectorXd intercept_guess(const StepModel& mdl, Eigen::Index rows) {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(rows);
    const Eigen::Index n = mdl.base.size();
    if (mdl.exponential) {
        const double top = mdl.base.maxCoeff();
        const double lse = top + std::log((mdl.base.array() - top).exp().sum());
        theta(0) = -lse / mdl.coef(0);
        return theta;
    }
    const double sgn = mdl.coef(0) > 0.0 ? 1.0 : -1.0;
    double edge = -sgn * kInf;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = -mdl.base(i) / mdl.coef(i);
        edge = sgn > 0.0 ? std::max(edge, t) : std::min(edge, t);
    }
    auto total = [&](double tau) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            sum += mdl.k * std::pow(mdl.base(i) + mdl.coef(i) * (edge + sgn * tau), mdl.e);
        return sum;
    };
    // total(tau) is monotone in tau; bisect on log tau.
    const double scale = std::max(1.0, std::abs(edge));
    double lo = std::log(1e-300), hi = std::log(1e300 / scale);
    const bool up = total(std::exp(hi)) > total(std::exp(lo));
    for (int it = 0; it < 400 && hi - lo > 1e-13; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = total(std::exp(mid));
        if ((v > 1.0) == up) hi = mid;
        else lo = mid;
    }
    theta(0) = edge + sgn * std::exp(0.5 * (lo + hi));
    return theta;
}

struct NewtonResult {
    Eigen::VectorXd theta; // (nu, lambda)
    Eigen::VectorXd q;
};

/// Newton on (nu, lambda) so that the model output meets every constraint.
/// The constraint residual is the gradient of a convex potential, which
/// drives the line search.
inline NewtonResult fit_multipliers(const StepModel& mdl, const Eigen::MatrixXd& aug, const Eigen::VectorXd& b,
                                    const std::vector<Eigen::VectorXd>& guesses, double tol = 1e-14,
                                    double accept = 1e-10) {
    const double sgn = mdl.orientation();
    auto objective = [&](const Eigen::VectorXd& th) { return sgn * (mdl.potential(aug.transpose() * th) - b.dot(th)); };
    Eigen::VectorXd theta, q, dq;
    double best = kInf;
    for (const Eigen::VectorXd& g : guesses) {
        Eigen::VectorXd qq, dd;
        if (!g.allFinite() || !mdl.eval(aug.transpose() * g, qq, dd)) continue;
        const double r = (aug * qq - b).norm();
        if (r < best) {
            best = r;
            theta = g;
            q = qq;
            dq = dd;
        }
    }
    if (!std::isfinite(best)) {
        theta = intercept_guess(mdl, aug.rows());
        if (!mdl.eval(aug.transpose() * theta, q, dq)) fail(ErrorKind::StepFailed, "no admissible multiplier guess");
    }
    double fval = objective(theta);
    for (int it = 0; it < 200; ++it) {
        const Eigen::VectorXd r = aug * q - b;
        const double rn = r.lpNorm<Eigen::Infinity>();
        if (rn <= tol) return {theta, q};
        Eigen::MatrixXd hess = sgn * (aug * dq.asDiagonal() * aug.transpose());
        if (mdl.clip) hess.diagonal().array() += 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
        const Eigen::VectorXd grad = sgn * r;
        Eigen::VectorXd delta = hess.ldlt().solve(-grad);
        if (!delta.allFinite() || grad.dot(delta) >= 0.0) delta = -grad;
        bool moved = false;
        Eigen::VectorXd qq, dd;
        for (double t = 1.0; t > 1e-14; t *= 0.5) {
            const Eigen::VectorXd cand = theta + t * delta;
            if (!mdl.eval(aug.transpose() * cand, qq, dd)) continue;
            const double fc = objective(cand);
            // Near the root the objective is flat to rounding; fall back on the residual.
            if (fc <= fval + 1e-4 * t * grad.dot(delta) ||
                (aug * qq - b).lpNorm<Eigen::Infinity>() < 0.5 * rn) {
                theta = cand;
                q = qq;
                dq = dd;
                fval = fc;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    // Stalled at the rounding floor.
    if ((aug * q - b).lpNorm<Eigen::Infinity>() <= accept) return {theta, q};
    fail(ErrorKind::StepFailed, "multiplier Newton did not converge (residual " + std::to_string((aug * q - b).lpNorm<Eigen::Infinity>()) + ")");
}

inline Eigen::VectorXd ls_theta(const Eigen::MatrixXd& aug, const Eigen::VectorXd& big_l) {
    return aug.transpose().colPivHouseholderQr().solve(big_l);
}

inline double multiplier_scale(const Hyper& h) {
    return h.regime() == Regime::SumZero ? -h.alpha() * h.alpha() : 1.0;
}

} // namespace detail

/// c1(q) = ((a+b)/a)[ln||q||_{(a+b)/a} - ln||q||_{1/a}] under counting weights.
inline double c1(const Eigen::VectorXd& q, const Hyper& h) {
    const double a = h.alpha();
    if (a == 0.0) fail(ErrorKind::BadParams, "c1 needs alpha != 0");
    return std::log(detail::sum_pow(q, h.sum() / a)) - h.sum() * std::log(detail::sum_pow(q, 1.0 / a));
}

/// c2(q) = -ln||q||_{1/a}.
inline double c2(const Eigen::VectorXd& q, const Hyper& h) {
    const double a = h.alpha();
    if (a == 0.0) fail(ErrorKind::BadParams, "c2 needs alpha != 0");
    return -a * std::log(detail::sum_pow(q, 1.0 / a));
}

/// One damped fixed-point update. lambda and nu follow the closed-form convention;
/// nu = 0 gives the bare proportionality map.
inline Eigen::VectorXd fixed_point_step(const Eigen::VectorXd& q, const Eigen::VectorXd& lambda, const MaxEntProblem& pr,
                                        double omega = 1.0, double nu = 0.0) {
    detail::check_problem(pr);
    if (q.size() != static_cast<Eigen::Index>(pr.n) || lambda.size() != pr.g.rows())
        fail(ErrorKind::DimensionMismatch, "q or lambda has the wrong length");
    if (!(omega > 0.0 && omega <= 1.0)) fail(ErrorKind::BadParams, "omega must lie in (0, 1]");
    if ((q.array() <= 0.0).any()) fail(ErrorKind::UnsupportedSupport, "q must be strictly positive");
    const double sc = detail::multiplier_scale(pr.h);
    Eigen::VectorXd theta(lambda.size() + 1);
    theta(0) = nu / sc;
    theta.tail(lambda.size()) = lambda / sc;
    const detail::StepModel mdl = detail::step_model(pr, q);
    Eigen::VectorXd next, dq;
    if (!mdl.eval(detail::augmented(pr).transpose() * theta, next, dq))
        fail(ErrorKind::StepFailed, "bracket is nonpositive under a real power");
    const double total = next.sum();
    if (!(total > 0.0) || !std::isfinite(total)) fail(ErrorKind::StepFailed, "update cannot be normalized");
    return (1.0 - omega) * q + omega * (next / total);
}

/// Escort vector reached from a random LP vertex mix, blended with the maximin point.
inline Eigen::VectorXd random_feasible_start(const MaxEntProblem& pr, Rng& rng) {
    detail::check_problem(pr);
    const Eigen::VectorXd center = detail::maximin_point(pr);
    const Eigen::MatrixXd aug = detail::augmented(pr);
    const Eigen::VectorXd b = detail::targets(pr);
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pr.n));
    const std::vector<double> w = rng.simplex(3);
    for (double wk : w) {
        Eigen::VectorXd c(static_cast<Eigen::Index>(pr.n));
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = rng.normal();
        const detail::LpResult lp = detail::lp_maximize(aug, b, c);
        mix += wk * (lp.status == detail::LpStatus::Optimal ? lp.x : center);
    }
    const double t = rng.uniform(0.05, 0.95);
    return t * center + (1.0 - t) * mix;
}

namespace detail {

inline double escort_entropy_of(const Eigen::VectorXd& q, const MaxEntProblem& pr) {
    std::vector<double> d(q.data(), q.data() + q.size());
    return gabe(zoom_norm(Measure::unbounded({}, std::move(d)), 1.0 / pr.h.alpha()), pr.h, pr.f).value;
}

/// Damped Newton ascent of the entropy over {A q = b, q > 0} with
/// finite-difference derivatives in null-space coordinates.
inline Eigen::VectorXd entropy_ascent(const MaxEntProblem& pr, const Eigen::MatrixXd& aug, Eigen::VectorXd q,
                                      int max_iter = 200) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(aug, Eigen::ComputeFullV);
    const Eigen::MatrixXd null = svd.matrixV().rightCols(aug.cols() - aug.rows());
    const Eigen::Index d = null.cols();
    if (d == 0) return q;
    auto value = [&](const Eigen::VectorXd& x) {
        if ((x.array() <= 0.0).any()) return -kInf;
        try {
            const double v = escort_entropy_of(x, pr);
            return std::isfinite(v) ? v : -kInf;
        } catch (const Error&) {
            return -kInf;
        }
    };
    double fq = value(q);
    for (int it = 0; it < max_iter; ++it) {
        const double h = 1e-4 * q.minCoeff();
        Eigen::VectorXd grad(d);
        Eigen::MatrixXd hess(d, d);
        for (Eigen::Index j = 0; j < d; ++j) {
            const Eigen::VectorXd ej = h * null.col(j);
            const double fp = value(q + ej), fm = value(q - ej);
            grad(j) = (fp - fm) / (2.0 * h);
            hess(j, j) = (fp - 2.0 * fq + fm) / (h * h);
            for (Eigen::Index k = 0; k < j; ++k) {
                const Eigen::VectorXd ek = h * null.col(k);
                hess(j, k) = hess(k, j) =
                    (value(q + ej + ek) - value(q + ej - ek) - value(q - ej + ek) + value(q - ej - ek)) / (4.0 * h * h);
            }
        }
        if (!grad.allFinite() || !hess.allFinite()) break;
        if (grad.lpNorm<Eigen::Infinity>() < 1e-10) break;
        // Shift until the model is concave.
        const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess).eigenvalues().maxCoeff();
        const double shift = top > -1e-8 ? top + 1e-6 * (1.0 + hess.norm()) : 0.0;
        const Eigen::VectorXd dz = (hess - shift * Eigen::MatrixXd::Identity(d, d)).ldlt().solve(-grad);
        const Eigen::VectorXd dq = null * dz;
        double t = 1.0;
        for (Eigen::Index i = 0; i < q.size(); ++i)
            if (dq(i) < 0.0) t = std::min(t, -0.9 * q(i) / dq(i));
        bool moved = false;
        for (; t > 1e-12; t *= 0.5) {
            const Eigen::VectorXd cand = q + t * dq;
            const double fc = value(cand);
            if (fc > fq + 1e-4 * t * grad.dot(dz)) {
                q = cand;
                fq = fc;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return q;
}

/// One application of the fixed-point map at q, with multipliers fitted to the constraints.
/// With clip set, a power map with e > 0 may send atoms to zero instead of failing.
inline std::optional<NewtonResult> fixed_point_map(const MaxEntProblem& pr, const Eigen::MatrixXd& aug,
                                                   const Eigen::VectorXd& b, const Eigen::VectorXd& q,
                                                   const std::optional<Eigen::VectorXd>& hint, bool clip = false) {
    if ((q.array() <= 0.0).any()) return std::nullopt;
    try {
        StepModel mdl = step_model(pr, q);
        mdl.clip = clip && !mdl.exponential && mdl.e > 0.0;
        if (clip && !mdl.clip) return std::nullopt;
        std::vector<Eigen::VectorXd> guesses{ls_theta(aug, mdl.invert(q))};
        if (hint) guesses.push_back(*hint);
        return fit_multipliers(mdl, aug, b, guesses);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::StepFailed) throw;
        return std::nullopt;
    }
}

struct Iterate {
    Eigen::VectorXd q;
    NewtonResult image;
    double fp = kInf;
    double cr = kInf;
};

/// Newton on T(q) - q over the affine set {A q = b}, with a finite-difference
/// Jacobian. Used when damped iteration stalls on an unstable fixed point.
inline std::optional<Iterate> newton_fixed_point(const MaxEntProblem& pr, const Eigen::MatrixXd& aug,
                                                 const Eigen::VectorXd& b, Iterate x, double tol,
                                                 std::vector<double>* trace, int& iterations) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(aug, Eigen::ComputeFullV);
    const Eigen::Index rank = aug.rows();
    const Eigen::MatrixXd null = svd.matrixV().rightCols(aug.cols() - rank);
    Eigen::VectorXd q = x.q - aug.transpose() * (aug * aug.transpose()).ldlt().solve(aug * x.q - b);
    std::optional<NewtonResult> img = fixed_point_map(pr, aug, b, q, x.image.theta);
    if (!img) return std::nullopt;
    if (null.cols() == 0) return Iterate{q, *img, (img->q - q).lpNorm<Eigen::Infinity>(), 0.0};
    for (int it = 0; it < 60; ++it) {
        const Eigen::VectorXd res = img->q - q;
        const double fp = res.lpNorm<Eigen::Infinity>();
        if (trace) trace->push_back(fp);
        ++iterations;
        if (fp < 1e-2 * tol) break;
        const Eigen::VectorXd r = null.transpose() * res;
        Eigen::MatrixXd jac(null.cols(), null.cols());
        bool ok = true;
        for (Eigen::Index j = 0; j < null.cols() && ok; ++j) {
            const double h = 1e-7 * std::max(1e-3, q.maxCoeff());
            const Eigen::VectorXd qj = q + h * null.col(j);
            const std::optional<NewtonResult> ij = fixed_point_map(pr, aug, b, qj, img->theta);
            if (!ij) ok = false;
            else jac.col(j) = (null.transpose() * (ij->q - qj) - r) / h;
        }
        if (!ok) break;
        const Eigen::VectorXd dz = jac.colPivHouseholderQr().solve(-r);
        if (!dz.allFinite()) break;
        bool moved = false;
        for (double t = 1.0; t > 1e-6; t *= 0.5) {
            const Eigen::VectorXd cand = q + t * (null * dz);
            const std::optional<NewtonResult> ic = fixed_point_map(pr, aug, b, cand, img->theta);
            if (ic && (ic->q - cand).lpNorm<Eigen::Infinity>() < (1.0 - 1e-4 * t) * fp) {
                q = cand;
                img = ic;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    const double fp = (img->q - q).lpNorm<Eigen::Infinity>();
    const double cr = (aug * q - b).lpNorm<Eigen::Infinity>();
    if (std::max(fp, cr) >= tol) return std::nullopt;
    return Iterate{q, *img, fp, cr};
}

} // namespace detail

inline MaxEntSolution solve(const MaxEntProblem& pr, const MaxEntOptions& opts = {}) {
    detail::check_problem(pr);
    const auto n = static_cast<Eigen::Index>(pr.n);
    const Eigen::MatrixXd aug = detail::augmented(pr);
    const Eigen::VectorXd b = detail::targets(pr);

    Eigen::VectorXd q;
    const Eigen::VectorXd center = detail::maximin_point(pr);
    if (opts.start) {
        q = *opts.start;
        if (q.size() != n) fail(ErrorKind::DimensionMismatch, "start has the wrong length");
        if ((q.array() <= 0.0).any()) fail(ErrorKind::UnsupportedSupport, "start must be strictly positive");
        q /= q.sum();
    } else {
        q = 0.5 * center + 0.5 * Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    }

    MaxEntSolution sol;
    std::vector<double>* trace = opts.keep_trace ? &sol.trace : nullptr;
    double omega = opts.omega;
    std::optional<Eigen::VectorXd> theta;
    std::optional<detail::Iterate> best, good, done;
    int best_it = 0;
    Eigen::VectorXd q_prev = q, target_prev = q;
    double prev_fp = kInf, rho_prev = 0.0;
    int calm = 0, it = 0;
    bool step_failed = false;
    for (; it < opts.max_iter; ++it) {
        std::optional<detail::NewtonResult> nr = detail::fixed_point_map(pr, aug, b, q, theta);
        if (!nr) nr = detail::fixed_point_map(pr, aug, b, q, theta, true);
        if (!nr) {
            if (it == 0) break;
            omega *= 0.5;
            if (omega < opts.min_omega) {
                step_failed = true;
                break;
            }
            q = (1.0 - omega) * q_prev + omega * target_prev;
            q /= q.sum();
            continue;
        }
        theta = nr->theta;
        const double fp = (nr->q - q).lpNorm<Eigen::Infinity>();
        const double cr = (aug * q - b).lpNorm<Eigen::Infinity>();
        if (trace) trace->push_back(std::max(fp, cr));
        const detail::Iterate cur{q, *nr, fp, cr};
        if (!best || std::max(fp, cr) < std::max(best->fp, best->cr)) {
            best = cur;
            best_it = it;
        }
        // Distance to the limit of a linearly contracting iteration.
        const double rho = std::isfinite(prev_fp) && prev_fp > 0.0 ? std::clamp(fp / prev_fp, 0.0, 0.999) : 0.0;
        const double err = omega * fp / (1.0 - std::max(rho, rho_prev));
        rho_prev = rho;
        const double metric = std::max({fp, cr, err});
        if (metric < opts.tol) {
            // Keep refining while it is cheap; the multipliers are sensitive to q.
            if (!good) good = cur;
            if (metric < 1e-3 * opts.tol || it - best_it > 30) {
                done = std::max(best->fp, best->cr) < std::max(good->fp, good->cr) ? *best : *good;
                ++it;
                break;
            }
        }
        if (fp > prev_fp) {
            omega *= 0.5;
            calm = 0;
            if (omega < 1e-3) break; // unstable fixed point: hand over to Newton
        } else if (++calm >= 20 && omega < opts.omega) {
            omega = std::min(2.0 * omega, opts.omega);
            calm = 0;
        }
        prev_fp = fp;
        q_prev = q;
        target_prev = nr->q;
        q = (1.0 - omega) * q + omega * nr->q;
        q /= q.sum();
    }
    sol.iterations = it;
    if (!done && good) done = std::max(best->fp, best->cr) < opts.tol ? *best : *good;
    if (!done && best) done = detail::newton_fixed_point(pr, aug, b, *best, opts.tol, trace, sol.iterations);
    if (!done) {
        // Globalize: climb the entropy from the maximin point, then certify on the fixed-point map.
        const Eigen::VectorXd top = detail::entropy_ascent(pr, aug, center);
        if (const auto img = detail::fixed_point_map(pr, aug, b, top, theta)) {
            const detail::Iterate start{top, *img, (img->q - top).lpNorm<Eigen::Infinity>(),
                                        (aug * top - b).lpNorm<Eigen::Infinity>()};
            done = detail::newton_fixed_point(pr, aug, b, start, opts.tol, trace, sol.iterations);
        }
    }
    if (!done) {
        if (step_failed) fail(ErrorKind::StepFailed, "damping exhausted without an admissible step");
        fail(ErrorKind::NotConverged, "maxent did not converge after " + std::to_string(sol.iterations) +
                                          " iterations (best residual " +
                                          std::to_string(best ? std::max(best->fp, best->cr) : kInf) + ")");
    }

    sol.q = done->q / done->q.sum();
    sol.fixed_point_residual = done->fp;
    sol.constraint_residual = done->cr;
    sol.p = sol.q.array().pow(1.0 / pr.h.alpha());
    sol.p /= sol.p.sum();
    sol.nu_raw = done->image.theta(0);
    sol.lambda_raw = done->image.theta.tail(pr.g.rows());
    const double sc = detail::multiplier_scale(pr.h);
    sol.nu = sc * sol.nu_raw;
    sol.lambda = sc * sol.lambda_raw;
    return sol;
}

/// psi = ln: q_i proportional to (nu + lambda . g_i)^{alpha/beta}.
inline MaxEntSolution closed_form_log(const MaxEntProblem& pr) {
    detail::check_problem(pr);
    if (pr.f.name != "log") fail(ErrorKind::BadParams, "closed form needs psi = log");
    if (pr.h.regime() != Regime::General) fail(ErrorKind::BadParams, "closed form needs beta (alpha + beta) != 0");
    detail::maximin_point(pr);
    const auto n = static_cast<Eigen::Index>(pr.n);
    const Eigen::MatrixXd aug = detail::augmented(pr);
    const Eigen::VectorXd b = detail::targets(pr);
    detail::StepModel mdl;
    mdl.e = pr.h.alpha() / pr.h.beta();
    mdl.base = Eigen::VectorXd::Zero(n);
    mdl.coef = Eigen::VectorXd::Ones(n);
    mdl.clip = mdl.e > 0.0;
    Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(aug.rows());
    theta0(0) = std::pow(static_cast<double>(n), -1.0 / mdl.e);
    detail::NewtonResult nr;
    try {
        nr = detail::fit_multipliers(mdl, aug, b, {theta0}, 1e-14, 1e-11);
    } catch (const Error&) {
        fail(ErrorKind::NotConverged, "closed-form root finder failed");
    }
    MaxEntSolution sol;
    sol.q = nr.q / nr.q.sum();
    sol.p = sol.q.array().pow(1.0 / pr.h.alpha());
    sol.p /= sol.p.sum();
    sol.nu = sol.nu_raw = nr.theta(0);
    sol.lambda = sol.lambda_raw = nr.theta.tail(pr.g.rows());
    sol.constraint_residual = (aug * sol.q - b).lpNorm<Eigen::Infinity>();
    return sol;
}

/// Entropy of the distribution whose alpha-escort is q.
inline double escort_entropy(const Eigen::VectorXd& q, const MaxEntProblem& pr) { return detail::escort_entropy_of(q, pr); }

/// Infinity norm of grad_q entropy + lambda_raw . (g - G) by central differences.
/// The entropy is homogeneous of degree zero in q, so the normalization
/// multiplier is -lambda_raw . G rather than nu.
inline double kkt_residual(const MaxEntProblem& pr, const MaxEntSolution& sol) {
    Eigen::VectorXd big_l = Eigen::VectorXd::Constant(sol.q.size(), -sol.lambda_raw.dot(pr.G));
    if (pr.g.rows() > 0) big_l += pr.g.transpose() * sol.lambda_raw;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < sol.q.size(); ++i) {
        const double step = 1e-5 * sol.q(i);
        Eigen::VectorXd up = sol.q, dn = sol.q;
        up(i) += step;
        dn(i) -= step;
        const double grad = (escort_entropy(up, pr) - escort_entropy(dn, pr)) / (2.0 * step);
        worst = std::max(worst, std::abs(grad + big_l(i)));
    }
    return worst;
}

} // namespace gabdiv
