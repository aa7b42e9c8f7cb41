#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gabdiv/error.hpp"

namespace gabdiv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Slack allowed on the total-mass bounds of sub-probability and probability measures.
inline constexpr double kMassTolerance = 1e-9;

/// Hyperparameter regimes. The edge regimes are those where alpha, beta or
/// their sum vanishes; SumOne is the general formula with alpha + beta == 1,
/// which has its own validity condition.
enum class Regime { General, AlphaZero, BetaZero, SumZero, BothZero, SumOne };

inline const char* to_string(Regime r) {
    switch (r) {
    case Regime::General: return "General";
    case Regime::AlphaZero: return "AlphaZero";
    case Regime::BetaZero: return "BetaZero";
    case Regime::SumZero: return "SumZero";
    case Regime::BothZero: return "BothZero";
    case Regime::SumOne: return "SumOne";
    }
    return "Unknown";
}

/// The (alpha, beta) pair. Classification uses exact comparisons; callers
/// that land close to a boundary get the general formula and a warning from
/// the divergence layer.
class Hyper {
public:
    Hyper(double alpha, double beta) : alpha_(alpha), beta_(beta) {
        if (!std::isfinite(alpha) || !std::isfinite(beta))
            fail(ErrorKind::BadParams, "alpha and beta must be finite");
        regime_ = classify(alpha, beta);
    }

    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    double sum() const noexcept { return alpha_ + beta_; }
    Regime regime() const noexcept { return regime_; }

    /// alpha + beta == 1 exactly, including (1, 0) and (0, 1).
    bool sum_is_one() const noexcept { return alpha_ + beta_ == 1.0; }

    /// True when the pair sits within `tol` of a regime boundary without being on it.
    bool near_boundary(double tol = 1e-6) const noexcept {
        auto near = [tol](double v) { return v != 0.0 && std::abs(v) < tol; };
        const double s = alpha_ + beta_;
        return near(alpha_) || near(beta_) || near(s) || near(s - 1.0);
    }

    Hyper swapped() const { return Hyper(beta_, alpha_); }

    static Regime classify(double alpha, double beta) noexcept {
        if (alpha == 0.0 && beta == 0.0) return Regime::BothZero;
        if (alpha == 0.0) return Regime::AlphaZero;
        if (beta == 0.0) return Regime::BetaZero;
        if (alpha + beta == 0.0) return Regime::SumZero;
        if (alpha + beta == 1.0) return Regime::SumOne;
        return Regime::General;
    }

private:
    double alpha_;
    double beta_;
    Regime regime_;
};

/// x^a with the conventions 0^a = 0 (a > 0), 0^0 = 1 and 0^a = +inf (a < 0).
inline double pow0(double x, double a) {
    if (x == 0.0) {
        if (a > 0.0) return 0.0;
        if (a == 0.0) return 1.0;
        return kInf;
    }
    if (a == 1.0) return x;
    return std::pow(x, a);
}

/// A finitely supported (sub-)probability measure: density values p_i with
/// respect to strictly positive base weights mu_i.
class Measure {
public:
    /// Validates every invariant, including the sub-probability bound.
    static Measure create(std::vector<std::string> labels, std::vector<double> density,
                          std::vector<double> base_weight = {}) {
        Measure m = unbounded(std::move(labels), std::move(density), std::move(base_weight));
        if (!m.is_subprobability())
            fail(ErrorKind::InvalidMeasure,
                 "total mass " + std::to_string(m.mass()) + " exceeds 1");
        return m;
    }

    /// Validates everything except the mass bound. Used for zoomed and
    /// rescaled measures, whose mass is reported rather than enforced.
    static Measure unbounded(std::vector<std::string> labels, std::vector<double> density,
                             std::vector<double> base_weight = {}) {
        const std::size_t n = density.size();
        if (n == 0) fail(ErrorKind::InvalidMeasure, "a measure needs at least one atom");
        if (labels.empty()) labels = default_labels(n);
        if (base_weight.empty()) base_weight.assign(n, 1.0);
        if (labels.size() != n || base_weight.size() != n)
            fail(ErrorKind::InvalidMeasure, "labels, density and base_weight differ in length");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(density[i] >= 0.0) || !std::isfinite(density[i]))
                fail(ErrorKind::InvalidMeasure, "density must be finite and nonnegative");
            if (!(base_weight[i] > 0.0) || !std::isfinite(base_weight[i]))
                fail(ErrorKind::InvalidMeasure, "base weights must be finite and positive");
        }
        Measure m;
        m.labels_ = std::move(labels);
        m.density_ = std::move(density);
        m.weight_ = std::move(base_weight);
        return m;
    }

    /// Convenience constructor with generated labels "0", "1", ...
    static Measure from_density(std::vector<double> density, std::vector<double> base_weight = {}) {
        return create({}, std::move(density), std::move(base_weight));
    }

    std::size_t size() const noexcept { return density_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::span<const double> density() const noexcept { return density_; }
    std::span<const double> base_weight() const noexcept { return weight_; }
    double density(std::size_t i) const { return density_[i]; }
    double weight(std::size_t i) const { return weight_[i]; }

    double mass() const noexcept {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) s += density_[i] * weight_[i];
        return s;
    }

    /// Total base measure, sum of mu_i. Plays the role of "1" in the edge
    /// formulas whenever the base measure is not itself normalized.
    double base_mass() const noexcept {
        double s = 0.0;
        for (double w : weight_) s += w;
        return s;
    }

    bool is_subprobability() const noexcept { return mass() <= 1.0 + kMassTolerance; }
    bool is_probability() const noexcept { return std::abs(mass() - 1.0) <= kMassTolerance; }
    bool strictly_positive() const noexcept {
        for (double p : density_)
            if (!(p > 0.0)) return false;
        return true;
    }

    bool same_alphabet(const Measure& other) const noexcept {
        return labels_ == other.labels_ && weight_ == other.weight_;
    }

    /// Same alphabet, new densities; mass bound not enforced.
    Measure with_density(std::vector<double> density) const {
        return unbounded(labels_, std::move(density), weight_);
    }

    static std::vector<std::string> default_labels(std::size_t n) {
        std::vector<std::string> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
        return out;
    }

private:
    Measure() = default;

    std::vector<std::string> labels_;
    std::vector<double> density_;
    std::vector<double> weight_;
};

inline void require_same_alphabet(const Measure& p, const Measure& q) {
    if (p.size() != q.size())
        fail(ErrorKind::DimensionMismatch, "measures have different numbers of atoms");
    if (!p.same_alphabet(q))
        fail(ErrorKind::DimensionMismatch, "measures have different labels or base weights");
}

/// ||p||_a^a = sum_i p_i^a mu_i. Returns +inf instead of failing.
inline double norm_pow(const Measure& p, double a) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += pow0(p.density(i), a) * p.weight(i);
    return s;
}

/// <p, q>_{a, b} = sum_i p_i^a q_i^b mu_i.
inline double inner(const Measure& p, const Measure& q, double a, double b) {
    require_same_alphabet(p, q);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double u = pow0(p.density(i), a);
        const double v = pow0(q.density(i), b);
        if ((u == 0.0 && std::isinf(v)) || (v == 0.0 && std::isinf(u)))
            fail(ErrorKind::NonFiniteResult, "0 * inf in inner product at atom " + p.labels()[i]);
        s += u * v * p.weight(i);
    }
    return s;
}

inline double inner(const Measure& p, const Measure& q, const Hyper& h) {
    return inner(p, q, h.alpha(), h.beta());
}

struct ZoomResult {
    Measure measure;
    double mass; ///< sum_i p_i^w mu_i
    bool subprobability;
};

/// Unnormalized w-zoom: density p_i^w on the same base weights.
inline ZoomResult zoom_unnorm(const Measure& p, double w) {
    std::vector<double> d(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (w < 0.0 && p.density(i) == 0.0)
            fail(ErrorKind::UnsupportedSupport, "negative zoom of a zero atom");
        d[i] = pow0(p.density(i), w);
        if (!std::isfinite(d[i])) fail(ErrorKind::NonFiniteResult, "zoomed density overflowed");
    }
    Measure m = p.with_density(std::move(d));
    const double mass = m.mass();
    return {std::move(m), mass, mass <= 1.0 + kMassTolerance};
}

/// Normalized (escort) zoom p^a / ||p||_a^a.
inline Measure zoom_norm(const Measure& p, double a) {
    ZoomResult z = zoom_unnorm(p, a);
    if (!(z.mass > 0.0) || !std::isfinite(z.mass))
        fail(ErrorKind::InvalidMeasure, "zoom normalizer is zero or infinite");
    std::vector<double> d(z.measure.density().begin(), z.measure.density().end());
    for (double& v : d) v /= z.mass;
    return p.with_density(std::move(d));
}

/// Kullback-Leibler sum p_i ln(p_i / q_i) mu_i with 0 ln 0 = 0; +inf on support mismatch.
inline double kl(const Measure& p, const Measure& q) {
    require_same_alphabet(p, q);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p.density(i);
        const double qi = q.density(i);
        if (pi == 0.0) continue;
        if (qi == 0.0) return kInf;
        s += pi * std::log(pi / qi) * p.weight(i);
    }
    return s;
}

/// Normal density on an equispaced grid over [lo, hi] with trapezoid weights.
inline Measure normal_on_grid(double mean, double sigma, double lo, double hi, std::size_t nodes, double mass = 1.0) {
    if (nodes < 2 || !(hi > lo) || !(sigma > 0.0)) fail(ErrorKind::BadParams, "bad quadrature grid");
    const double step = (hi - lo) / static_cast<double>(nodes - 1);
    std::vector<double> d(nodes), w(nodes, step);
    w.front() = w.back() = 0.5 * step;
    for (std::size_t i = 0; i < nodes; ++i) {
        const double z = (lo + step * static_cast<double>(i) - mean) / sigma;
        d[i] = mass * std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
    }
    return Measure::unbounded({}, std::move(d), std::move(w));
}

/// Independent combination: atoms (i, j), density p_i q_j, base weight mu_i nu_j.
inline Measure product(const Measure& p, const Measure& q) {
    std::vector<std::string> labels;
    std::vector<double> d;
    std::vector<double> w;
    labels.reserve(p.size() * q.size());
    d.reserve(p.size() * q.size());
    w.reserve(p.size() * q.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j) {
            labels.push_back(p.labels()[i] + "*" + q.labels()[j]);
            d.push_back(p.density(i) * q.density(j));
            w.push_back(p.weight(i) * q.weight(j));
        }
    return Measure::unbounded(std::move(labels), std::move(d), std::move(w));
}

} // namespace gabdiv
