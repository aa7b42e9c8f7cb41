#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

namespace gabdiv {

inline constexpr std::uint64_t kDefaultSeed = 42;

/// Seed from GABDIV_SEED when set, otherwise `fallback`.
inline std::uint64_t seed_from_env(std::uint64_t fallback) {
    if (const char* s = std::getenv("GABDIV_SEED")) {
        try {
            return std::stoull(s);
        } catch (...) {
        }
    }
    return fallback;
}

/// Portable generator: the std distributions are implementation-defined, so
/// uniforms are built directly from the 64-bit engine output.
class Rng {
public:
    explicit Rng(std::uint64_t seed = kDefaultSeed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

    double log_uniform(double lo_log, double hi_log) { return std::exp(uniform(lo_log, hi_log)); }

    double exponential() { return -std::log(uniform_pos()); }

    double normal() {
        const double u = uniform_pos();
        const double v = uniform();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
    }

    /// Flat Dirichlet sample of length n.
    std::vector<double> simplex(std::size_t n) {
        std::vector<double> x(n);
        double s = 0.0;
        for (double& v : x) {
            v = exponential();
            s += v;
        }
        for (double& v : x) v /= s;
        return x;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace gabdiv
