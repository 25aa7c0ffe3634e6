#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace rhpg {

/// splitmix64 finalizer; the avalanche step used for all seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seed for one (eps, run) cell of an experiment grid. Documented contract:
/// chained splitmix64 over (base_seed, eps_index, run_index).
inline std::uint64_t cell_seed(std::uint64_t base_seed, std::uint64_t eps_index,
                               std::uint64_t run_index) {
    std::uint64_t s = mix64(base_seed);
    s = mix64(s ^ eps_index);
    s = mix64(s ^ run_index);
    return s;
}

// Deterministic random stream. The engine is std::mt19937_64; uniform and
// normal draws are generated by fixed transforms so that a given seed yields
// the same sequence on every standard library implementation.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) from the top 53 bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via the Marsaglia polar method (pairs are cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    Eigen::VectorXd normal_vector(Eigen::Index n) {
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) z[i] = normal();
        return z;
    }

    /// Uniform point on the unit sphere in R^n (for n = 1 this is +/-1).
    Eigen::VectorXd unit_sphere(Eigen::Index n) {
        Eigen::VectorXd z;
        double norm;
        do {
            z = normal_vector(n);
            norm = z.norm();
        } while (norm == 0.0);
        return z / norm;
    }

    /// Derive an independent stream for trial `index`; per-trial streams make
    /// suite trials order-independent and safe to parallelize.
    RngStream substream(std::uint64_t index) const {
        return RngStream(mix64(seed_ ^ mix64(index)));
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace rhpg
