#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace colrec {

/// Mixes a base seed with a stream id into an independent sub-seed
/// (splitmix64 finalizer). Used to give every user / tree / fit its own
/// reproducible stream regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// mt19937_64 engine with hand-rolled variate transforms. The standard
// distributions are implementation-defined, so every draw here goes through
// explicit arithmetic on the raw engine output; sequences are identical on
// any conforming platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    /// Standard normal via Box-Muller; generates pairs, caches the second.
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        // u1 in (0, 1] keeps the log finite.
        double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    /// Exponential with the given rate, via inverse CDF.
    double exponential(double rate) {
        double u = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
        return -std::log(u) / rate;
    }

private:
    std::mt19937_64 gen_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace colrec
