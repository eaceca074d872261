#pragma once

#include <cstdint>
#include <random>

namespace modepull {

/// splitmix64 step; also used to derive independent stream seeds so that
/// replicate k of a master seed is reproducible regardless of execution
/// order.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t stream) {
    std::uint64_t state = master_seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
    std::uint64_t s = splitmix64(state);
    s ^= splitmix64(state);
    return s;
}

/// Deterministic uniform/Gaussian sampler with an explicitly specified
/// output stream (Box-Muller on top of mt19937_64), so results do not
/// depend on standard-library distribution internals.
class RandomSampler {
public:
    explicit RandomSampler(std::uint64_t seed) : gen_(seed) {}

    /// Uniform in (0, 1].
    double uniform01() {
        return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) { return gen_() % n; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(gen_() >> 11) * 0x1.0p-53);
    }

    /// Standard normal deviate.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace modepull
