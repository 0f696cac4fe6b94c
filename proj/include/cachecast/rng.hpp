#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string_view>

namespace cachecast {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Deterministic random stream (xoshiro256**). All variates are produced from
/// raw bits inside this class, so equal seeds give bit-identical draws on any
/// platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t sm = seed ^ (0x6a09e667f3bcc909ULL + stream * 0xa24baed4963ee407ULL);
        for (auto& word : state_)
            word = detail::splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Standard normal via Box-Muller; always consumes exactly two uniforms.
    double normal() {
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double exponential(double mean) {
        return -mean * std::log(1.0 - uniform01());
    }

    /// Lognormal shadowing gain: 10^(X/10), X ~ N(0, sigma_db^2).
    double shadowing_gain(double sigma_db) {
        return std::pow(10.0, sigma_db * normal() / 10.0);
    }

    /// Poisson count by exact pmf inversion. Means above 500 are split using
    /// the additivity of independent Poisson counts.
    int poisson(double mean) {
        if (mean < 0.0)
            throw std::invalid_argument("poisson mean must be nonnegative");
        int total = 0;
        while (mean > 500.0) {
            total += poisson_chunk(500.0);
            mean -= 500.0;
        }
        return total + poisson_chunk(mean);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    int poisson_chunk(double mean) {
        if (mean <= 0.0)
            return 0;
        const double u = uniform01();
        double p = std::exp(-mean);
        double cum = p;
        int k = 0;
        const int cap = static_cast<int>(mean + 60.0 * std::sqrt(mean + 1.0) + 100.0);
        while (u > cum && k < cap) {
            ++k;
            p *= mean / k;
            cum += p;
            if (p == 0.0)
                break;
        }
        return k;
    }

    std::uint64_t state_[4];
};

/// Derives an independent stream for (purpose, index) from one master seed.
inline Rng substream(std::uint64_t master_seed, std::string_view tag, std::uint64_t index = 0) {
    return Rng(master_seed, fnv1a64(tag) ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
}

} // namespace cachecast
