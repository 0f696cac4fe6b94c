#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "cachecast/rng.hpp"
#include "cachecast/scenario.hpp"

namespace cachecast {

/// digamma at a positive integer: psi(n) = -gamma + sum_{k<n} 1/k.
inline double digamma_int(int n) {
    if (n < 1)
        throw std::invalid_argument("digamma_int requires a positive integer");
    double h = 0.0;
    for (int k = 1; k < n; ++k)
        h += 1.0 / k;
    return h - std::numbers::egamma;
}

/// Effective-SNR exponent theta = E[log2(|h|^2 / (N_T sigma_z^2))] for a
/// channel vector of N_T i.i.d. complex Gaussian entries with variance equal
/// to the large-scale gain. |h|^2 is a sum of N_T exponentials of that mean,
/// and E[ln of the sum] = psi(N_T) + ln(gain).
inline double theta_of_gain(double gain, int antennas, double noise_power) {
    if (!(gain > 0))
        throw std::domain_error("theta_of_gain requires a positive gain");
    return (digamma_int(antennas) + std::log(gain)) / std::numbers::ln2 -
           std::log2(antennas * noise_power);
}

/// High-SNR throughput in bits: R = N (theta + log2 P).
inline double high_snr_rate(double power, double symbols, double theta) {
    const double exponent = theta + std::log2(power);
    if (!(exponent > 0))
        throw std::domain_error("infeasible rate: theta + log2(power) must be positive");
    return symbols * exponent;
}

/// Flags transmissions whose effective SNR sits below 10 dB, where dropping
/// the +1 inside the exact ergodic rate costs more than about 5 percent.
inline bool high_snr_suspect(double power, double theta) {
    return theta + std::log2(power) < std::log2(10.0);
}

/// Monte Carlo estimate of the exact ergodic throughput
/// N E[log2(1 + |h|^2 P / (N_T sigma_z^2))]; test oracle for high_snr_rate.
inline double ergodic_rate_mc(double power, double symbols, double gain, int antennas,
                              double noise_power, int samples, Rng& rng) {
    if (samples < 1)
        throw std::invalid_argument("ergodic_rate_mc requires at least one sample");
    double acc = 0.0;
    for (int i = 0; i < samples; ++i) {
        double h2 = 0.0;
        for (int a = 0; a < antennas; ++a)
            h2 += rng.exponential(gain);
        acc += std::log2(1.0 + h2 * power / (antennas * noise_power));
    }
    return symbols * acc / samples;
}

inline double pathloss(const ScenarioConfig& cfg, double dist) {
    const double d = std::max(dist, cfg.pathloss_ref_distance);
    return std::pow(d / cfg.pathloss_ref_distance, -cfg.pathloss_exponent);
}

/// One request event's large-scale realization: user pathloss, per-segment
/// shadowing for the user and every cache, plus geometry-derived helpers
/// (cache pathloss and the covering-cache set) so that scheduling decisions
/// need no further geometry lookups.
struct RequestDraw {
    Point user_location;
    double remaining_lifetime = 0.0;
    double user_pathloss = 0.0;
    std::vector<double> user_shadowing;   // one entry per segment
    std::vector<double> cache_pathloss;   // one entry per cache
    std::vector<double> cache_shadowing;  // caches x segments, row-major
    std::vector<int> covering;            // caches whose service disc holds the user
    int caches = 0;
    int segments = 0;

    double user_gain(int s) const {
        return user_pathloss * user_shadowing[static_cast<std::size_t>(s)];
    }
    double cache_gain(int c, int s) const {
        return cache_pathloss[static_cast<std::size_t>(c)] *
               cache_shadowing[static_cast<std::size_t>(c * segments + s)];
    }
};

/// Draws shadowing for one request, i.i.d. per (receiver, segment).
inline RequestDraw draw_large_scale(const ScenarioConfig& cfg, const Geometry& geo,
                                    Point user_location, double remaining_lifetime, Rng& rng) {
    RequestDraw d;
    d.user_location = user_location;
    d.remaining_lifetime = remaining_lifetime;
    d.caches = geo.cache_count();
    d.segments = cfg.segments;
    d.user_pathloss = pathloss(cfg, norm(user_location));
    d.user_shadowing.reserve(static_cast<std::size_t>(cfg.segments));
    for (int s = 0; s < cfg.segments; ++s)
        d.user_shadowing.push_back(rng.shadowing_gain(cfg.shadowing_sigma_db));
    d.cache_pathloss.reserve(static_cast<std::size_t>(d.caches));
    d.cache_shadowing.reserve(static_cast<std::size_t>(d.caches * cfg.segments));
    for (int c = 0; c < d.caches; ++c) {
        d.cache_pathloss.push_back(pathloss(cfg, norm(geo.cache_centers[static_cast<std::size_t>(c)])));
        for (int s = 0; s < cfg.segments; ++s)
            d.cache_shadowing.push_back(rng.shadowing_gain(cfg.shadowing_sigma_db));
    }
    d.covering = coverage_caches(user_location, geo);
    return d;
}

/// Large-scale realization at one proactive transmission opportunity; the
/// whole segment fits in a single shadowing coherence window, so one gain
/// per cache.
struct ProactiveDraw {
    int opportunity = 0;
    std::vector<double> cache_pathloss;
    std::vector<double> cache_shadowing;

    double cache_gain(int c) const {
        return cache_pathloss[static_cast<std::size_t>(c)] *
               cache_shadowing[static_cast<std::size_t>(c)];
    }
};

inline ProactiveDraw draw_proactive(const ScenarioConfig& cfg, const Geometry& geo,
                                    int opportunity, Rng& rng) {
    ProactiveDraw d;
    d.opportunity = opportunity;
    d.cache_pathloss.reserve(static_cast<std::size_t>(geo.cache_count()));
    d.cache_shadowing.reserve(static_cast<std::size_t>(geo.cache_count()));
    for (int c = 0; c < geo.cache_count(); ++c) {
        d.cache_pathloss.push_back(pathloss(cfg, norm(geo.cache_centers[static_cast<std::size_t>(c)])));
        d.cache_shadowing.push_back(rng.shadowing_gain(cfg.shadowing_sigma_db));
    }
    return d;
}

} // namespace cachecast
