#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "cachecast/policy.hpp"

namespace cachecast {

struct ProactiveGain {
    double delta_g = 0.0;   // cost-saving ratio
    double numerator = 0.0; // mixture penalty of every cache still missing the segment
    double q_star = 0.0;    // placement cost plus residual penalties at the best target
    SegmentAction action;
};

// near-zero denominators are capped rather than reported as infinite
inline constexpr double kProactiveDeltaCap = 1e6;

/// Evaluates the cost-saving ratio of proactively multicasting one segment
/// at the current shadowing realization: candidates are the caches missing
/// the segment, each charged its placement cost plus the penalties of the
/// still-missing weaker caches; the ratio divides the segment's full missing
/// penalty by the best candidate total. Returns nothing when no cache misses
/// the segment.
inline std::optional<ProactiveGain> proactive_delta_gain(const ScenarioConfig& cfg, int segment,
                                                         const ReducedState& state,
                                                         double remaining_lifetime,
                                                         const ProactiveDraw& draw, double lambda,
                                                         const ValueTable& table) {
    std::vector<int> missing;
    for (int c = 0; c < state.caches; ++c)
        if (!state.get(c, segment))
            missing.push_back(c);
    if (missing.empty())
        return std::nullopt;

    std::vector<double> penalty(static_cast<std::size_t>(state.caches), 0.0);
    double numerator = 0.0;
    for (int c : missing) {
        penalty[static_cast<std::size_t>(c)] =
            poisson_penalty(c, lambda, std::max(remaining_lifetime, 0.0), table);
        numerator += penalty[static_cast<std::size_t>(c)];
    }

    std::sort(missing.begin(), missing.end(), [&](int a, int b) {
        if (draw.cache_gain(a) != draw.cache_gain(b))
            return draw.cache_gain(a) > draw.cache_gain(b);
        return a < b;
    });

    double best_q = std::numeric_limits<double>::infinity();
    int best_cache = -1;
    SegmentCostSolution best_sol;
    for (int cand : missing) { // descending gain: ties keep the cheaper target
        const double gain = draw.cache_gain(cand);
        const double theta = theta_of_gain(gain, cfg.antennas, cfg.noise_power);
        const SegmentCostSolution sol =
            segment_min_cost(theta, cfg.weight_energy, cfg.weight_time, cfg.bits_per_segment());
        double q = sol.cost;
        for (int c : missing)
            if (draw.cache_gain(c) < gain)
                q += penalty[static_cast<std::size_t>(c)];
        if (q < best_q) {
            best_q = q;
            best_cache = cand;
            best_sol = sol;
        }
    }

    ProactiveGain g;
    g.numerator = numerator;
    g.q_star = best_q;
    g.delta_g = best_q > numerator / kProactiveDeltaCap ? numerator / best_q : kProactiveDeltaCap;
    g.action.segment = segment;
    g.action.target = TargetKind::Cache;
    g.action.target_cache = best_cache;
    g.action.power = best_sol.power;
    g.action.symbols = best_sol.symbols;
    const double target_gain = draw.cache_gain(best_cache);
    for (int c : missing)
        if (draw.cache_gain(c) >= target_gain)
            g.action.filled_caches.push_back(c);
    std::sort(g.action.filled_caches.begin(), g.action.filled_caches.end());
    return g;
}

struct ProactiveDecision {
    bool selected = false;
    int file = -1;
    int segment = -1;
    double delta_g = 0.0;
    SegmentAction action;
};

/// One placement opportunity across every live file: evaluates the ratio for
/// each (file, segment) with missing caches and takes the argmax when it
/// reaches the threshold; ties resolve to the lower file then lower segment.
inline ProactiveDecision proactive_select(const ScenarioConfig& cfg,
                                          const std::vector<const ReducedState*>& states,
                                          const std::vector<double>& remaining_lifetimes,
                                          const ProactiveDraw& draw,
                                          const std::vector<double>& lambdas,
                                          const ValueTable& table, double tau_prime) {
    ProactiveDecision decision;
    for (std::size_t f = 0; f < states.size(); ++f) {
        if (remaining_lifetimes[f] <= 0)
            continue;
        for (int s = 0; s < states[f]->segments; ++s) {
            const auto gain = proactive_delta_gain(cfg, s, *states[f], remaining_lifetimes[f],
                                                   draw, lambdas[f], table);
            if (!gain)
                continue;
            if (gain->delta_g > decision.delta_g) {
                decision.delta_g = gain->delta_g;
                decision.file = static_cast<int>(f);
                decision.segment = s;
                decision.action = gain->action;
            }
        }
    }
    decision.selected = decision.file >= 0 && decision.delta_g >= tau_prime;
    return decision;
}

/// Applies a selected placement: the targeted segment appears at the target
/// and every stronger cache that was missing it.
inline ReducedState apply_proactive(const ReducedState& state, const SegmentAction& action) {
    ReducedState next = state;
    for (int c : action.filled_caches)
        next.set(c, action.segment, true);
    return next;
}

} // namespace cachecast
