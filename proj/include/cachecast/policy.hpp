#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cachecast/valuefn.hpp"

namespace cachecast {

enum class TargetKind { User, Cache };

/// One multicast decision for one segment. The rate constraint of the target
/// is met with equality under the high-SNR model; every missing cache whose
/// gain is at least the target gain decodes as a side effect.
struct SegmentAction {
    int segment = 0;
    TargetKind target = TargetKind::User;
    int target_cache = -1; // valid when target == Cache
    double power = 0.0;
    double symbols = 0.0;
    std::vector<int> filled_caches; // missing caches with gain >= target gain
};

struct ScheduleOutcome {
    std::vector<SegmentAction> actions; // only segments the user cannot get from caches
    double immediate_cost = 0.0;
    double energy_cost = 0.0; // w_e P N part
    double time_cost = 0.0;   // w_t N part
    ReducedState next_state;
};

enum class Baseline {
    UserOnly,       // serve the requesting user only; stronger caches fill for free
    FillAllOnFirst, // first request targets the weakest receiver so every cache decodes
};

/// True when some covering cache already holds segment s.
inline bool user_obtainable(const ReducedState& state, const RequestDraw& draw, int s) {
    for (int c : draw.covering)
        if (state.get(c, s))
            return true;
    return false;
}

/// Monotone buffer transition: an action on segment s fills every cache whose
/// large-scale gain reaches the target gain; set bits persist.
inline ReducedState next_state(const ReducedState& state,
                               const std::vector<SegmentAction>& actions,
                               const RequestDraw& draw) {
    ReducedState next = state;
    for (const auto& a : actions) {
        const double target_gain = a.target == TargetKind::User
                                       ? draw.user_gain(a.segment)
                                       : draw.cache_gain(a.target_cache, a.segment);
        for (int c = 0; c < state.caches; ++c)
            if (draw.cache_gain(c, a.segment) >= target_gain)
                next.set(c, a.segment, true);
    }
    return next;
}

namespace detail {

struct Candidate {
    bool is_user = false;
    int cache = -1;
    double gain = 0.0;
};

inline SegmentAction make_action(const ReducedState& state, const RequestDraw& draw, int segment,
                                 const Candidate& cand, const SegmentCostSolution& sol) {
    SegmentAction a;
    a.segment = segment;
    a.target = cand.is_user ? TargetKind::User : TargetKind::Cache;
    a.target_cache = cand.is_user ? -1 : cand.cache;
    a.power = sol.power;
    a.symbols = sol.symbols;
    for (int c = 0; c < state.caches; ++c)
        if (!state.get(c, segment) && draw.cache_gain(c, segment) >= cand.gain)
            a.filled_caches.push_back(c);
    return a;
}

inline void accumulate(ScheduleOutcome& out, const ScenarioConfig& cfg, const SegmentAction& a) {
    out.energy_cost += cfg.weight_energy * a.power * a.symbols;
    out.time_cost += cfg.weight_time * a.symbols;
    out.immediate_cost += cfg.weight_energy * a.power * a.symbols + cfg.weight_time * a.symbols;
}

} // namespace detail

/**
 * Online multicast policy with the linear value approximation. Per segment
 * the candidate targets are the user and every missing cache weaker than the
 * user; a candidate is charged its own transmission cost plus the
 * Poisson-mixture penalties of the missing caches that would stay weaker
 * than it. Ties prefer the higher-gain (cheaper) target.
 */
inline ScheduleOutcome amdp_schedule(const ScenarioConfig& cfg, const ReducedState& state,
                                     const RequestDraw& draw, double lambda,
                                     double remaining_lifetime, const ValueTable& table) {
    if (state.caches != table.caches)
        throw std::invalid_argument("state and table disagree on cache count");
    ScheduleOutcome out;

    std::vector<double> penalty(static_cast<std::size_t>(state.caches), 0.0);
    for (int c = 0; c < state.caches; ++c)
        penalty[static_cast<std::size_t>(c)] = poisson_penalty(c, lambda, remaining_lifetime, table);

    for (int s = 0; s < state.segments; ++s) {
        if (user_obtainable(state, draw, s))
            continue;
        const double user_gain = draw.user_gain(s);
        std::vector<detail::Candidate> candidates;
        candidates.push_back({true, -1, user_gain});
        for (int c = 0; c < state.caches; ++c)
            if (!state.get(c, s) && draw.cache_gain(c, s) <= user_gain)
                candidates.push_back({false, c, draw.cache_gain(c, s)});
        // descending gain, user first among equal gains; with strict-less
        // selection below this makes ties resolve to the cheaper target
        std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
            if (a.gain != b.gain)
                return a.gain > b.gain;
            return a.is_user && !b.is_user;
        });

        double best_q = std::numeric_limits<double>::infinity();
        const detail::Candidate* best = nullptr;
        SegmentCostSolution best_sol;
        for (const auto& cand : candidates) {
            const double theta = theta_of_gain(cand.gain, cfg.antennas, cfg.noise_power);
            const SegmentCostSolution sol = segment_min_cost(theta, cfg.weight_energy,
                                                             cfg.weight_time, cfg.bits_per_segment());
            double q = sol.cost;
            for (int c = 0; c < state.caches; ++c)
                if (!state.get(c, s) && draw.cache_gain(c, s) < cand.gain)
                    q += penalty[static_cast<std::size_t>(c)];
            if (q < best_q) {
                best_q = q;
                best = &cand;
                best_sol = sol;
            }
        }
        SegmentAction action = detail::make_action(state, draw, s, *best, best_sol);
        detail::accumulate(out, cfg, action);
        out.actions.push_back(std::move(action));
    }
    out.next_state = next_state(state, out.actions, draw);
    return out;
}

/// Baseline policies. UserOnly targets the requesting user for every needed
/// segment. FillAllOnFirst spends the first request of a file targeting, per
/// segment, the weakest receiver among the still-missing caches and the
/// user, so the whole cache population decodes at once; afterwards it
/// behaves like UserOnly.
inline ScheduleOutcome baseline_schedule(const ScenarioConfig& cfg, Baseline kind,
                                         const ReducedState& state, const RequestDraw& draw,
                                         bool first_request) {
    ScheduleOutcome out;
    for (int s = 0; s < state.segments; ++s) {
        if (user_obtainable(state, draw, s))
            continue;
        detail::Candidate cand{true, -1, draw.user_gain(s)};
        if (kind == Baseline::FillAllOnFirst && first_request) {
            for (int c = 0; c < state.caches; ++c)
                if (!state.get(c, s) && draw.cache_gain(c, s) < cand.gain)
                    cand = {false, c, draw.cache_gain(c, s)};
        }
        const double theta = theta_of_gain(cand.gain, cfg.antennas, cfg.noise_power);
        const SegmentCostSolution sol = segment_min_cost(theta, cfg.weight_energy,
                                                         cfg.weight_time, cfg.bits_per_segment());
        SegmentAction action = detail::make_action(state, draw, s, cand, sol);
        detail::accumulate(out, cfg, action);
        out.actions.push_back(std::move(action));
    }
    out.next_state = next_state(state, out.actions, draw);
    return out;
}

/**
 * Exact online policy for desk-scale instances: enumerates the joint
 * per-segment candidate actions and scores each with its immediate cost plus
 * the Poisson mixture of exact continuation values over the remaining
 * request count.
 */
inline ScheduleOutcome optimal_schedule_tiny(const ScenarioConfig& cfg, const ReducedState& state,
                                             const RequestDraw& draw, double lambda,
                                             double remaining_lifetime, const ExactTables& exact) {
    if (state.caches != exact.caches || state.segments != exact.segments)
        throw std::invalid_argument("state and exact tables disagree on dimensions");

    struct Option {
        bool transmit = false;
        detail::Candidate cand;
        SegmentCostSolution sol;
        std::uint32_t fill = 0;
    };
    const std::uint32_t mask = state_mask(state);
    auto bit_of = [&](int c, int s) { return 1u << (c * state.segments + s); };

    std::vector<std::vector<Option>> options(static_cast<std::size_t>(state.segments));
    for (int s = 0; s < state.segments; ++s) {
        auto& opts = options[static_cast<std::size_t>(s)];
        if (user_obtainable(state, draw, s)) {
            opts.push_back({}); // no transmission, state unchanged
            continue;
        }
        std::vector<detail::Candidate> candidates;
        candidates.push_back({true, -1, draw.user_gain(s)});
        for (int c = 0; c < state.caches; ++c)
            if (!state.get(c, s) && draw.cache_gain(c, s) <= draw.user_gain(s))
                candidates.push_back({false, c, draw.cache_gain(c, s)});
        std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
            if (a.gain != b.gain)
                return a.gain > b.gain;
            return a.is_user && !b.is_user;
        });
        for (const auto& cand : candidates) {
            Option o;
            o.transmit = true;
            o.cand = cand;
            const double theta = theta_of_gain(cand.gain, cfg.antennas, cfg.noise_power);
            o.sol = segment_min_cost(theta, cfg.weight_energy, cfg.weight_time, cfg.bits_per_segment());
            for (int c = 0; c < state.caches; ++c)
                if (!state.get(c, s) && draw.cache_gain(c, s) >= cand.gain)
                    o.fill |= bit_of(c, s);
            opts.push_back(o);
        }
    }

    const double mu = lambda * remaining_lifetime;
    auto continuation = [&](std::uint32_t next_mask) {
        if (mu <= 0)
            return 0.0;
        double pmf = std::exp(-mu);
        double acc = 0.0;
        for (int n = 1; n <= exact.n_stages; ++n) {
            pmf *= mu / n;
            acc += pmf * exact.value(n, next_mask);
        }
        return acc;
    };

    // enumerate the joint action across segments
    std::vector<std::size_t> pick(static_cast<std::size_t>(state.segments), 0);
    std::vector<std::size_t> best_pick;
    double best_score = std::numeric_limits<double>::infinity();
    for (;;) {
        double cost = 0.0;
        std::uint32_t fill = 0;
        for (int s = 0; s < state.segments; ++s) {
            const auto& o = options[static_cast<std::size_t>(s)][pick[static_cast<std::size_t>(s)]];
            if (o.transmit)
                cost += o.sol.cost;
            fill |= o.fill;
        }
        const double score = cost + continuation(mask | fill);
        if (score < best_score) {
            best_score = score;
            best_pick = pick;
        }
        int s = 0;
        for (; s < state.segments; ++s) {
            auto& p = pick[static_cast<std::size_t>(s)];
            if (++p < options[static_cast<std::size_t>(s)].size())
                break;
            p = 0;
        }
        if (s == state.segments)
            break;
    }

    ScheduleOutcome out;
    for (int s = 0; s < state.segments; ++s) {
        const auto& o = options[static_cast<std::size_t>(s)][best_pick[static_cast<std::size_t>(s)]];
        if (!o.transmit)
            continue;
        SegmentAction action = detail::make_action(state, draw, s, o.cand, o.sol);
        detail::accumulate(out, cfg, action);
        out.actions.push_back(std::move(action));
    }
    out.next_state = next_state(state, out.actions, draw);
    return out;
}

} // namespace cachecast
