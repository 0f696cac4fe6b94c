#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cachecast/learn.hpp"
#include "cachecast/policy.hpp"
#include "cachecast/proactive.hpp"

namespace cachecast {

/// Request times of one file lifetime: Poisson(lambda T) count, i.i.d.
/// uniform times, sorted.
inline std::vector<double> generate_requests(double lambda, double horizon, Rng& rng) {
    if (lambda <= 0)
        throw std::invalid_argument("generate_requests requires a positive rate");
    if (horizon < 0)
        throw std::invalid_argument("generate_requests requires a nonnegative horizon");
    if (horizon == 0)
        return {};
    const int count = rng.poisson(lambda * horizon);
    std::vector<double> times(static_cast<std::size_t>(count));
    for (auto& t : times)
        t = rng.uniform(0.0, horizon);
    std::sort(times.begin(), times.end());
    return times;
}

/// One request with its large-scale channel realization.
struct RequestEvent {
    double time = 0.0; // in [0, lifetime]; draw.remaining_lifetime = lifetime - time
    RequestDraw draw;
};

/// Full request trajectory of one file lifetime, sorted by time.
inline std::vector<RequestEvent> generate_request_events(const ScenarioConfig& cfg,
                                                         const Geometry& geo, Rng& rng) {
    const std::vector<double> times = generate_requests(cfg.request_rate, cfg.lifetime, rng);
    std::vector<RequestEvent> events;
    events.reserve(times.size());
    for (double t : times) {
        const Point loc = sample_user_location(cfg, rng);
        events.push_back({t, draw_large_scale(cfg, geo, loc, cfg.lifetime - t, rng)});
    }
    return events;
}

struct CostLedger {
    double total = 0.0;
    double energy = 0.0;
    double time_weighted = 0.0;
    double proactive_spend = 0.0;
    std::vector<std::pair<double, double>> breakdown; // (time, immediate cost) per request
    long request_count = 0;
    long low_snr_actions = 0; // transmissions where the high-SNR model is suspect
};

enum class PolicyKind { Amdp, Baseline1, Baseline2, OptimalTiny };

struct PolicySpec {
    std::string label;
    PolicyKind kind = PolicyKind::Amdp;
    const ValueTable* table = nullptr;  // Amdp
    const ExactTables* exact = nullptr; // OptimalTiny
    bool proactive = false;             // Amdp only
};

/// Called after every processed event; lets tests watch trajectories.
using SimObserver =
    std::function<void(double time, bool is_request, const ReducedState& state, double cost)>;

namespace detail {

inline ScheduleOutcome dispatch(const ScenarioConfig& cfg, const PolicySpec& spec,
                                const ReducedState& state, const RequestDraw& draw,
                                double remaining, bool first_request) {
    switch (spec.kind) {
    case PolicyKind::Amdp:
        return amdp_schedule(cfg, state, draw, cfg.request_rate, remaining, *spec.table);
    case PolicyKind::Baseline1:
        return baseline_schedule(cfg, Baseline::UserOnly, state, draw, first_request);
    case PolicyKind::Baseline2:
        return baseline_schedule(cfg, Baseline::FillAllOnFirst, state, draw, first_request);
    case PolicyKind::OptimalTiny:
        return optimal_schedule_tiny(cfg, state, draw, cfg.request_rate, remaining, *spec.exact);
    }
    throw std::logic_error("unknown policy kind");
}

} // namespace detail

/**
 * Plays out one file lifetime: requests arrive from the event stream, and
 * when proactive placement is enabled one placement opportunity fires every
 * T_p seconds. Request and placement randomness live on separate streams, so
 * toggling proactive placement changes decisions but never the request
 * trajectory. A request coinciding with an opportunity is processed first.
 */
inline CostLedger run_file(const ScenarioConfig& cfg, const Geometry& geo, const PolicySpec& spec,
                           Rng& event_rng, Rng& proactive_rng,
                           const SimObserver* observer = nullptr) {
    if (spec.kind == PolicyKind::Amdp && spec.table == nullptr)
        throw std::invalid_argument("amdp policy requires a value table");
    if (spec.kind == PolicyKind::OptimalTiny && spec.exact == nullptr)
        throw std::invalid_argument("optimal-tiny policy requires exact tables");
    if (spec.proactive) {
        if (spec.kind != PolicyKind::Amdp)
            throw std::invalid_argument("proactive placement requires the amdp policy");
        if (!cfg.proactive_period)
            throw std::invalid_argument("proactive placement requires T_p");
    }

    const double horizon = cfg.lifetime;
    const std::vector<RequestEvent> events = generate_request_events(cfg, geo, event_rng);

    CostLedger ledger;
    ledger.request_count = static_cast<long>(events.size());
    ReducedState state = ReducedState::empty_state(geo.cache_count(), cfg.segments);

    std::size_t next_request = 0;
    int opportunity = 1;
    const double period = spec.proactive ? *cfg.proactive_period : 0.0;
    while (true) {
        const double t_req = next_request < events.size()
                                 ? events[next_request].time
                                 : std::numeric_limits<double>::infinity();
        const double t_opp = spec.proactive && opportunity * period < horizon
                                 ? opportunity * period
                                 : std::numeric_limits<double>::infinity();
        if (t_req == std::numeric_limits<double>::infinity() &&
            t_opp == std::numeric_limits<double>::infinity())
            break;
        if (t_req <= t_opp) {
            const RequestDraw& draw = events[next_request].draw;
            const double remaining = draw.remaining_lifetime;
            const ScheduleOutcome outcome =
                detail::dispatch(cfg, spec, state, draw, remaining, next_request == 0);
            ledger.total += outcome.immediate_cost;
            ledger.energy += outcome.energy_cost;
            ledger.time_weighted += outcome.time_cost;
            ledger.breakdown.emplace_back(t_req, outcome.immediate_cost);
            for (const auto& a : outcome.actions) {
                const double gain = a.target == TargetKind::User
                                        ? draw.user_gain(a.segment)
                                        : draw.cache_gain(a.target_cache, a.segment);
                if (high_snr_suspect(a.power, theta_of_gain(gain, cfg.antennas, cfg.noise_power)))
                    ++ledger.low_snr_actions;
            }
            state = outcome.next_state;
            ++next_request;
            if (observer)
                (*observer)(t_req, true, state, outcome.immediate_cost);
        } else {
            const double remaining = horizon - t_opp;
            const ProactiveDraw pdraw = draw_proactive(cfg, geo, opportunity, proactive_rng);
            const std::vector<const ReducedState*> states{&state};
            const ProactiveDecision decision =
                proactive_select(cfg, states, {remaining}, pdraw, {cfg.request_rate}, *spec.table,
                                 cfg.proactive_threshold);
            double cost = 0.0;
            if (decision.selected) {
                const auto& a = decision.action;
                const double energy = cfg.weight_energy * a.power * a.symbols;
                const double time_part = cfg.weight_time * a.symbols;
                cost = energy + time_part;
                ledger.total += cost;
                ledger.energy += energy;
                ledger.time_weighted += time_part;
                ledger.proactive_spend += cost;
                state = apply_proactive(state, a);
            }
            ++opportunity;
            if (observer)
                (*observer)(t_opp, false, state, cost);
        }
    }
    return ledger;
}

/// Several files sharing one proactive opportunity stream: every T_p the
/// placement picks the single best (file, segment) across all live files.
/// Files are otherwise independent, each with its own request stream.
inline CostLedger run_files(const ScenarioConfig& cfg, const Geometry& geo, const PolicySpec& spec,
                            int n_files, std::uint64_t seed_base, Rng& proactive_rng) {
    if (n_files < 1)
        throw std::invalid_argument("run_files requires at least one file");
    if (spec.kind == PolicyKind::Amdp && spec.table == nullptr)
        throw std::invalid_argument("amdp policy requires a value table");
    if (spec.kind == PolicyKind::OptimalTiny && spec.exact == nullptr)
        throw std::invalid_argument("optimal-tiny policy requires exact tables");
    if (spec.proactive) {
        if (spec.kind != PolicyKind::Amdp)
            throw std::invalid_argument("proactive placement requires the amdp policy");
        if (!cfg.proactive_period)
            throw std::invalid_argument("proactive placement requires T_p");
    }

    struct FileRun {
        std::vector<RequestEvent> events;
        std::size_t next = 0;
        ReducedState state;
        bool first = true;
    };
    std::vector<FileRun> files;
    files.reserve(static_cast<std::size_t>(n_files));
    for (int f = 0; f < n_files; ++f) {
        Rng rng = substream(seed_base, "file-events", static_cast<std::uint64_t>(f));
        FileRun fr{generate_request_events(cfg, geo, rng), 0,
                   ReducedState::empty_state(geo.cache_count(), cfg.segments), true};
        files.push_back(std::move(fr));
    }

    CostLedger ledger;
    for (const auto& fr : files)
        ledger.request_count += static_cast<long>(fr.events.size());

    const double horizon = cfg.lifetime;
    const double period = spec.proactive ? *cfg.proactive_period : 0.0;
    int opportunity = 1;
    while (true) {
        int best_file = -1;
        double t_req = std::numeric_limits<double>::infinity();
        for (int f = 0; f < n_files; ++f) {
            const auto& fr = files[static_cast<std::size_t>(f)];
            if (fr.next < fr.events.size() && fr.events[fr.next].time < t_req) {
                t_req = fr.events[fr.next].time;
                best_file = f;
            }
        }
        const double t_opp = spec.proactive && opportunity * period < horizon
                                 ? opportunity * period
                                 : std::numeric_limits<double>::infinity();
        if (best_file < 0 && t_opp == std::numeric_limits<double>::infinity())
            break;
        if (best_file >= 0 && t_req <= t_opp) {
            auto& fr = files[static_cast<std::size_t>(best_file)];
            const RequestDraw& draw = fr.events[fr.next].draw;
            const ScheduleOutcome outcome =
                detail::dispatch(cfg, spec, fr.state, draw, draw.remaining_lifetime, fr.first);
            fr.first = false;
            ledger.total += outcome.immediate_cost;
            ledger.energy += outcome.energy_cost;
            ledger.time_weighted += outcome.time_cost;
            ledger.breakdown.emplace_back(t_req, outcome.immediate_cost);
            fr.state = outcome.next_state;
            ++fr.next;
        } else {
            const double remaining = horizon - t_opp;
            const ProactiveDraw pdraw = draw_proactive(cfg, geo, opportunity, proactive_rng);
            std::vector<const ReducedState*> states;
            std::vector<double> remainings, lambdas;
            for (auto& fr : files) {
                states.push_back(&fr.state);
                remainings.push_back(remaining);
                lambdas.push_back(cfg.request_rate);
            }
            const ProactiveDecision decision = proactive_select(
                cfg, states, remainings, pdraw, lambdas, *spec.table, cfg.proactive_threshold);
            if (decision.selected) {
                auto& fr = files[static_cast<std::size_t>(decision.file)];
                const auto& a = decision.action;
                const double energy = cfg.weight_energy * a.power * a.symbols;
                const double time_part = cfg.weight_time * a.symbols;
                ledger.total += energy + time_part;
                ledger.energy += energy;
                ledger.time_weighted += time_part;
                ledger.proactive_spend += energy + time_part;
                fr.state = apply_proactive(fr.state, a);
            }
            ++opportunity;
        }
    }
    return ledger;
}

struct PolicyStats {
    std::string label;
    double mean_cost = 0.0;
    double ci95_halfwidth = 0.0;
    double mean_energy = 0.0;
    double mean_time = 0.0;
    double mean_requests = 0.0;
    std::vector<double> totals; // per replication, for paired comparisons
};

inline std::pair<double, double> mean_ci95(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs)
        mean += x;
    mean /= n;
    if (xs.size() < 2)
        return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    return {mean, 1.96 * sd / std::sqrt(n)};
}

/// Runs every policy over the same per-replication event streams (common
/// random numbers), so per-replication cost differences are paired.
inline std::vector<PolicyStats> run_experiment(const ScenarioConfig& cfg, const Geometry& geo,
                                               const std::vector<PolicySpec>& policies,
                                               int replications, std::uint64_t master_seed) {
    if (replications < 2)
        throw std::invalid_argument("run_experiment requires at least 2 replications");
    std::vector<PolicyStats> stats(policies.size());
    for (std::size_t p = 0; p < policies.size(); ++p) {
        auto& st = stats[p];
        st.label = policies[p].label;
        st.totals.reserve(static_cast<std::size_t>(replications));
        double energy = 0.0, time_part = 0.0, requests = 0.0;
        for (int r = 0; r < replications; ++r) {
            Rng event_rng = substream(master_seed, "events", static_cast<std::uint64_t>(r));
            Rng proactive_rng = substream(master_seed, "proactive", static_cast<std::uint64_t>(r));
            const CostLedger ledger = run_file(cfg, geo, policies[p], event_rng, proactive_rng);
            st.totals.push_back(ledger.total);
            energy += ledger.energy;
            time_part += ledger.time_weighted;
            requests += static_cast<double>(ledger.request_count);
        }
        const auto [mean, ci] = mean_ci95(st.totals);
        st.mean_cost = mean;
        st.ci95_halfwidth = ci;
        st.mean_energy = energy / replications;
        st.mean_time = time_part / replications;
        st.mean_requests = requests / replications;
    }
    return stats;
}

/// One-sided paired t statistic for mean(a - b) > 0.
inline double paired_t_statistic(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("paired_t_statistic requires equal-size samples");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        diff[i] = a[i] - b[i];
    const auto [mean, ci] = mean_ci95(diff);
    if (ci == 0.0)
        return mean > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    return mean / (ci / 1.96);
}

} // namespace cachecast
