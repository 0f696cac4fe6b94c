#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cachecast/radio.hpp"
#include "cachecast/rng.hpp"
#include "cachecast/scenario.hpp"
#include "cachecast/txopt.hpp"

namespace cachecast {

/// Per-file cache buffer bitmap: bit (c, s) says cache c has decoded
/// segment s.
struct ReducedState {
    int caches = 0;
    int segments = 0;
    std::vector<std::uint8_t> bits; // caches x segments, row-major

    static ReducedState empty_state(int caches, int segments) {
        ReducedState st;
        st.caches = caches;
        st.segments = segments;
        st.bits.assign(static_cast<std::size_t>(caches * segments), 0);
        return st;
    }
    static ReducedState full_state(int caches, int segments) {
        ReducedState st = empty_state(caches, segments);
        std::fill(st.bits.begin(), st.bits.end(), std::uint8_t{1});
        return st;
    }
    /// Reference state with exactly one (cache, segment) pair missing.
    static ReducedState one_missing(int caches, int segments, int cache, int segment) {
        ReducedState st = full_state(caches, segments);
        st.set(cache, segment, false);
        return st;
    }

    bool get(int c, int s) const { return bits[static_cast<std::size_t>(c * segments + s)] != 0; }
    void set(int c, int s, bool v) { bits[static_cast<std::size_t>(c * segments + s)] = v ? 1 : 0; }
    int missing_count() const {
        int n = 0;
        for (auto b : bits) n += (b == 0);
        return n;
    }
    bool operator==(const ReducedState&) const = default;
};

enum class Provenance { AnalyticMc, Learned };

/// Reference-state value functions, segment-symmetric:
///   star(m)       = expected remaining cost with m requests left when every
///                   cache holds the whole file (= m * unit_outside_cost),
///   missing(m, i) = same but with one segment missing at cache i.
struct ValueTable {
    int n_max = 0;
    int caches = 0;
    double unit_outside_cost = 0.0; // c0
    std::vector<double> v_star;     // [n_max]
    std::vector<double> v_missing;  // n_max x caches, row-major in m
    Provenance provenance = Provenance::AnalyticMc;
    bool coverage_overlap = false;
    std::uint64_t scenario_hash = 0;

    double star(int m) const {
        check_stage(m);
        return m == 0 ? 0.0 : v_star[static_cast<std::size_t>(m - 1)];
    }
    double missing(int m, int i) const {
        check_stage(m);
        if (i < 0 || i >= caches)
            throw std::out_of_range("cache index outside table");
        return m == 0 ? 0.0 : v_missing[static_cast<std::size_t>((m - 1) * caches + i)];
    }
    /// Penalty of one missing (cache, segment) pair at stage count m.
    double gap(int m, int i) const { return missing(m, i) - star(m); }

private:
    void check_stage(int m) const {
        if (m < 0 || m > n_max)
            throw std::out_of_range("stage count outside table range");
    }
};

/// Smallest N with poisson upper-tail mass P(X > N) below tail_epsilon,
/// X ~ Poisson(lambda * horizon).
inline int poisson_truncation(double lambda, double horizon, double tail_epsilon) {
    if (!(tail_epsilon > 0 && tail_epsilon < 1))
        throw std::invalid_argument("tail_epsilon must lie in (0, 1)");
    const double mu = lambda * horizon;
    if (mu <= 0)
        return 0;
    long double p = std::exp(-static_cast<long double>(mu));
    long double cum = p;
    int n = 0;
    while (1.0L - cum >= static_cast<long double>(tail_epsilon)) {
        ++n;
        p *= mu / n;
        cum += p;
        if (n > 10000000)
            throw std::runtime_error("poisson_truncation did not converge");
    }
    return n;
}

/// How a request draw acts on a reference state with one pair missing at a
/// given cache. Shared by the analytic table builder and the online learner.
struct PerCacheOutcome {
    enum class Kind : std::uint8_t {
        CoveredElsewhere, // another covering cache serves everything; no transmission
        FreeFill,         // segment goes to the user; the cache decodes for free
        Choice            // target the user (cache stays empty) or the weaker cache
    };
    Kind kind = Kind::CoveredElsewhere;
    double user_target_cost = 0.0;  // stage cost when the user is the target
    double cache_target_cost = 0.0; // stage cost when the cache is the target (Choice only)
};

struct DrawCosts {
    bool outside = false;        // user not covered by any cache
    double total_user_cost = 0.0; // sum over segments of the per-segment optimum
    std::vector<PerCacheOutcome> caches;
};

inline DrawCosts classify_draw(const ScenarioConfig& cfg, const RequestDraw& draw) {
    DrawCosts out;
    std::vector<double> seg_cost(static_cast<std::size_t>(draw.segments));
    for (int s = 0; s < draw.segments; ++s) {
        const double theta = theta_of_gain(draw.user_gain(s), cfg.antennas, cfg.noise_power);
        seg_cost[static_cast<std::size_t>(s)] =
            segment_min_cost(theta, cfg.weight_energy, cfg.weight_time, cfg.bits_per_segment()).cost;
        out.total_user_cost += seg_cost[static_cast<std::size_t>(s)];
    }
    out.outside = draw.covering.empty();

    // segment 0 plays the missing segment; shadowing is i.i.d. per segment,
    // so the choice of index is immaterial
    const double user_seg_cost = seg_cost[0];
    const double user_gain = draw.user_gain(0);
    out.caches.resize(static_cast<std::size_t>(draw.caches));
    for (int i = 0; i < draw.caches; ++i) {
        auto& pc = out.caches[static_cast<std::size_t>(i)];
        bool covered_elsewhere = false;
        for (int j : draw.covering)
            if (j != i) {
                covered_elsewhere = true;
                break;
            }
        if (covered_elsewhere) {
            pc.kind = PerCacheOutcome::Kind::CoveredElsewhere;
            continue;
        }
        // the user needs the missing segment from the base station
        const double base = out.outside ? out.total_user_cost - user_seg_cost : 0.0;
        const double cache_gain = draw.cache_gain(i, 0);
        pc.user_target_cost = base + user_seg_cost;
        if (user_gain <= cache_gain) {
            pc.kind = PerCacheOutcome::Kind::FreeFill;
        } else {
            pc.kind = PerCacheOutcome::Kind::Choice;
            const double theta_c = theta_of_gain(cache_gain, cfg.antennas, cfg.noise_power);
            pc.cache_target_cost =
                base + segment_min_cost(theta_c, cfg.weight_energy, cfg.weight_time,
                                        cfg.bits_per_segment()).cost;
        }
    }
    return out;
}

/**
 * Builds the reference-state value table by Monte Carlo over user locations
 * and shadowing, with common random numbers across stage counts.
 *
 * star(m) accumulates the cost of serving users outside every service disc;
 * missing(m, i) follows the one-pair-missing recursion: a user covered by
 * another cache leaves the state unchanged, a weaker user fills the cache as
 * a side effect of its own transmission, and otherwise the cheaper of
 * "target the user, cache stays empty" and "target the cache, then all done"
 * is taken against the (m-1)-stage entries.
 */
inline ValueTable build_value_table(const ScenarioConfig& cfg, const Geometry& geo,
                                    int mc_samples, Rng& rng, int n_max_override = 0) {
    if (mc_samples < 100)
        throw std::invalid_argument("build_value_table requires at least 100 Monte Carlo samples");
    const int caches = geo.cache_count();
    const int n_max = n_max_override > 0
                          ? n_max_override
                          : poisson_truncation(cfg.request_rate, cfg.lifetime, cfg.tail_epsilon);

    struct ChoiceSample {
        double user_cost;
        double cache_cost;
    };
    std::vector<long> covered_elsewhere_count(static_cast<std::size_t>(caches), 0);
    std::vector<long> free_fill_count(static_cast<std::size_t>(caches), 0);
    std::vector<double> free_fill_cost_sum(static_cast<std::size_t>(caches), 0.0);
    std::vector<std::vector<ChoiceSample>> choice(static_cast<std::size_t>(caches));

    double outside_cost_sum = 0.0;
    for (int d = 0; d < mc_samples; ++d) {
        const Point loc = sample_user_location(cfg, rng);
        const RequestDraw draw = draw_large_scale(cfg, geo, loc, 0.0, rng);
        const DrawCosts dc = classify_draw(cfg, draw);
        if (dc.outside)
            outside_cost_sum += dc.total_user_cost;
        for (int i = 0; i < caches; ++i) {
            const auto& pc = dc.caches[static_cast<std::size_t>(i)];
            switch (pc.kind) {
            case PerCacheOutcome::Kind::CoveredElsewhere:
                ++covered_elsewhere_count[static_cast<std::size_t>(i)];
                break;
            case PerCacheOutcome::Kind::FreeFill:
                ++free_fill_count[static_cast<std::size_t>(i)];
                free_fill_cost_sum[static_cast<std::size_t>(i)] += pc.user_target_cost;
                break;
            case PerCacheOutcome::Kind::Choice:
                choice[static_cast<std::size_t>(i)].push_back(
                    {pc.user_target_cost, pc.cache_target_cost});
                break;
            }
        }
    }

    ValueTable table;
    table.n_max = n_max;
    table.caches = caches;
    table.unit_outside_cost = outside_cost_sum / mc_samples;
    table.provenance = Provenance::AnalyticMc;
    table.coverage_overlap = geo.overlap();
    table.scenario_hash = config_hash(cfg);
    table.v_star.resize(static_cast<std::size_t>(n_max));
    table.v_missing.resize(static_cast<std::size_t>(n_max * caches));
    for (int m = 1; m <= n_max; ++m)
        table.v_star[static_cast<std::size_t>(m - 1)] = m * table.unit_outside_cost;
    for (int m = 1; m <= n_max; ++m) {
        const double star_prev = (m - 1) * table.unit_outside_cost;
        for (int i = 0; i < caches; ++i) {
            const double missing_prev = table.missing(m - 1, i);
            double acc = covered_elsewhere_count[static_cast<std::size_t>(i)] * missing_prev +
                         free_fill_cost_sum[static_cast<std::size_t>(i)] +
                         free_fill_count[static_cast<std::size_t>(i)] * star_prev;
            for (const auto& ch : choice[static_cast<std::size_t>(i)])
                acc += std::min(ch.user_cost + missing_prev, ch.cache_cost + star_prev);
            table.v_missing[static_cast<std::size_t>((m - 1) * caches + i)] = acc / mc_samples;
        }
    }
    return table;
}

/// Linear value approximation: star(m) plus one penalty per missing
/// (cache, segment) pair.
inline double approx_value(const ReducedState& state, int m, const ValueTable& table) {
    if (state.caches != table.caches)
        throw std::invalid_argument("state and table disagree on cache count");
    double v = table.star(m);
    for (int i = 0; i < state.caches; ++i)
        for (int s = 0; s < state.segments; ++s)
            if (!state.get(i, s))
                v += table.gap(m, i);
    return v;
}

/// Poisson-mixture expected future saving from filling one missing
/// (cache, segment) pair when the remaining lifetime is T_rem.
inline double poisson_penalty(int cache, double lambda, double remaining_lifetime,
                              const ValueTable& table) {
    if (remaining_lifetime < 0)
        throw std::invalid_argument("remaining lifetime must be nonnegative");
    const double mu = lambda * remaining_lifetime;
    if (mu <= 0)
        return 0.0;
    double pmf = std::exp(-mu);
    double acc = 0.0;
    for (int n = 1; n <= table.n_max; ++n) {
        pmf *= mu / n;
        acc += pmf * table.gap(n, cache);
    }
    return acc;
}

/// Poisson mixture of approximated values over the remaining request count.
inline double poisson_mixture_cost(const ReducedState& state, double lambda,
                                   double remaining_lifetime, const ValueTable& table) {
    if (remaining_lifetime < 0)
        throw std::invalid_argument("remaining lifetime must be nonnegative");
    const double mu = lambda * remaining_lifetime;
    if (mu <= 0)
        return 0.0;
    double pmf = std::exp(-mu);
    double acc = 0.0;
    for (int n = 1; n <= table.n_max; ++n) {
        pmf *= mu / n;
        acc += pmf * approx_value(state, n, table);
    }
    return acc;
}

struct ValueBounds {
    double lower = 0.0;
    double upper = 0.0;
    bool lower_certified = false; // only without coverage overlap
};

/// Sandwich on the true value function: the linear approximation from above,
/// and star(m) plus the single-stage penalties from below. The lower bound is
/// certified only when no two service discs overlap.
inline ValueBounds value_bounds(const ReducedState& state, int m, const ValueTable& table) {
    ValueBounds b;
    b.upper = approx_value(state, m, table);
    double lower = table.star(m);
    if (m >= 1)
        for (int i = 0; i < state.caches; ++i)
            for (int s = 0; s < state.segments; ++s)
                if (!state.get(i, s))
                    lower += table.gap(1, i);
    b.lower = lower;
    b.lower_certified = !table.coverage_overlap;
    return b;
}

// ---------------------------------------------------------------------------
// Exact backward induction for desk-scale instances
// ---------------------------------------------------------------------------

inline std::uint32_t state_mask(const ReducedState& st) {
    std::uint32_t mask = 0;
    for (std::size_t k = 0; k < st.bits.size(); ++k)
        if (st.bits[k])
            mask |= (1u << k);
    return mask;
}

inline ReducedState state_from_mask(std::uint32_t mask, int caches, int segments) {
    ReducedState st = ReducedState::empty_state(caches, segments);
    for (std::size_t k = 0; k < st.bits.size(); ++k)
        st.bits[k] = (mask >> k) & 1u;
    return st;
}

/// Exact value functions over the full buffer state space, for instances
/// small enough to enumerate (at most 64 states and 6 stages).
struct ExactTables {
    int caches = 0;
    int segments = 0;
    int n_stages = 0;
    std::vector<double> values; // (n_stages + 1) x state_count

    int state_count() const { return 1 << (caches * segments); }
    double value(int m, std::uint32_t mask) const {
        if (m < 0 || m > n_stages)
            throw std::out_of_range("stage count outside exact table range");
        return values[static_cast<std::size_t>(m) * state_count() + mask];
    }
};

namespace detail {

struct DpDraw {
    std::uint32_t cover_state_mask = 0;       // state bits of covering caches, all segments
    std::vector<double> user_cost;            // per segment
    std::vector<double> user_gain;            // per segment
    std::vector<double> cache_cost;           // caches x segments
    std::vector<double> cache_gain;           // caches x segments
    std::vector<std::uint32_t> user_fill;     // per segment: caches at or above the user gain
};

struct DpOption {
    double cost;
    std::uint32_t fill;
};

} // namespace detail

/**
 * Backward induction on the reduced state space by common-random-number
 * Monte Carlo. Admissible per-segment actions: serve the user directly, or
 * target one missing cache that is weaker than the user (anything stronger
 * than the target decodes as a side effect, so further candidates never
 * help). Segments a covered cache can already serve are not transmitted.
 *
 * For two-segment instances each draw is paired with its segment-swapped
 * twin, which makes the empirical draw distribution exactly symmetric across
 * segments (an antithetic pairing; the target distribution is already
 * symmetric, so estimates stay unbiased).
 */
inline ExactTables exact_value_iteration(const ScenarioConfig& cfg, const Geometry& geo,
                                         int n_stages, int mc_samples, Rng& rng) {
    const int caches = geo.cache_count();
    const int segments = cfg.segments;
    const int bits = caches * segments;
    if (bits > 6)
        throw std::invalid_argument(
            "exact_value_iteration refused: state space 2^(caches*segments) exceeds 64 states");
    if (segments > 2)
        throw std::invalid_argument("exact_value_iteration refused: at most 2 segments");
    if (n_stages < 1 || n_stages > 6)
        throw std::invalid_argument("exact_value_iteration refused: stage count must be in [1, 6]");
    if (mc_samples < 100)
        throw std::invalid_argument("exact_value_iteration requires at least 100 Monte Carlo samples");

    auto bit_of = [segments](int c, int s) { return 1u << (c * segments + s); };

    std::vector<detail::DpDraw> draws;
    draws.reserve(static_cast<std::size_t>(mc_samples) * (segments == 2 ? 2 : 1));
    for (int d = 0; d < mc_samples; ++d) {
        const Point loc = sample_user_location(cfg, rng);
        const RequestDraw rd = draw_large_scale(cfg, geo, loc, 0.0, rng);
        detail::DpDraw dp;
        dp.user_cost.resize(static_cast<std::size_t>(segments));
        dp.user_gain.resize(static_cast<std::size_t>(segments));
        dp.cache_cost.resize(static_cast<std::size_t>(caches * segments));
        dp.cache_gain.resize(static_cast<std::size_t>(caches * segments));
        dp.user_fill.assign(static_cast<std::size_t>(segments), 0u);
        for (int c : rd.covering)
            for (int s = 0; s < segments; ++s)
                dp.cover_state_mask |= bit_of(c, s);
        for (int s = 0; s < segments; ++s) {
            dp.user_gain[static_cast<std::size_t>(s)] = rd.user_gain(s);
            dp.user_cost[static_cast<std::size_t>(s)] =
                segment_min_cost(theta_of_gain(rd.user_gain(s), cfg.antennas, cfg.noise_power),
                                 cfg.weight_energy, cfg.weight_time, cfg.bits_per_segment()).cost;
            for (int c = 0; c < caches; ++c) {
                const double g = rd.cache_gain(c, s);
                dp.cache_gain[static_cast<std::size_t>(c * segments + s)] = g;
                dp.cache_cost[static_cast<std::size_t>(c * segments + s)] =
                    segment_min_cost(theta_of_gain(g, cfg.antennas, cfg.noise_power),
                                     cfg.weight_energy, cfg.weight_time, cfg.bits_per_segment()).cost;
                if (g >= rd.user_gain(s))
                    dp.user_fill[static_cast<std::size_t>(s)] |= bit_of(c, s);
            }
        }
        draws.push_back(dp);
        if (segments == 2) {
            // segment-swapped twin
            detail::DpDraw tw = draws.back();
            std::swap(tw.user_cost[0], tw.user_cost[1]);
            std::swap(tw.user_gain[0], tw.user_gain[1]);
            tw.user_fill[0] = 0;
            tw.user_fill[1] = 0;
            for (int c = 0; c < caches; ++c) {
                std::swap(tw.cache_cost[static_cast<std::size_t>(c * 2)],
                          tw.cache_cost[static_cast<std::size_t>(c * 2 + 1)]);
                std::swap(tw.cache_gain[static_cast<std::size_t>(c * 2)],
                          tw.cache_gain[static_cast<std::size_t>(c * 2 + 1)]);
            }
            for (int s = 0; s < 2; ++s)
                for (int c = 0; c < caches; ++c)
                    if (tw.cache_gain[static_cast<std::size_t>(c * 2 + s)] >=
                        tw.user_gain[static_cast<std::size_t>(s)])
                        tw.user_fill[static_cast<std::size_t>(s)] |= bit_of(c, s);
            draws.push_back(tw);
        }
    }

    ExactTables tables;
    tables.caches = caches;
    tables.segments = segments;
    tables.n_stages = n_stages;
    const int n_states = tables.state_count();
    tables.values.assign(static_cast<std::size_t>(n_stages + 1) * n_states, 0.0);

    std::vector<detail::DpOption> options[2]; // at most two segments by the state-space bound
    for (int m = 1; m <= n_stages; ++m) {
        const double* prev = tables.values.data() + static_cast<std::size_t>(m - 1) * n_states;
        double* cur = tables.values.data() + static_cast<std::size_t>(m) * n_states;
        for (std::uint32_t mask = 0; mask < static_cast<std::uint32_t>(n_states); ++mask) {
            double acc = 0.0;
            for (const auto& dp : draws) {
                for (int s = 0; s < segments; ++s) {
                    auto& opts = options[s];
                    opts.clear();
                    std::uint32_t seg_bits = 0;
                    for (int c = 0; c < caches; ++c)
                        seg_bits |= bit_of(c, s);
                    if (mask & dp.cover_state_mask & seg_bits) {
                        opts.push_back({0.0, 0u}); // served by a covering cache
                        continue;
                    }
                    opts.push_back({dp.user_cost[static_cast<std::size_t>(s)],
                                    dp.user_fill[static_cast<std::size_t>(s)] & ~mask});
                    for (int c = 0; c < caches; ++c) {
                        if (mask & bit_of(c, s))
                            continue; // cache already holds it
                        const double g = dp.cache_gain[static_cast<std::size_t>(c * segments + s)];
                        if (g > dp.user_gain[static_cast<std::size_t>(s)])
                            continue; // stronger than the user: fills for free anyway
                        std::uint32_t fill = 0;
                        for (int c2 = 0; c2 < caches; ++c2)
                            if (!(mask & bit_of(c2, s)) &&
                                dp.cache_gain[static_cast<std::size_t>(c2 * segments + s)] >= g)
                                fill |= bit_of(c2, s);
                        opts.push_back({dp.cache_cost[static_cast<std::size_t>(c * segments + s)], fill});
                    }
                }
                double best = std::numeric_limits<double>::infinity();
                if (segments == 1) {
                    for (const auto& o : options[0])
                        best = std::min(best, o.cost + prev[mask | o.fill]);
                } else {
                    for (const auto& o0 : options[0])
                        for (const auto& o1 : options[1]) {
                            const double v = o0.cost + o1.cost + prev[mask | o0.fill | o1.fill];
                            best = std::min(best, v);
                        }
                }
                acc += best;
            }
            cur[mask] = acc / static_cast<double>(draws.size());
        }
    }
    return tables;
}

/// Reference-state table read off an exact backward induction; used to feed
/// the bound machinery with values that are consistent with the exact run.
inline ValueTable value_table_from_exact(const ExactTables& exact, const ScenarioConfig& cfg,
                                         const Geometry& geo) {
    ValueTable table;
    table.n_max = exact.n_stages;
    table.caches = exact.caches;
    const std::uint32_t full = static_cast<std::uint32_t>(exact.state_count() - 1);
    table.unit_outside_cost = exact.value(1, full);
    table.provenance = Provenance::AnalyticMc;
    table.coverage_overlap = geo.overlap();
    table.scenario_hash = config_hash(cfg);
    table.v_star.resize(static_cast<std::size_t>(exact.n_stages));
    table.v_missing.resize(static_cast<std::size_t>(exact.n_stages * exact.caches));
    for (int m = 1; m <= exact.n_stages; ++m) {
        table.v_star[static_cast<std::size_t>(m - 1)] = m * table.unit_outside_cost;
        for (int i = 0; i < exact.caches; ++i) {
            const std::uint32_t mask = full & ~(1u << (i * exact.segments)); // segment 0 missing
            table.v_missing[static_cast<std::size_t>((m - 1) * exact.caches + i)] =
                exact.value(m, mask);
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Table serialization (text, versioned, one line per entry)
// ---------------------------------------------------------------------------

inline void write_value_table(std::ostream& out, const ValueTable& table,
                              long observations = -1) {
    char buf[64];
    out << "cachecast-table v1\n";
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(table.scenario_hash));
    out << "config_hash " << buf << "\n";
    out << "provenance " << (table.provenance == Provenance::Learned ? "learned" : "analytic-mc") << "\n";
    out << "caches " << table.caches << "\n";
    out << "n_max " << table.n_max << "\n";
    out << "coverage_overlap " << (table.coverage_overlap ? 1 : 0) << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", table.unit_outside_cost);
    out << "c0 " << buf << "\n";
    if (observations >= 0)
        out << "t " << observations << "\n";
    for (int m = 1; m <= table.n_max; ++m) {
        std::snprintf(buf, sizeof(buf), "%.17g", table.star(m));
        out << "v_star " << m << " " << buf << "\n";
    }
    for (int m = 1; m <= table.n_max; ++m)
        for (int i = 0; i < table.caches; ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", table.missing(m, i));
            out << "v_missing " << m << " " << (i + 1) << " " << buf << "\n";
        }
}

inline void save_value_table(const ValueTable& table, const std::string& path,
                             long observations = -1) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open table file for writing: " + path);
    write_value_table(out, table, observations);
}

/// Parses the table text format; observations_out receives the `t` header
/// when present (learner checkpoints), else stays -1.
inline ValueTable read_value_table(std::istream& in, long* observations_out = nullptr) {
    auto fail = [](const std::string& msg) {
        throw std::runtime_error("table parse error: " + msg);
    };
    std::string line;
    if (!std::getline(in, line) || line != "cachecast-table v1")
        fail("bad or missing format header");
    ValueTable table;
    long observations = -1;
    bool dims_ready = false;
    std::vector<bool> star_seen, missing_seen;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "config_hash") {
            std::string hex;
            ss >> hex;
            table.scenario_hash = std::strtoull(hex.c_str(), nullptr, 16);
        } else if (key == "provenance") {
            std::string p;
            ss >> p;
            if (p == "learned") table.provenance = Provenance::Learned;
            else if (p == "analytic-mc") table.provenance = Provenance::AnalyticMc;
            else fail("unknown provenance '" + p + "'");
        } else if (key == "caches") {
            ss >> table.caches;
        } else if (key == "n_max") {
            ss >> table.n_max;
        } else if (key == "coverage_overlap") {
            int v = 0;
            ss >> v;
            table.coverage_overlap = (v != 0);
        } else if (key == "c0") {
            ss >> table.unit_outside_cost;
        } else if (key == "t") {
            ss >> observations;
        } else if (key == "v_star" || key == "v_missing") {
            if (!dims_ready) {
                if (table.n_max < 0 || table.caches < 0)
                    fail("entries before table dimensions");
                table.v_star.assign(static_cast<std::size_t>(table.n_max), 0.0);
                table.v_missing.assign(static_cast<std::size_t>(table.n_max * table.caches), 0.0);
                star_seen.assign(static_cast<std::size_t>(table.n_max), false);
                missing_seen.assign(static_cast<std::size_t>(table.n_max * table.caches), false);
                dims_ready = true;
            }
            int m = 0;
            ss >> m;
            if (m < 1 || m > table.n_max)
                fail("entry stage index out of range");
            if (key == "v_star") {
                double v = 0;
                ss >> v;
                table.v_star[static_cast<std::size_t>(m - 1)] = v;
                star_seen[static_cast<std::size_t>(m - 1)] = true;
            } else {
                int i = 0;
                double v = 0;
                ss >> i >> v;
                if (i < 1 || i > table.caches)
                    fail("entry cache index out of range");
                table.v_missing[static_cast<std::size_t>((m - 1) * table.caches + i - 1)] = v;
                missing_seen[static_cast<std::size_t>((m - 1) * table.caches + i - 1)] = true;
            }
        } else {
            fail("unknown line '" + line + "'");
        }
        if (ss.fail())
            fail("malformed line '" + line + "'");
    }
    if (!dims_ready && table.n_max > 0)
        fail("no entries found");
    for (bool s : star_seen)
        if (!s) fail("missing v_star entry");
    for (bool s : missing_seen)
        if (!s) fail("missing v_missing entry");
    if (observations_out)
        *observations_out = observations;
    return table;
}

inline ValueTable load_value_table(const std::string& path, long* observations_out = nullptr) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open table file: " + path);
    return read_value_table(in, observations_out);
}

} // namespace cachecast
