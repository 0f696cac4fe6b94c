#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "cachecast/valuefn.hpp"

namespace cachecast {

/// Online estimator of the reference-state value table when the spatial
/// distribution of requesting users is unknown.
///
/// The one-pair-missing entries are stored as running averages of the excess
/// over the (m - 1)-stage all-full continuation, and published as
/// (m - 1) * c0 + excess. Averaging the raw targets instead would bake the
/// early trajectory of the c0 estimate into every entry; when the
/// initialization assumption is far from the truth that transient swamps the
/// small missing-pair gaps for tens of thousands of observations.
struct LearnerState {
    ValueTable table;       // provenance = Learned
    long observations = 0;  // t; initialization counts as observation 0
    double last_delta = 0.0;
    std::vector<double> missing_excess; // n_max x caches: E[target - (m-1) c0]
};

/// Starts from the analytic table computed under a uniform-disc assumption.
inline LearnerState learn_init(const ScenarioConfig& cfg, const Geometry& geo,
                               int mc_samples = 100000) {
    ScenarioConfig uniform_cfg = cfg;
    uniform_cfg.distribution = DistributionKind::UniformDisc;
    Rng rng = substream(cfg.master_seed, "learn-init");
    LearnerState st;
    st.table = build_value_table(uniform_cfg, geo, mc_samples, rng);
    st.table.provenance = Provenance::Learned;
    st.table.scenario_hash = config_hash(cfg);
    st.missing_excess.resize(st.table.v_missing.size());
    for (int m = 1; m <= st.table.n_max; ++m)
        for (int i = 0; i < st.table.caches; ++i)
            st.missing_excess[static_cast<std::size_t>((m - 1) * st.table.caches + i)] =
                st.table.missing(m, i) - (m - 1) * st.table.unit_outside_cost;
    return st;
}

/**
 * Folds one observed request into the running averages. With t observations
 * already absorbed, every entry equals (init + sum of t targets) / (t + 1);
 * one more target updates it to ((t + 1) old + target) / (t + 2).
 *
 * Per-stage targets: star entries see m * [cost of serving the user when it
 * is outside all service discs]; missing entries see the one-pair-missing
 * stage cost plus the learner's own current (m - 1)-stage continuation
 * (bootstrapped, since the true continuation is what is being estimated).
 * Bootstrap reads are clamped at the dominance floor v_missing >= v_star:
 * noise near the min() kink otherwise biases targets downward and can feed
 * back into a runaway once a gap estimate crosses zero.
 */
inline void learn_observe(const ScenarioConfig& cfg, LearnerState& st, const RequestDraw& draw) {
    ValueTable& table = st.table;
    if (draw.caches != table.caches)
        throw std::invalid_argument("draw and learner table disagree on cache count");
    const DrawCosts dc = classify_draw(cfg, draw);
    const double weight_old = static_cast<double>(st.observations + 1);
    const double denom = static_cast<double>(st.observations + 2);

    const double star_target_unit = dc.outside ? dc.total_user_cost : 0.0;
    const double c0_old = table.unit_outside_cost;
    const double c0_new = (weight_old * c0_old + star_target_unit) / denom;

    double delta = table.n_max > 0 ? table.n_max * std::abs(c0_new - c0_old) : 0.0;
    std::vector<double> excess_new(st.missing_excess.size());
    for (int m = 1; m <= table.n_max; ++m) {
        const double star_prev = (m - 1) * c0_old;
        for (int i = 0; i < table.caches; ++i) {
            const auto& pc = dc.caches[static_cast<std::size_t>(i)];
            const double missing_prev = std::max(table.missing(m - 1, i), star_prev);
            double target = 0.0;
            switch (pc.kind) {
            case PerCacheOutcome::Kind::CoveredElsewhere:
                target = missing_prev;
                break;
            case PerCacheOutcome::Kind::FreeFill:
                target = pc.user_target_cost + star_prev;
                break;
            case PerCacheOutcome::Kind::Choice:
                target = std::min(pc.user_target_cost + missing_prev,
                                  pc.cache_target_cost + star_prev);
                break;
            }
            const std::size_t idx = static_cast<std::size_t>((m - 1) * table.caches + i);
            excess_new[idx] = (weight_old * st.missing_excess[idx] + (target - star_prev)) / denom;
        }
    }

    table.unit_outside_cost = c0_new;
    for (int m = 1; m <= table.n_max; ++m)
        table.v_star[static_cast<std::size_t>(m - 1)] = m * c0_new;
    for (int m = 1; m <= table.n_max; ++m)
        for (int i = 0; i < table.caches; ++i) {
            const std::size_t idx = static_cast<std::size_t>((m - 1) * table.caches + i);
            const double next = (m - 1) * c0_new + excess_new[idx];
            delta = std::max(delta, std::abs(next - table.v_missing[idx]));
            table.v_missing[idx] = next;
        }
    st.missing_excess = std::move(excess_new);
    st.last_delta = delta;
    ++st.observations;
}

/// True once the latest update moved no entry by more than tau.
inline bool learn_converged(const LearnerState& st, double tau) {
    if (st.observations < 1)
        throw std::invalid_argument("learn_converged requires at least one observation");
    return st.last_delta <= tau;
}

inline void save_learner(const LearnerState& st, const std::string& path) {
    save_value_table(st.table, path, st.observations);
}

inline LearnerState load_learner(const std::string& path) {
    LearnerState st;
    long observations = -1;
    st.table = load_value_table(path, &observations);
    if (observations < 0)
        throw std::runtime_error("table parse error: learner checkpoint lacks a t header");
    st.observations = observations;
    st.missing_excess.resize(st.table.v_missing.size());
    for (int m = 1; m <= st.table.n_max; ++m)
        for (int i = 0; i < st.table.caches; ++i)
            st.missing_excess[static_cast<std::size_t>((m - 1) * st.table.caches + i)] =
                st.table.missing(m, i) - (m - 1) * st.table.unit_outside_cost;
    return st;
}

} // namespace cachecast
