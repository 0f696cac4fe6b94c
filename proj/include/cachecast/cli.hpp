#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cachecast/sim.hpp"

namespace cachecast {

namespace cli_detail {

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CommonOptions {
    std::string config_path;
    std::string out_path;
    std::string policies = "amdp,b1,b2";
    std::optional<std::uint64_t> seed;
    std::optional<int> replications;
    int mc_samples = 100000;
    std::string proactive = "off";
    int files = 1;
    int learn_draws = 10000;
};

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ','))
        out.push_back(detail::trim(part));
    return out;
}

inline ScenarioConfig load_with_overrides(const CommonOptions& opt) {
    ScenarioConfig cfg = load_scenario(opt.config_path);
    if (opt.seed)
        cfg.master_seed = *opt.seed;
    if (opt.replications)
        cfg.replications = *opt.replications;
    validate(cfg);
    return cfg;
}

inline void apply_numeric_override(ScenarioConfig& cfg, const std::string& key, double value) {
    if (key == "lambda") cfg.request_rate = value;
    else if (key == "lifetime") cfg.lifetime = value;
    else if (key == "cache_count") cfg.cache_count = static_cast<int>(value);
    else if (key == "cache_service_radius") cfg.cache_service_radius = value;
    else if (key == "cell_radius") cfg.cell_radius = value;
    else if (key == "antennas") cfg.antennas = static_cast<int>(value);
    else if (key == "segments") cfg.segments = static_cast<int>(value);
    else if (key == "file_bits") cfg.file_bits = value;
    else if (key == "w_e") cfg.weight_energy = value;
    else if (key == "w_t") cfg.weight_time = value;
    else if (key == "noise_power") cfg.noise_power = value;
    else if (key == "shadowing_sigma_db") cfg.shadowing_sigma_db = value;
    else if (key == "pathloss_exponent") cfg.pathloss_exponent = value;
    else if (key == "tau_prime") cfg.proactive_threshold = value;
    else if (key == "T_p") cfg.proactive_period = value;
    else throw ConfigError("validation error: cannot sweep key '" + key + "'");
    validate(cfg);
}

/// Tables and exact oracles required by a policy list, built once per config.
struct PreparedPolicies {
    std::vector<PolicySpec> specs;
    std::shared_ptr<ValueTable> informed;
    std::shared_ptr<ValueTable> uniform;
    std::shared_ptr<ValueTable> learned;
    std::shared_ptr<ExactTables> exact;
};

inline PreparedPolicies prepare_policies(const ScenarioConfig& cfg, const Geometry& geo,
                                         const std::vector<std::string>& names,
                                         const CommonOptions& opt, bool global_proactive) {
    PreparedPolicies prep;
    auto informed_table = [&]() {
        if (!prep.informed) {
            Rng rng = substream(cfg.master_seed, "table");
            prep.informed = std::make_shared<ValueTable>(
                build_value_table(cfg, geo, opt.mc_samples, rng));
        }
        return prep.informed;
    };
    for (const auto& name : names) {
        PolicySpec spec;
        spec.label = name;
        if (name == "amdp") {
            spec.kind = PolicyKind::Amdp;
            spec.table = informed_table().get();
            spec.proactive = global_proactive;
        } else if (name == "amdp-proactive") {
            spec.kind = PolicyKind::Amdp;
            spec.table = informed_table().get();
            spec.proactive = true;
        } else if (name == "amdp-uniform") {
            if (!prep.uniform) {
                ScenarioConfig ucfg = cfg;
                ucfg.distribution = DistributionKind::UniformDisc;
                Rng rng = substream(cfg.master_seed, "table");
                prep.uniform = std::make_shared<ValueTable>(
                    build_value_table(ucfg, geo, opt.mc_samples, rng));
            }
            spec.kind = PolicyKind::Amdp;
            spec.table = prep.uniform.get();
            spec.proactive = global_proactive;
        } else if (name == "amdp-learned") {
            if (!prep.learned) {
                LearnerState learner = learn_init(cfg, geo, opt.mc_samples);
                Rng draw_rng = substream(cfg.master_seed, "learn-draws");
                const double tau = cfg.learning_threshold.value_or(0.0);
                for (int i = 0; i < opt.learn_draws; ++i) {
                    const Point loc = sample_user_location(cfg, draw_rng);
                    const RequestDraw draw = draw_large_scale(cfg, geo, loc, 0.0, draw_rng);
                    learn_observe(cfg, learner, draw);
                    if (tau > 0 && learn_converged(learner, tau))
                        break;
                }
                prep.learned = std::make_shared<ValueTable>(learner.table);
            }
            spec.kind = PolicyKind::Amdp;
            spec.table = prep.learned.get();
            spec.proactive = global_proactive;
        } else if (name == "b1") {
            spec.kind = PolicyKind::Baseline1;
        } else if (name == "b2") {
            spec.kind = PolicyKind::Baseline2;
        } else if (name == "optimal-tiny") {
            if (!prep.exact) {
                // the exact recursion runs at most 6 stages; the request
                // count must leave negligible mass beyond that
                if (poisson_truncation(cfg.request_rate, cfg.lifetime, 1e-3) > 6)
                    throw ConfigError(
                        "validation error: optimal-tiny needs lambda * lifetime small enough "
                        "that more than 6 requests are negligible");
                const int stages = std::min(
                    6, std::max(1, poisson_truncation(cfg.request_rate, cfg.lifetime,
                                                      cfg.tail_epsilon)));
                Rng rng = substream(cfg.master_seed, "exact");
                prep.exact = std::make_shared<ExactTables>(
                    exact_value_iteration(cfg, geo, stages, opt.mc_samples, rng));
            }
            spec.kind = PolicyKind::OptimalTiny;
            spec.exact = prep.exact.get();
        } else {
            throw ConfigError("validation error: unknown policy '" + name + "'");
        }
        prep.specs.push_back(spec);
    }
    return prep;
}

inline const char* kSimulateCsvHeader =
    "config_hash,seed,policy,swept_key,swept_value,replications,mean_cost,ci95_halfwidth,"
    "mean_energy_term,mean_time_term,mean_requests\n";

inline void write_stats_rows(std::ostream& out, const ScenarioConfig& cfg,
                             const std::vector<PolicyStats>& stats, const std::string& swept_key,
                             const std::string& swept_value) {
    for (const auto& st : stats) {
        out << config_hash_hex(cfg) << "," << cfg.master_seed << "," << st.label << ","
            << swept_key << "," << swept_value << "," << cfg.replications << ","
            << fmt(st.mean_cost) << "," << fmt(st.ci95_halfwidth) << "," << fmt(st.mean_energy)
            << "," << fmt(st.mean_time) << "," << fmt(st.mean_requests) << "\n";
    }
}

inline std::vector<PolicyStats> simulate_one(const ScenarioConfig& cfg, const CommonOptions& opt,
                                             const std::vector<std::string>& names,
                                             bool global_proactive) {
    Rng placement_rng = substream(cfg.master_seed, "placement");
    const Geometry geo = place_caches(cfg, placement_rng);
    PreparedPolicies prep = prepare_policies(cfg, geo, names, opt, global_proactive);
    if (opt.files > 1) {
        std::vector<PolicyStats> stats(prep.specs.size());
        for (std::size_t p = 0; p < prep.specs.size(); ++p) {
            auto& st = stats[p];
            st.label = prep.specs[p].label;
            double energy = 0.0, time_part = 0.0, requests = 0.0;
            for (int r = 0; r < cfg.replications; ++r) {
                Rng pro = substream(cfg.master_seed, "proactive", static_cast<std::uint64_t>(r));
                const std::uint64_t rep_seed = cfg.master_seed ^ (0x51ed2701ULL * (r + 1));
                const CostLedger ledger =
                    run_files(cfg, geo, prep.specs[p], opt.files, rep_seed, pro);
                st.totals.push_back(ledger.total);
                energy += ledger.energy;
                time_part += ledger.time_weighted;
                requests += static_cast<double>(ledger.request_count);
            }
            const auto [mean, ci] = mean_ci95(st.totals);
            st.mean_cost = mean;
            st.ci95_halfwidth = ci;
            st.mean_energy = energy / cfg.replications;
            st.mean_time = time_part / cfg.replications;
            st.mean_requests = requests / cfg.replications;
        }
        return stats;
    }
    return run_experiment(cfg, geo, prep.specs, cfg.replications, cfg.master_seed);
}

} // namespace cli_detail

/// Command-line front end; returns the process exit code (0 success,
/// 1 validation/usage error, 2 runtime failure).
inline int run_cli(const std::vector<std::string>& args) {
    using namespace cli_detail;
    CLI::App app{"cache-assisted downlink multicast scheduling simulator"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string sweep_key;
    std::string sweep_values;
    int bounds_stages = 5;
    std::optional<double> learn_tau;
    int learn_max_draws = 100000;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--config", opt.config_path, "scenario file")->required();
        auto* o = cmd->add_option("--out", opt.out_path, "output path");
        if (needs_out)
            o->required();
        cmd->add_option("--seed", opt.seed, "override the scenario master seed");
        cmd->add_option("--mc-samples", opt.mc_samples, "Monte Carlo samples for table builds");
        return cmd;
    };

    auto* cmd_table = add_common(app.add_subcommand("table", "build and save a value table"), true);

    auto* cmd_simulate =
        add_common(app.add_subcommand("simulate", "run one scenario under selected policies"), true);
    cmd_simulate->add_option("--policies", opt.policies, "comma-separated policy list");
    cmd_simulate->add_option("--replications", opt.replications, "override replication count");
    cmd_simulate->add_option("--proactive", opt.proactive, "on|off: proactive placement for amdp");
    cmd_simulate->add_option("--files", opt.files, "files sharing the proactive opportunity stream");

    auto* cmd_sweep = add_common(app.add_subcommand("sweep", "sweep one numeric config key"), true);
    cmd_sweep->add_option("--policies", opt.policies, "comma-separated policy list");
    cmd_sweep->add_option("--replications", opt.replications, "override replication count");
    cmd_sweep->add_option("--proactive", opt.proactive, "on|off: proactive placement for amdp");
    cmd_sweep->add_option("--key", sweep_key, "config key to sweep")->required();
    cmd_sweep->add_option("--values", sweep_values, "comma-separated values")->required();

    auto* cmd_learn =
        add_common(app.add_subcommand("learn", "estimate a value table from synthetic draws"), true);
    cmd_learn->add_option("--tau", learn_tau, "convergence threshold (defaults to config tau)");
    cmd_learn->add_option("--max-draws", learn_max_draws, "observation cap");

    auto* cmd_bounds = add_common(
        app.add_subcommand("bounds", "desk-scale exact values against the bound sandwich"), true);
    cmd_bounds->add_option("--stages", bounds_stages, "stage count for the exact recursion");

    std::vector<char*> argv;
    std::vector<std::string> storage = args;
    std::string prog = "cachecast";
    argv.push_back(prog.data());
    for (auto& a : storage)
        argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 1;
    }

    try {
        if (app.got_subcommand(cmd_table)) {
            const ScenarioConfig cfg = load_with_overrides(opt);
            Rng placement_rng = substream(cfg.master_seed, "placement");
            const Geometry geo = place_caches(cfg, placement_rng);
            Rng rng = substream(cfg.master_seed, "table");
            const ValueTable table = build_value_table(cfg, geo, opt.mc_samples, rng);
            save_value_table(table, opt.out_path);
            std::cout << "table: n_max=" << table.n_max << " caches=" << table.caches
                      << " c0=" << fmt(table.unit_outside_cost) << "\n";
        } else if (app.got_subcommand(cmd_simulate)) {
            const ScenarioConfig cfg = load_with_overrides(opt);
            const bool pro = opt.proactive == "on";
            const auto stats = simulate_one(cfg, opt, split_csv(opt.policies), pro);
            std::ofstream out(opt.out_path);
            if (!out)
                throw std::runtime_error("cannot open output file: " + opt.out_path);
            out << kSimulateCsvHeader;
            write_stats_rows(out, cfg, stats, "", "");
        } else if (app.got_subcommand(cmd_sweep)) {
            const ScenarioConfig base = load_with_overrides(opt);
            const auto values = split_csv(sweep_values);
            if (values.empty())
                throw ConfigError("validation error: sweep requires at least one value");
            const bool pro = opt.proactive == "on";
            std::ofstream out(opt.out_path);
            if (!out)
                throw std::runtime_error("cannot open output file: " + opt.out_path);
            out << kSimulateCsvHeader;
            for (const auto& value : values) {
                ScenarioConfig cfg = base;
                apply_numeric_override(cfg, sweep_key, detail::parse_number(value, 0));
                const auto stats = simulate_one(cfg, opt, split_csv(opt.policies), pro);
                write_stats_rows(out, cfg, stats, sweep_key, value);
            }
        } else if (app.got_subcommand(cmd_learn)) {
            const ScenarioConfig cfg = load_with_overrides(opt);
            const double tau = learn_tau ? *learn_tau : cfg.learning_threshold.value_or(-1.0);
            if (tau < 0)
                throw ConfigError("validation error: learn requires tau (flag or config)");
            Rng placement_rng = substream(cfg.master_seed, "placement");
            const Geometry geo = place_caches(cfg, placement_rng);
            LearnerState learner = learn_init(cfg, geo, opt.mc_samples);
            Rng draw_rng = substream(cfg.master_seed, "learn-draws");
            bool converged = false;
            while (learner.observations < learn_max_draws) {
                const Point loc = sample_user_location(cfg, draw_rng);
                const RequestDraw draw = draw_large_scale(cfg, geo, loc, 0.0, draw_rng);
                learn_observe(cfg, learner, draw);
                if (learn_converged(learner, tau)) {
                    converged = true;
                    break;
                }
            }
            save_learner(learner, opt.out_path);
            std::cout << "learn: observations=" << learner.observations
                      << " last_delta=" << fmt(learner.last_delta)
                      << " converged=" << (converged ? "yes" : "no") << "\n";
        } else if (app.got_subcommand(cmd_bounds)) {
            const ScenarioConfig cfg = load_with_overrides(opt);
            Rng placement_rng = substream(cfg.master_seed, "placement");
            const Geometry geo = place_caches(cfg, placement_rng);
            Rng rng = substream(cfg.master_seed, "exact");
            const ExactTables exact =
                exact_value_iteration(cfg, geo, bounds_stages, opt.mc_samples, rng);
            const ValueTable table = value_table_from_exact(exact, cfg, geo);
            std::ofstream out(opt.out_path);
            if (!out)
                throw std::runtime_error("cannot open output file: " + opt.out_path);
            out << "config_hash,seed,state,m,lower,exact,upper,lower_certified\n";
            for (std::uint32_t mask = 0; mask < static_cast<std::uint32_t>(exact.state_count());
                 ++mask) {
                const ReducedState state = state_from_mask(mask, exact.caches, exact.segments);
                std::string bits;
                for (auto b : state.bits)
                    bits += b ? '1' : '0';
                for (int m = 1; m <= exact.n_stages; ++m) {
                    const ValueBounds vb = value_bounds(state, m, table);
                    out << config_hash_hex(cfg) << "," << cfg.master_seed << "," << bits << ","
                        << m << "," << fmt(vb.lower) << "," << fmt(exact.value(m, mask)) << ","
                        << fmt(vb.upper) << "," << (vb.lower_certified ? 1 : 0) << "\n";
                }
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace cachecast
