#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cachecast/rng.hpp"

namespace cachecast {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double norm(Point p) {
    return std::hypot(p.x, p.y);
}

inline double distance(Point a, Point b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

struct HotZone {
    Point center;
    double radius = 0.0;
    double probability = 0.0;
};

enum class PlacementKind { CellEdgeRandom, ExplicitList };
enum class DistributionKind { UniformDisc, HotZoneMixture };

/// All physical, economic and process parameters of one experiment.
struct ScenarioConfig {
    double cell_radius = 0.0;
    int cache_count = 0;
    double cache_service_radius = 0.0;
    PlacementKind placement = PlacementKind::CellEdgeRandom;
    std::vector<Point> explicit_centers;
    int antennas = 1;
    double pathloss_exponent = 0.0;
    double pathloss_ref_distance = 1.0;
    double shadowing_sigma_db = 0.0;
    double noise_power = 0.0;
    double file_bits = 0.0;
    int segments = 1;
    double request_rate = 0.0;      // lambda, requests per second
    double lifetime = 0.0;          // T, seconds
    std::optional<double> proactive_period; // T_p, seconds
    double weight_energy = 0.0;     // w_e
    double weight_time = 0.0;       // w_t
    DistributionKind distribution = DistributionKind::UniformDisc;
    std::vector<HotZone> hot_zones;
    std::optional<double> learning_threshold; // tau
    double proactive_threshold = 1.05;        // tau'
    double tail_epsilon = 1e-9;
    std::uint64_t master_seed = 0;
    int replications = 100;

    double bits_per_segment() const { return file_bits / segments; }
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void validate(const ScenarioConfig& cfg) {
    auto fail = [](const std::string& msg) { throw ConfigError("validation error: " + msg); };
    if (!(cfg.cell_radius > 0)) fail("cell_radius must be positive");
    if (cfg.cache_count < 0) fail("cache_count must be nonnegative");
    if (cfg.cache_count > 0 && !(cfg.cache_service_radius > 0))
        fail("cache_service_radius must be positive");
    if (cfg.antennas < 1) fail("antennas must be at least 1");
    if (!(cfg.pathloss_exponent > 0)) fail("pathloss_exponent must be positive");
    if (!(cfg.pathloss_ref_distance > 0)) fail("d0 must be positive");
    if (cfg.shadowing_sigma_db < 0) fail("shadowing_sigma_db must be nonnegative");
    if (!(cfg.noise_power > 0)) fail("noise_power must be positive");
    if (!(cfg.file_bits > 0)) fail("file_bits must be positive");
    if (cfg.segments < 1) fail("segments must be at least 1");
    if (!(cfg.request_rate > 0)) fail("lambda must be positive");
    if (!(cfg.lifetime > 0)) fail("lifetime must be positive");
    if (cfg.proactive_period && !(*cfg.proactive_period > 0)) fail("T_p must be positive");
    if (!(cfg.weight_energy > 0)) fail("w_e must be positive");
    if (!(cfg.weight_time > 0)) fail("w_t must be positive");
    if (!(cfg.proactive_threshold > 1)) fail("proactive_threshold must exceed 1");
    if (!(cfg.tail_epsilon > 0 && cfg.tail_epsilon < 1)) fail("tail_epsilon must lie in (0, 1)");
    if (cfg.replications < 1) fail("replications must be at least 1");

    if (cfg.placement == PlacementKind::ExplicitList) {
        if (static_cast<int>(cfg.explicit_centers.size()) != cfg.cache_count)
            fail("explicit placement requires exactly cache_count cache_center entries");
        for (const auto& c : cfg.explicit_centers)
            if (norm(c) > cfg.cell_radius)
                fail("cache center lies outside the cell disc");
    } else if (cfg.cache_count > 0) {
        if (cfg.cell_radius < 2.0 * cfg.cache_service_radius)
            fail("cell-edge placement requires cell_radius >= 2 * cache_service_radius");
    }

    double zone_prob = 0.0;
    for (const auto& z : cfg.hot_zones) {
        if (!(z.probability > 0 && z.probability < 1))
            fail("hot zone probability must lie in (0, 1)");
        if (!(z.radius > 0)) fail("hot zone radius must be positive");
        if (norm(z.center) + z.radius > cfg.cell_radius)
            fail("hot zone must lie inside the cell disc");
        zone_prob += z.probability;
    }
    if (zone_prob >= 1.0) fail("hot zone probabilities must sum below 1");
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& value, int line) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || !trim(end).empty())
        throw ConfigError("parse error at line " + std::to_string(line) +
                          ": expected a number, got '" + value + "'");
    return v;
}

inline int parse_int(const std::string& value, int line) {
    const double v = parse_number(value, line);
    if (v != std::floor(v))
        throw ConfigError("parse error at line " + std::to_string(line) +
                          ": expected an integer, got '" + value + "'");
    return static_cast<int>(v);
}

inline std::vector<double> parse_tuple(const std::string& value, std::size_t arity, int line) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ','))
        out.push_back(parse_number(trim(part), line));
    if (out.size() != arity)
        throw ConfigError("parse error at line " + std::to_string(line) + ": expected " +
                          std::to_string(arity) + " comma-separated values");
    return out;
}

} // namespace detail

/// Parses the line-oriented `key = value` scenario grammar.
inline ScenarioConfig parse_scenario(std::istream& in) {
    ScenarioConfig cfg;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("parse error at line " + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("parse error at line " + std::to_string(line_no) +
                              ": expected 'key = value'");

        const bool repeatable = (key == "hotzone" || key == "cache_center");
        if (!repeatable && !seen.insert(key).second)
            throw ConfigError("parse error at line " + std::to_string(line_no) +
                              ": duplicate key '" + key + "'");

        if (key == "cell_radius") cfg.cell_radius = detail::parse_number(value, line_no);
        else if (key == "cache_count") cfg.cache_count = detail::parse_int(value, line_no);
        else if (key == "cache_service_radius") cfg.cache_service_radius = detail::parse_number(value, line_no);
        else if (key == "antennas") cfg.antennas = detail::parse_int(value, line_no);
        else if (key == "pathloss_exponent") cfg.pathloss_exponent = detail::parse_number(value, line_no);
        else if (key == "d0") cfg.pathloss_ref_distance = detail::parse_number(value, line_no);
        else if (key == "shadowing_sigma_db") cfg.shadowing_sigma_db = detail::parse_number(value, line_no);
        else if (key == "noise_power") cfg.noise_power = detail::parse_number(value, line_no);
        else if (key == "file_bits") cfg.file_bits = detail::parse_number(value, line_no);
        else if (key == "segments") cfg.segments = detail::parse_int(value, line_no);
        else if (key == "lambda") cfg.request_rate = detail::parse_number(value, line_no);
        else if (key == "lifetime") cfg.lifetime = detail::parse_number(value, line_no);
        else if (key == "T_p") cfg.proactive_period = detail::parse_number(value, line_no);
        else if (key == "w_e") cfg.weight_energy = detail::parse_number(value, line_no);
        else if (key == "w_t") cfg.weight_time = detail::parse_number(value, line_no);
        else if (key == "tau") cfg.learning_threshold = detail::parse_number(value, line_no);
        else if (key == "tau_prime") cfg.proactive_threshold = detail::parse_number(value, line_no);
        else if (key == "tail_epsilon") cfg.tail_epsilon = detail::parse_number(value, line_no);
        else if (key == "seed") cfg.master_seed = static_cast<std::uint64_t>(detail::parse_number(value, line_no));
        else if (key == "replications") cfg.replications = detail::parse_int(value, line_no);
        else if (key == "placement") {
            if (value == "cell-edge-random") cfg.placement = PlacementKind::CellEdgeRandom;
            else if (value == "explicit") cfg.placement = PlacementKind::ExplicitList;
            else throw ConfigError("parse error at line " + std::to_string(line_no) +
                                   ": placement must be cell-edge-random or explicit");
        } else if (key == "distribution") {
            if (value == "uniform" || value == "uniform-disc") cfg.distribution = DistributionKind::UniformDisc;
            else if (value == "hotzone" || value == "hot-zone") cfg.distribution = DistributionKind::HotZoneMixture;
            else throw ConfigError("parse error at line " + std::to_string(line_no) +
                                   ": distribution must be uniform or hotzone");
        } else if (key == "hotzone") {
            const auto t = detail::parse_tuple(value, 4, line_no);
            cfg.hot_zones.push_back({{t[0], t[1]}, t[2], t[3]});
        } else if (key == "cache_center") {
            const auto t = detail::parse_tuple(value, 2, line_no);
            cfg.explicit_centers.push_back({t[0], t[1]});
        } else {
            throw ConfigError("parse error at line " + std::to_string(line_no) +
                              ": unknown key '" + key + "'");
        }
    }

    static const char* required[] = {
        "cell_radius", "cache_count", "cache_service_radius", "antennas",
        "pathloss_exponent", "shadowing_sigma_db", "noise_power", "file_bits",
        "segments", "lambda", "lifetime", "w_e", "w_t", "seed"};
    for (const char* key : required)
        if (!seen.count(key))
            throw ConfigError(std::string("missing required key: ") + key);

    validate(cfg);
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open scenario file: " + path);
    return parse_scenario(in);
}

/// FNV-1a hash of a canonical rendering of every config field; stamped on
/// value tables and CSV rows as an audit trail.
inline std::uint64_t config_hash(const ScenarioConfig& cfg) {
    char buf[64];
    std::string canon;
    auto add = [&](const char* name, double v) {
        std::snprintf(buf, sizeof(buf), "%s=%.17g;", name, v);
        canon += buf;
    };
    add("cell_radius", cfg.cell_radius);
    add("cache_count", cfg.cache_count);
    add("cache_service_radius", cfg.cache_service_radius);
    add("placement", cfg.placement == PlacementKind::CellEdgeRandom ? 0 : 1);
    for (const auto& c : cfg.explicit_centers) { add("cx", c.x); add("cy", c.y); }
    add("antennas", cfg.antennas);
    add("pathloss_exponent", cfg.pathloss_exponent);
    add("d0", cfg.pathloss_ref_distance);
    add("shadowing_sigma_db", cfg.shadowing_sigma_db);
    add("noise_power", cfg.noise_power);
    add("file_bits", cfg.file_bits);
    add("segments", cfg.segments);
    add("lambda", cfg.request_rate);
    add("lifetime", cfg.lifetime);
    add("T_p", cfg.proactive_period.value_or(-1.0));
    add("w_e", cfg.weight_energy);
    add("w_t", cfg.weight_time);
    add("distribution", cfg.distribution == DistributionKind::UniformDisc ? 0 : 1);
    for (const auto& z : cfg.hot_zones) {
        add("zx", z.center.x); add("zy", z.center.y);
        add("zr", z.radius);   add("zp", z.probability);
    }
    add("tau", cfg.learning_threshold.value_or(-1.0));
    add("tau_prime", cfg.proactive_threshold);
    add("tail_epsilon", cfg.tail_epsilon);
    add("seed", static_cast<double>(cfg.master_seed));
    add("replications", cfg.replications);
    return fnv1a64(canon);
}

inline std::string config_hash_hex(const ScenarioConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    return buf;
}

/// Cache positions plus the common service radius.
struct Geometry {
    std::vector<Point> cache_centers;
    double cache_service_radius = 0.0;

    int cache_count() const { return static_cast<int>(cache_centers.size()); }

    // closed disc: the boundary counts as covered
    bool covers(int i, Point p) const {
        return distance(cache_centers[static_cast<std::size_t>(i)], p) <= cache_service_radius;
    }

    /// True when any two service discs intersect; disables the certified
    /// lower bound on value functions.
    bool overlap() const {
        for (std::size_t i = 0; i < cache_centers.size(); ++i)
            for (std::size_t j = i + 1; j < cache_centers.size(); ++j)
                if (distance(cache_centers[i], cache_centers[j]) <= 2.0 * cache_service_radius)
                    return true;
        return false;
    }
};

/// Draws cache positions. Cell-edge placement samples uniformly over the
/// annulus [R - 2 r_s, R - r_s], which keeps every service disc inside the
/// cell.
inline Geometry place_caches(const ScenarioConfig& cfg, Rng& rng) {
    Geometry geo;
    geo.cache_service_radius = cfg.cache_service_radius;
    if (cfg.placement == PlacementKind::ExplicitList) {
        for (const auto& c : cfg.explicit_centers)
            if (norm(c) > cfg.cell_radius)
                throw ConfigError("validation error: cache center lies outside the cell disc");
        geo.cache_centers = cfg.explicit_centers;
        return geo;
    }
    const double inner = cfg.cell_radius - 2.0 * cfg.cache_service_radius;
    const double outer = cfg.cell_radius - cfg.cache_service_radius;
    geo.cache_centers.reserve(static_cast<std::size_t>(cfg.cache_count));
    for (int i = 0; i < cfg.cache_count; ++i) {
        const double r = std::sqrt(inner * inner + rng.uniform01() * (outer * outer - inner * inner));
        const double phi = 2.0 * std::numbers::pi * rng.uniform01();
        geo.cache_centers.push_back({r * std::cos(phi), r * std::sin(phi)});
    }
    return geo;
}

namespace detail {

inline Point uniform_in_disc(Point center, double radius, Rng& rng) {
    const double r = radius * std::sqrt(rng.uniform01());
    const double phi = 2.0 * std::numbers::pi * rng.uniform01();
    return {center.x + r * std::cos(phi), center.y + r * std::sin(phi)};
}

} // namespace detail

/// Samples one requesting-user location. Hot-zone mixture: with probability
/// p_z uniform in zone z, otherwise uniform over the whole cell disc.
inline Point sample_user_location(const ScenarioConfig& cfg, Rng& rng) {
    if (cfg.distribution == DistributionKind::HotZoneMixture && !cfg.hot_zones.empty()) {
        const double u = rng.uniform01();
        double cum = 0.0;
        for (const auto& z : cfg.hot_zones) {
            cum += z.probability;
            if (u < cum)
                return detail::uniform_in_disc(z.center, z.radius, rng);
        }
    }
    return detail::uniform_in_disc({0.0, 0.0}, cfg.cell_radius, rng);
}

/// Indices of caches whose service disc holds the point, ascending.
inline std::vector<int> coverage_caches(Point p, const Geometry& geo) {
    std::vector<int> out;
    for (int i = 0; i < geo.cache_count(); ++i)
        if (geo.covers(i, p))
            out.push_back(i);
    return out;
}

} // namespace cachecast
