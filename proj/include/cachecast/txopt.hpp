#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cachecast {

/// Principal branch of the Lambert-W function for x >= 0, solved by Halley
/// iteration to |W e^W - x| <= 1e-12 max(1, x).
inline double lambert_w0(double x) {
    if (x < 0.0)
        throw std::domain_error("lambert_w0 requires a nonnegative argument");
    if (x == 0.0)
        return 0.0;
    double w;
    if (x > std::numbers::e) {
        const double l1 = std::log(x);
        const double l2 = std::log(l1);
        w = l1 - l2 + l2 / l1;
    } else {
        w = x / (1.0 + x); // adequate seed on [0, e]
    }
    for (int it = 0; it < 64; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        const double step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
        w -= step;
        if (std::abs(step) <= 1e-16 * (1.0 + std::abs(w)))
            break;
    }
    return w;
}

/// Optimal per-segment transmit decision: power, (continuous) symbol count
/// and the resulting cost w_e P N + w_t N.
struct SegmentCostSolution {
    double power = 0.0;
    double symbols = 0.0;
    double cost = 0.0;
};

/// Minimizes w_e P N + w_t N subject to the high-SNR rate equality
/// N (theta + log2 P) = bits. Closed form:
///   P* = w_t / (w_e W(2^theta w_t / (e w_e))),  N* = bits / (theta + log2 P*).
/// theta + log2 P* = (1 + W) / ln 2 > log2 e holds for every input, so the
/// rate constraint is always satisfiable at the optimum.
inline SegmentCostSolution segment_min_cost(double theta, double weight_energy,
                                            double weight_time, double bits) {
    if (!(weight_energy > 0) || !(weight_time > 0))
        throw std::invalid_argument("segment_min_cost requires positive weights");
    if (!(bits > 0))
        throw std::invalid_argument("segment_min_cost requires positive bits");
    const double x = std::exp2(theta) * weight_time / (std::numbers::e * weight_energy);
    if (!std::isfinite(x))
        throw std::domain_error("segment_min_cost: effective-SNR exponent too large");
    const double w = lambert_w0(x);
    SegmentCostSolution sol;
    sol.power = weight_time / (weight_energy * w);
    const double exponent = theta + std::log2(sol.power);
    sol.symbols = bits / exponent;
    sol.cost = (weight_energy * sol.power + weight_time) * sol.symbols;
    return sol;
}

/// Independent numeric minimizer of the same objective: coarse log-power scan
/// followed by golden-section refinement. Verification oracle for
/// segment_min_cost; never used on the decision path.
inline SegmentCostSolution oracle_min_cost(double theta, double weight_energy,
                                           double weight_time, double bits) {
    const double ln2 = std::numbers::ln2;
    // objective in t = ln P; feasible for theta + t/ln2 > 0
    auto objective = [&](double t) {
        const double exponent = theta + t / ln2;
        if (!(exponent > 0))
            return std::numeric_limits<double>::infinity();
        return (weight_energy * std::exp(t) + weight_time) * bits / exponent;
    };
    const double lo_feasible = -theta * ln2;
    double lo = std::max(std::log(1e-9), lo_feasible + 1e-9);
    double hi = std::max(std::log(1e9), lo_feasible + 40.0);

    // bracket the minimum on a coarse grid
    const int grid = 512;
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        const double t = lo + (hi - lo) * i / grid;
        const double v = objective(t);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    double a = lo + (hi - lo) * std::max(0, best - 1) / grid;
    double b = lo + (hi - lo) * std::min(grid, best + 1) / grid;

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    while (b - a > 1e-12 * (1.0 + std::abs(a) + std::abs(b))) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    const double t = (a + b) / 2.0;
    SegmentCostSolution sol;
    sol.power = std::exp(t);
    sol.symbols = bits / (theta + t / ln2);
    sol.cost = (weight_energy * sol.power + weight_time) * sol.symbols;
    return sol;
}

} // namespace cachecast
