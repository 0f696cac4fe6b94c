#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cachecast/learn.hpp"
#include "test_support.hpp"

using namespace cachecast;

namespace {

// small scenario so learner sweeps stay fast
ScenarioConfig small_config() {
    ScenarioConfig cfg = testutil::paper_config();
    cfg.cache_count = 5;
    cfg.segments = 2;
    cfg.request_rate = 2.0 / 600.0;
    cfg.master_seed = 77;
    return cfg;
}

RequestDraw synthetic_draw(const ScenarioConfig& cfg, const Geometry& geo, Point loc,
                           std::uint64_t seed) {
    Rng rng(seed, 99);
    return draw_large_scale(cfg, geo, loc, 0.0, rng);
}

} // namespace

TEST_CASE("learner initialization") {
    const ScenarioConfig cfg = small_config();
    Rng prng = substream(cfg.master_seed, "placement");
    const Geometry geo = place_caches(cfg, prng);

    const LearnerState a = learn_init(cfg, geo, 5000);
    const LearnerState b = learn_init(cfg, geo, 5000);
    CHECK(a.observations == 0);
    CHECK(a.table.provenance == Provenance::Learned);
    // deterministic: same seed, identical tables
    for (int m = 1; m <= a.table.n_max; ++m) {
        CHECK(a.table.star(m) == b.table.star(m));
        for (int i = 0; i < a.table.caches; ++i)
            CHECK(a.table.missing(m, i) == b.table.missing(m, i));
    }
    // inherited table invariants
    for (int m = 1; m <= a.table.n_max; ++m)
        for (int i = 0; i < a.table.caches; ++i) {
            CHECK(a.table.missing(m, i) >= a.table.star(m) - 1e-6);
            CHECK(a.table.missing(m, i) >= a.table.missing(m - 1, i) - 1e-6);
        }
}

TEST_CASE("initialization matches an independent uniform build") {
    ScenarioConfig cfg = small_config();
    cfg.distribution = DistributionKind::HotZoneMixture;
    cfg.hot_zones = {{{200, 0}, 90, 0.2}};
    validate(cfg);
    Rng prng = substream(cfg.master_seed, "placement");
    const Geometry geo = place_caches(cfg, prng);

    const LearnerState st = learn_init(cfg, geo, 50000);
    ScenarioConfig uniform_cfg = cfg;
    uniform_cfg.distribution = DistributionKind::UniformDisc;
    Rng rng(901, 7);
    const ValueTable reference = build_value_table(uniform_cfg, geo, 200000, rng);
    CHECK(std::abs(st.table.unit_outside_cost - reference.unit_outside_cost) /
              reference.unit_outside_cost <
          0.02);
}

TEST_CASE("repeated draw satisfies the exact running-average identity") {
    const ScenarioConfig cfg = small_config();
    Rng prng = substream(cfg.master_seed, "placement");
    const Geometry geo = place_caches(cfg, prng);
    LearnerState st = learn_init(cfg, geo, 2000);

    const RequestDraw draw = synthetic_draw(cfg, geo, {420, 60}, 5);
    const DrawCosts dc = classify_draw(cfg, draw);

    const double init_star1 = st.table.star(1);
    const double init_miss1 = st.table.missing(1, 0);
    const double star_sample = dc.outside ? dc.total_user_cost : 0.0;

    // the one-stage targets depend only on the draw (the zero-stage
    // continuation vanishes), so the sample-mean identity is exact there
    double miss_sample = 0.0;
    switch (dc.caches[0].kind) {
    case PerCacheOutcome::Kind::CoveredElsewhere:
        miss_sample = 0.0;
        break;
    case PerCacheOutcome::Kind::FreeFill:
        miss_sample = dc.caches[0].user_target_cost;
        break;
    case PerCacheOutcome::Kind::Choice:
        miss_sample = std::min(dc.caches[0].user_target_cost, dc.caches[0].cache_target_cost);
        break;
    }

    for (int t = 1; t <= 6; ++t) {
        learn_observe(cfg, st, draw);
        CHECK(st.observations == t);
        CHECK(st.table.star(1) ==
              doctest::Approx((init_star1 + t * star_sample) / (t + 1)).epsilon(1e-12));
        CHECK(st.table.missing(1, 0) ==
              doctest::Approx((init_miss1 + t * miss_sample) / (t + 1)).epsilon(1e-12));
    }
}

TEST_CASE("covered draws shrink the star estimate toward zero") {
    ScenarioConfig cfg = small_config();
    cfg.placement = PlacementKind::ExplicitList;
    cfg.explicit_centers = {{365, 0}, {-365, 0}, {0, 365}, {0, -365}, {258, 258}};
    validate(cfg);
    Rng prng = substream(cfg.master_seed, "placement");
    const Geometry geo = place_caches(cfg, prng);
    LearnerState st = learn_init(cfg, geo, 2000);

    const double init = st.table.star(3);
    const RequestDraw covered = synthetic_draw(cfg, geo, {360, 5}, 8); // inside cache 0
    REQUIRE_FALSE(covered.covering.empty());
    learn_observe(cfg, st, covered);
    CHECK(st.table.star(3) == doctest::Approx(init / 2.0).epsilon(1e-12));
    learn_observe(cfg, st, covered);
    CHECK(st.table.star(3) == doctest::Approx(init / 3.0).epsilon(1e-12));
}

TEST_CASE("learning converges to the analytic table under the true distribution") {
    const ScenarioConfig cfg = small_config();
    Rng prng = substream(cfg.master_seed, "placement");
    const Geometry geo = place_caches(cfg, prng);

    Rng truth_rng(404, 1);
    const ValueTable truth = build_value_table(cfg, geo, 400000, truth_rng);

    LearnerState st = learn_init(cfg, geo, 20000);
    Rng drng = substream(cfg.master_seed, "learn-draws");
    for (int i = 0; i < 10000; ++i) {
        const Point loc = sample_user_location(cfg, drng);
        learn_observe(cfg, st, draw_large_scale(cfg, geo, loc, 0.0, drng));
    }
    CHECK(std::abs(st.table.star(1) - truth.star(1)) / truth.star(1) < 0.02);
    // missing entries carry more variance; a mid-stage entry stays close
    CHECK(std::abs(st.table.missing(3, 0) - truth.missing(3, 0)) / truth.missing(3, 0) < 0.05);
}

TEST_CASE("star estimator is unbiased across independent runs") {
    const ScenarioConfig cfg = small_config();
    Rng prng = substream(cfg.master_seed, "placement");
    const Geometry geo = place_caches(cfg, prng);
    Rng truth_rng(405, 2);
    const ValueTable truth = build_value_table(cfg, geo, 400000, truth_rng);

    const int runs = 100, obs = 1000;
    std::vector<double> estimates;
    for (int r = 0; r < runs; ++r) {
        LearnerState st = learn_init(cfg, geo, 20000);
        Rng drng = substream(9000 + r, "learn-draws");
        for (int i = 0; i < obs; ++i) {
            const Point loc = sample_user_location(cfg, drng);
            learn_observe(cfg, st, draw_large_scale(cfg, geo, loc, 0.0, drng));
        }
        estimates.push_back(st.table.star(1));
    }
    double mean = 0.0;
    for (double e : estimates)
        mean += e;
    mean /= runs;
    double sd = 0.0;
    for (double e : estimates)
        sd += (e - mean) * (e - mean);
    sd = std::sqrt(sd / (runs - 1));
    CHECK(std::abs(mean - truth.star(1)) <= 1.96 * sd / std::sqrt(static_cast<double>(runs)));
}

TEST_CASE("observation order barely matters") {
    const ScenarioConfig cfg = small_config();
    Rng prng = substream(cfg.master_seed, "placement");
    const Geometry geo = place_caches(cfg, prng);

    std::vector<RequestDraw> draws;
    Rng drng(606, 3);
    for (int i = 0; i < 1000; ++i) {
        const Point loc = sample_user_location(cfg, drng);
        draws.push_back(draw_large_scale(cfg, geo, loc, 0.0, drng));
    }
    LearnerState fwd = learn_init(cfg, geo, 5000);
    LearnerState rev = learn_init(cfg, geo, 5000);
    for (const auto& d : draws)
        learn_observe(cfg, fwd, d);
    for (auto it = draws.rbegin(); it != draws.rend(); ++it)
        learn_observe(cfg, rev, *it);

    // star entries are permutation-invariant sums
    CHECK(std::abs(fwd.table.star(4) - rev.table.star(4)) <= 1e-9 * fwd.table.star(4));
    // bootstrapped entries only approximately so
    for (int i = 0; i < fwd.table.caches; ++i)
        CHECK(std::abs(fwd.table.missing(4, i) - rev.table.missing(4, i)) <=
              0.01 * fwd.table.missing(4, i));
}

TEST_CASE("convergence test reads the last update delta") {
    const ScenarioConfig cfg = small_config();
    Rng prng = substream(cfg.master_seed, "placement");
    const Geometry geo = place_caches(cfg, prng);
    LearnerState st = learn_init(cfg, geo, 2000);
    CHECK_THROWS_AS(learn_converged(st, 1.0), std::invalid_argument);

    Rng drng(707, 4);
    const Point loc = sample_user_location(cfg, drng);
    learn_observe(cfg, st, draw_large_scale(cfg, geo, loc, 0.0, drng));
    CHECK(learn_converged(st, std::numeric_limits<double>::infinity()));
    CHECK_FALSE(learn_converged(st, 0.0));

    // deltas decay like 1/t: t * delta stays bounded
    double bound = 0.0;
    for (int t = 2; t <= 2000; ++t) {
        const Point p = sample_user_location(cfg, drng);
        learn_observe(cfg, st, draw_large_scale(cfg, geo, p, 0.0, drng));
        if (t == 100)
            bound = 100.0 * st.last_delta;
        if (t > 100)
            CHECK(t * st.last_delta < 50.0 * bound);
    }
}

TEST_CASE("learner checkpoints round trip through the table format") {
    const ScenarioConfig cfg = small_config();
    Rng prng = substream(cfg.master_seed, "placement");
    const Geometry geo = place_caches(cfg, prng);
    LearnerState st = learn_init(cfg, geo, 2000);
    Rng drng(808, 5);
    for (int i = 0; i < 10; ++i) {
        const Point loc = sample_user_location(cfg, drng);
        learn_observe(cfg, st, draw_large_scale(cfg, geo, loc, 0.0, drng));
    }
    const std::string path = testutil::temp_path("cachecast_learner_ckpt.txt");
    save_learner(st, path);
    const LearnerState back = load_learner(path);
    CHECK(back.observations == st.observations);
    CHECK(back.table.provenance == Provenance::Learned);
    for (int m = 1; m <= st.table.n_max; ++m)
        for (int i = 0; i < st.table.caches; ++i)
            CHECK(back.table.missing(m, i) == st.table.missing(m, i));
    std::filesystem::remove(path);

    // a plain table file is not a learner checkpoint
    const std::string plain = testutil::temp_path("cachecast_plain_table.txt");
    save_value_table(st.table, plain);
    CHECK_THROWS_AS(load_learner(plain), std::runtime_error);
    std::filesystem::remove(plain);
}
