#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "cachecast/cli.hpp"
#include "test_support.hpp"

using namespace cachecast;

namespace {

// desk-scale scenario so CLI runs stay fast
std::string small_config_text() {
    return "cell_radius = 500\n"
           "cache_count = 3\n"
           "cache_service_radius = 90\n"
           "antennas = 8\n"
           "pathloss_exponent = 3.5\n"
           "shadowing_sigma_db = 6\n"
           "noise_power = 1e-13\n"
           "file_bits = 140e6\n"
           "segments = 4\n"
           "lambda = 0.005\n"
           "lifetime = 600\n"
           "w_e = 1\n"
           "w_t = 100\n"
           "seed = 13\n"
           "replications = 8\n"
           "tau = 1e5\n"
           "T_p = 60\n";
}

std::string tiny_config_text() {
    return "cell_radius = 500\n"
           "cache_count = 2\n"
           "cache_service_radius = 90\n"
           "placement = explicit\n"
           "cache_center = -200, 0\n"
           "cache_center = 200, 0\n"
           "antennas = 8\n"
           "pathloss_exponent = 3.5\n"
           "shadowing_sigma_db = 6\n"
           "noise_power = 1e-13\n"
           "file_bits = 140e6\n"
           "segments = 2\n"
           "lambda = 0.00133\n"
           "lifetime = 600\n"
           "w_e = 1\n"
           "w_t = 100\n"
           "seed = 11\n"
           "replications = 6\n";
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n')
            ++n;
    return n;
}

} // namespace

TEST_CASE("simulate writes one row per policy and is byte-stable") {
    const std::string cfg = testutil::temp_path("cachecast_cli_small.cfg");
    const std::string out = testutil::temp_path("cachecast_cli_sim.csv");
    testutil::write_file(cfg, small_config_text());

    const std::vector<std::string> args{"simulate",      "--config",   cfg,
                                        "--out",         out,          "--policies",
                                        "b1,b2,amdp",    "--mc-samples", "500"};
    REQUIRE(run_cli(args) == 0);
    const std::string first = testutil::read_file(out);
    CHECK(count_lines(first) == 4); // header + 3 policies
    CHECK(first.find("config_hash,seed,policy,swept_key,swept_value,replications,mean_cost,"
                     "ci95_halfwidth,mean_energy_term,mean_time_term,mean_requests") == 0);
    CHECK(first.find(",13,b1,") != std::string::npos);
    CHECK(first.find(",13,amdp,") != std::string::npos);

    REQUIRE(run_cli(args) == 0);
    CHECK(testutil::read_file(out) == first); // identical invocation, identical bytes

    // a different seed changes the hash column and the results
    REQUIRE(run_cli({"simulate", "--config", cfg, "--out", out, "--policies", "b1", "--seed",
                     "14", "--mc-samples", "500"}) == 0);
    const std::string reseeded = testutil::read_file(out);
    CHECK(reseeded != first);
    CHECK(reseeded.find(",14,b1,") != std::string::npos);

    std::filesystem::remove(cfg);
    std::filesystem::remove(out);
}

TEST_CASE("sweep emits the swept key and value on every row") {
    const std::string cfg = testutil::temp_path("cachecast_cli_sweep.cfg");
    const std::string out = testutil::temp_path("cachecast_cli_sweep.csv");
    testutil::write_file(cfg, small_config_text());

    REQUIRE(run_cli({"sweep", "--config", cfg, "--out", out, "--key", "lambda", "--values",
                     "0.002,0.004", "--policies", "b1,b2", "--mc-samples", "500"}) == 0);
    const std::string text = testutil::read_file(out);
    CHECK(count_lines(text) == 5); // header + 2 values x 2 policies
    CHECK(text.find(",lambda,0.002,") != std::string::npos);
    CHECK(text.find(",lambda,0.004,") != std::string::npos);

    CHECK(run_cli({"sweep", "--config", cfg, "--out", out, "--key", "nonsense", "--values", "1"}) ==
          1);
    std::filesystem::remove(cfg);
    std::filesystem::remove(out);
}

TEST_CASE("bounds reports a sandwich for every state and stage") {
    const std::string cfg = testutil::temp_path("cachecast_cli_tiny.cfg");
    const std::string out = testutil::temp_path("cachecast_cli_bounds.csv");
    testutil::write_file(cfg, tiny_config_text());

    REQUIRE(run_cli({"bounds", "--config", cfg, "--out", out, "--stages", "3", "--mc-samples",
                     "2000"}) == 0);
    std::istringstream in(testutil::read_file(out));
    std::string line;
    std::getline(in, line);
    CHECK(line == "config_hash,seed,state,m,lower,exact,upper,lower_certified");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::stringstream ss(line);
        std::string hash, seed, state, m, lower, exact, upper, cert;
        std::getline(ss, hash, ',');
        std::getline(ss, seed, ',');
        std::getline(ss, state, ',');
        std::getline(ss, m, ',');
        std::getline(ss, lower, ',');
        std::getline(ss, exact, ',');
        std::getline(ss, upper, ',');
        std::getline(ss, cert, ',');
        const double lo = std::stod(lower), ex = std::stod(exact), up = std::stod(upper);
        const double slack = 1e-9 * std::max(1.0, std::abs(ex));
        CHECK(lo <= ex + slack);
        CHECK(ex <= up + slack);
        CHECK(state.size() == 4);
        CHECK(cert == "1"); // disjoint discs: certified lower bound
    }
    CHECK(rows == 16 * 3);
    std::filesystem::remove(cfg);
    std::filesystem::remove(out);
}

TEST_CASE("table and learn subcommands write loadable artifacts") {
    const std::string cfg = testutil::temp_path("cachecast_cli_small2.cfg");
    const std::string table_path = testutil::temp_path("cachecast_cli_table.txt");
    const std::string learner_path = testutil::temp_path("cachecast_cli_learner.txt");
    testutil::write_file(cfg, small_config_text());

    REQUIRE(run_cli({"table", "--config", cfg, "--out", table_path, "--mc-samples", "500"}) == 0);
    const ValueTable table = load_value_table(table_path);
    CHECK(table.caches == 3);
    CHECK(table.provenance == Provenance::AnalyticMc);

    REQUIRE(run_cli({"learn", "--config", cfg, "--out", learner_path, "--mc-samples", "500",
                     "--max-draws", "200"}) == 0);
    const LearnerState learner = load_learner(learner_path);
    CHECK(learner.observations >= 1);
    CHECK(learner.table.provenance == Provenance::Learned);

    std::filesystem::remove(cfg);
    std::filesystem::remove(table_path);
    std::filesystem::remove(learner_path);
}

TEST_CASE("usage and validation failures exit with code 1") {
    const std::string cfg = testutil::temp_path("cachecast_cli_bad.cfg");
    const std::string out = testutil::temp_path("cachecast_cli_bad.csv");

    CHECK(run_cli({"frobnicate"}) == 1);
    CHECK(run_cli({"simulate"}) == 1); // missing required flags
    CHECK(run_cli({"simulate", "--config", "/nonexistent.cfg", "--out", out}) == 1);

    testutil::write_file(cfg, small_config_text() + "tau_prime = 0.9\n");
    CHECK(run_cli({"simulate", "--config", cfg, "--out", out}) == 1);

    testutil::write_file(cfg, small_config_text());
    CHECK(run_cli({"simulate", "--config", cfg, "--out", out, "--policies", "dqn"}) == 1);

    // optimal-tiny refuses a state space beyond the enumerable bound
    CHECK(run_cli({"simulate", "--config", cfg, "--out", out, "--policies", "optimal-tiny",
                   "--mc-samples", "500"}) == 1);

    std::filesystem::remove(cfg);
    std::filesystem::remove(out);
}

TEST_CASE("unwritable output is a runtime failure") {
    const std::string cfg = testutil::temp_path("cachecast_cli_rt.cfg");
    testutil::write_file(cfg, small_config_text());
    CHECK(run_cli({"simulate", "--config", cfg, "--out", "/nonexistent_dir/x.csv", "--policies",
                   "b1", "--mc-samples", "500"}) == 2);
    std::filesystem::remove(cfg);
}

TEST_CASE("multi-file simulation with shared proactive opportunities") {
    const std::string cfg = testutil::temp_path("cachecast_cli_files.cfg");
    const std::string out = testutil::temp_path("cachecast_cli_files.csv");
    testutil::write_file(cfg, small_config_text());
    REQUIRE(run_cli({"simulate", "--config", cfg, "--out", out, "--policies", "amdp-proactive",
                     "--files", "3", "--replications", "4", "--mc-samples", "500"}) == 0);
    const std::string text = testutil::read_file(out);
    CHECK(count_lines(text) == 2);
    CHECK(text.find("amdp-proactive") != std::string::npos);
    std::filesystem::remove(cfg);
    std::filesystem::remove(out);
}

TEST_CASE("help exits cleanly") {
    CHECK(run_cli({"--help"}) == 0);
}
