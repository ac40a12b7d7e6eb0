#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/checks.hpp"
#include "support/fixtures.hpp"
#include "support/random_scenarios.hpp"
#include "twill/controller.hpp"

using namespace twill;

namespace {

void check_twill_properties(const WorkloadScenario& s, const PlatformSpec& platform, const SimConfig& config) {
    const auto matrix = test::default_matrix();
    TwillPolicy p1;
    const auto trace = run(s, platform, matrix, p1, config);
    CHECK(test::check_all_complete(s, trace).empty());
    CHECK(test::check_occupancy(trace).empty());
    CHECK(test::check_work_conservation(trace).empty());
    CHECK(test::check_request_times(trace).empty());
    CHECK(test::check_preemption(trace).empty());
    CHECK(test::check_queue_order(trace, s, platform, matrix, config.affinity_threshold).empty());

    TwillPolicy p2;
    CHECK(test::serialize_all(trace) == test::serialize_all(run(s, platform, matrix, p2, config)));
}

} // namespace

TEST_CASE("controller invariants on random scenarios") {
    const auto platform = test::default_platform();
    for (std::uint64_t seed = 1000; seed < 1200; ++seed) {
        CAPTURE(seed);
        check_twill_properties(test::random_scenario(seed), platform, SimConfig{});
    }
}

TEST_CASE("controller invariants with zero overheads and a crowded arrival window") {
    SimConfig config;
    config.migration_overhead_ms = 0.0;
    config.freeze_overhead_ms = 0.0;
    auto platform = test::default_platform();
    platform.control_cycle_overhead_ms = 0.0;
    test::RandomScenarioOptions o;
    o.min_requests = 4;
    o.max_requests = 8;
    o.max_arrival_ms = 100.0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        CAPTURE(seed);
        check_twill_properties(test::random_scenario(seed, o), platform, config);
    }
}

TEST_CASE("controller invariants on a three-level platform with a tight budget") {
    const auto platform = test::tiny_platform({400.0, 800.0, 1200.0}, 9000.0);
    test::RandomScenarioOptions o;
    o.max_requests = 4;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        CAPTURE(seed);
        check_twill_properties(test::random_scenario(seed, o), platform, SimConfig{});
    }
}
