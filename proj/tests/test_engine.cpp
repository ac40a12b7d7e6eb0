#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <deque>
#include <map>

#include "support/checks.hpp"
#include "support/fixtures.hpp"
#include "twill/controller.hpp"
#include "twill/engine.hpp"
#include "twill/error.hpp"

using namespace twill;

namespace {

constexpr std::size_t kGpu = 0;
constexpr std::size_t kDla = 1;

// Replays fixed decision batches keyed by "KIND:payload"; each batch fires once.
class ScriptedPolicy final : public Policy {
  public:
    std::map<std::string, std::deque<std::vector<Decision>>> script;

    void on(const std::string& key, std::vector<Decision> batch) { script[key].push_back(std::move(batch)); }

    [[nodiscard]] PolicyKind kind() const override { return PolicyKind::GPU_QUEUE; }
    std::vector<Decision> decide(const ControllerEvent& e, const Simulation&) override {
        auto it = script.find(std::string(to_string(e.kind)) + ":" + e.payload);
        if (it == script.end() || it->second.empty())
            return {};
        auto batch = std::move(it->second.front());
        it->second.pop_front();
        return batch;
    }
};

// Default overheads, spelled out because the oracles below depend on them.
SimConfig plain_config() {
    SimConfig c;
    c.migration_overhead_ms = 30.0;
    c.freeze_overhead_ms = 10.0;
    return c;
}

Trace run_scripted(const WorkloadScenario& s, ScriptedPolicy& p, const PlatformSpec& platform,
                   SimConfig config = plain_config()) {
    return run(s, platform, test::default_matrix(), p, config);
}

} // namespace

TEST_CASE("a single task completes at release plus work over rate") {
    // 500 MHz -> 1000 GFLOP/s -> 1 GFLOP per ms.
    const auto platform = test::tiny_platform({500.0, 1000.0});
    const auto app = test::synthetic_app("m", 100.0, 0.0, 1);
    const auto s = test::scenario("one", {test::request("a", app, 5.0)});
    ScriptedPolicy p;
    p.on("ARRIVAL:a", {Decision::map("a", kGpu)});
    const auto trace = run_scripted(s, p, platform);
    REQUIRE(trace.requests.size() == 1);
    CHECK(trace.requests[0].arrival_ms == 5.0);
    CHECK(trace.requests[0].start_ms == 5.0);
    CHECK(trace.requests[0].completion_ms == doctest::Approx(105.0));
    CHECK(trace.summarize().makespan_ms == doctest::Approx(100.0));
    CHECK(test::check_work_conservation(trace).empty());
}

TEST_CASE("a frequency change splits progress into two linear segments") {
    const auto platform = test::tiny_platform({500.0, 1000.0});
    const auto app = test::synthetic_app("m", 100.0, 0.0, 1);
    Simulation sim(platform, test::default_matrix(), plain_config());
    sim.release(test::request("a", app, 0.0));
    sim.apply_decision(Decision::map("a", kGpu));
    sim.advance_to(40.0);
    CHECK(sim.task("a")->progress == doctest::Approx(40.0));
    sim.apply_decision(Decision::set_freq("gpu0", kGpu, 1));
    sim.advance_to(70.0);
    // 40 GFLOP at 1/ms, then 60 GFLOP at 2/ms.
    CHECK(sim.task("a")->progress == doctest::Approx(100.0));

    // Same thing end to end: a second request triggers the change at t=40.
    const auto tick = test::synthetic_app("tick", 1.0, 1.0, 1);
    const auto s = test::scenario("two", {test::request("a", app, 0.0), test::request("t", tick, 40.0)});
    ScriptedPolicy p;
    p.on("ARRIVAL:a", {Decision::map("a", kGpu)});
    p.on("ARRIVAL:t", {Decision::map("t", kDla), Decision::set_freq("gpu0", kGpu, 1)});
    const auto trace = run_scripted(s, p, platform);
    CHECK(trace.request("a")->completion_ms == doctest::Approx(70.0));
}

TEST_CASE("an empty scenario finishes at time zero") {
    ScriptedPolicy p;
    const auto trace = run_scripted(test::scenario("empty", {}), p, test::default_platform());
    CHECK(trace.requests.empty());
    CHECK(trace.decisions.empty());
    CHECK(trace.summarize().makespan_ms == 0.0);
}

TEST_CASE("freeze and unfreeze delay completion by the frozen interval plus both overheads") {
    const auto platform = test::tiny_platform({500.0, 1000.0});
    const auto low = test::synthetic_app("low", 100.0, 0.0, 1);
    const auto high = test::synthetic_app("high", 20.0, 0.0, 2);
    const auto s = test::scenario("fz", {test::request("a", low, 0.0), test::request("b", high, 30.0)});
    ScriptedPolicy p;
    p.on("ARRIVAL:a", {Decision::map("a", kGpu)});
    p.on("ARRIVAL:b", {Decision::freeze("a", kGpu), Decision::map("b", kGpu)});
    p.on("CLUSTER_FREED:gpu0", {Decision::unfreeze("a", kGpu)});
    const auto trace = run_scripted(s, p, platform);

    CHECK(trace.request("b")->completion_ms == doctest::Approx(50.0));
    const auto* a = trace.request("a");
    // Frozen from 30 to 50, then 10 ms to save and 10 ms to restore.
    CHECK(a->completion_ms == doctest::Approx(100.0 + 20.0 + 2 * 10.0));
    CHECK(a->frozen_ms == doctest::Approx(20.0));
    CHECK(test::check_occupancy(trace).empty());
    CHECK(test::check_work_conservation(trace).empty());
    CHECK(test::check_preemption(trace).empty());
}

TEST_CASE("migration resumes from the last layer boundary after the migration overhead") {
    const auto platform = test::tiny_platform({500.0, 1000.0});
    // Ten equal Conv layers of 10 GFLOP, one pass.
    const auto app = test::synthetic_app("convs", 100.0, 1.0, 1);
    const auto tick = test::synthetic_app("tick", 1.0, 0.0, 1);
    const double dla_per_ms = 938.4 / 1000.0;

    for (double at : {60.0, 65.0}) {
        CAPTURE(at);
        const auto s = test::scenario("mg", {test::request("a", app, 0.0), test::request("t", tick, at)});
        ScriptedPolicy p;
        p.on("ARRIVAL:a", {Decision::map("a", kGpu)});
        p.on("ARRIVAL:t", {Decision::migrate("a", kGpu, kDla), Decision::map("t", kGpu)});
        const auto trace = run_scripted(s, p, platform);
        // Progress rolls back to 60 GFLOP in both cases.
        CHECK(trace.request("a")->completion_ms == doctest::Approx(at + 30.0 + 40.0 / dla_per_ms));
        CHECK(test::check_work_conservation(trace).empty());
        REQUIRE(trace.tasks.size() == 2);
        for (const auto& t : trace.tasks)
            if (t.task_id == "a")
                CHECK(t.recomputed_work == doctest::Approx(at - 60.0).epsilon(1e-9));
    }
}

TEST_CASE("layer boundaries repeat across passes") {
    const auto platform = test::tiny_platform({500.0});
    auto app = std::make_shared<AppProfile>(*test::synthetic_app("convs", 10.0, 1.0, 1, 4));
    app->workload_size = 3.0;
    Simulation sim(platform, test::default_matrix());
    sim.release(test::request("a", app, 0.0));
    const auto* t = sim.task("a");
    REQUIRE(t != nullptr);
    CHECK(t->total_work == doctest::Approx(30.0));
    CHECK(t->pass_work == doctest::Approx(10.0));
    CHECK(t->boundary_at_or_below(0.0) == 0.0);
    CHECK(t->boundary_at_or_below(2.4) == 0.0);
    CHECK(t->boundary_at_or_below(2.5) == doctest::Approx(2.5));
    CHECK(t->boundary_at_or_below(13.0) == doctest::Approx(12.5));
    CHECK(t->boundary_at_or_below(29.9) == doctest::Approx(27.5));
}

TEST_CASE("illegal decisions are rejected and leave the state untouched") {
    const auto platform = test::default_platform();
    const auto app = test::synthetic_app("m", 10.0, 0.0, 1);
    Simulation sim(platform, test::default_matrix());
    sim.release(test::request("a", app, 0.0));
    sim.release(test::request("b", app, 0.0));
    sim.apply_decision(Decision::map("a", kGpu));

    CHECK_THROWS_AS(sim.apply_decision(Decision::map("b", kGpu)), IllegalDecision);
    CHECK_THROWS_AS(sim.apply_decision(Decision::map("zz", kDla)), IllegalDecision);
    CHECK_THROWS_AS(sim.apply_decision(Decision::set_freq("dla0", kDla, 0)), IllegalDecision);
    CHECK_THROWS_AS(sim.apply_decision(Decision::set_freq("gpu0", kGpu, 99)), IllegalDecision);
    CHECK_THROWS_AS(sim.apply_decision(Decision::migrate("b", kDla, kGpu)), IllegalDecision);
    CHECK_THROWS_AS(sim.apply_decision(Decision::unfreeze("b", kDla)), IllegalDecision);

    // A failing batch is applied all or nothing.
    CHECK_THROWS_AS(sim.deploy({Decision::map("b", kDla), Decision::map("a", kDla)}, 0.0), IllegalDecision);
    CHECK(sim.cluster_free(kDla));
    CHECK_FALSE(sim.task("b")->cluster.has_value());
    CHECK(sim.trace().decisions.size() == 1);
}

TEST_CASE("decisions about completed tasks are rejected") {
    const auto platform = test::tiny_platform({500.0});
    const auto app = test::synthetic_app("m", 10.0, 0.0, 1);
    const auto s = test::scenario("done", {test::request("a", app, 0.0)});
    ScriptedPolicy p;
    p.on("ARRIVAL:a", {Decision::map("a", kGpu)});
    Simulation sim(platform, test::default_matrix());
    sim.load(s, p);
    sim.run();
    CHECK_THROWS_AS(sim.apply_decision(Decision::map("a", kGpu)), IllegalDecision);
    CHECK_THROWS_AS(sim.apply_decision(Decision::freeze("a")), IllegalDecision);
}

TEST_CASE("execution rate on each cluster kind") {
    const auto platform = test::default_platform();
    auto states = initial_states(platform);
    CHECK(exec_rate(1.0, states[kDla], 8.0) == doctest::Approx(938.4));
    CHECK(exec_rate(0.0, states[kDla], 8.0) == doctest::Approx(938.4 / 8.0));
    CHECK(exec_rate(0.5, states[kDla], 8.0) == doctest::Approx(938.4 / 4.5));
    CHECK(exec_rate(0.3, states[kGpu], 8.0) == doctest::Approx(2.0 * 306.0));

    const auto bert = layer_affinity(test::shipped_app("bert-base"), test::default_matrix());
    for (std::size_t l = 0; l < platform.clusters[kGpu].num_levels(); ++l) {
        states[kGpu] = set_frequency(states[kGpu], l);
        CHECK(exec_rate(bert, states[kDla], 8.0) < exec_rate(bert, states[kGpu], 8.0));
    }
}

TEST_CASE("power is sampled on a fixed grid and flagged against the budget") {
    const auto platform = test::default_platform();
    const auto app = test::synthetic_app("m", 100.0, 1.0, 1);
    const auto s = test::scenario("pw", {test::request("a", app, 0.0), test::request("b", app, 0.0)});
    ScriptedPolicy p;
    p.on("ARRIVAL:a", {Decision::map("a", kGpu), Decision::set_freq("gpu0", kGpu, 7)});
    p.on("ARRIVAL:b", {Decision::map("b", kDla)});
    const auto trace = run_scripted(s, p, platform);
    REQUIRE(trace.power.size() > 3);
    for (std::size_t i = 0; i < trace.power.size(); ++i) {
        CHECK(trace.power[i].time_ms == doctest::Approx(10.0 * static_cast<double>(i)));
        CHECK(trace.power[i].violation == (trace.power[i].power_mw > platform.tdp_mw));
    }
    // Both busy with the GPU at 1173 MHz.
    CHECK(trace.power[1].power_mw == doctest::Approx(11245.6));
    CHECK(trace.power[1].violation);
}

TEST_CASE("a policy that never places work is reported as a deadlock") {
    const auto app = test::synthetic_app("m", 10.0, 0.0, 1);
    ScriptedPolicy p;
    CHECK_THROWS_AS(run_scripted(test::scenario("stuck", {test::request("a", app, 0.0)}), p,
                                 test::default_platform()),
                    DeadlockError);
}

TEST_CASE("dependent requests are released when their inputs complete") {
    const auto platform = test::tiny_platform({500.0});
    const auto app = test::synthetic_app("m", 10.0, 0.0, 1);
    const auto s = test::scenario("dep", {test::request("a", app, 0.0), test::request("b", app, 0.0, {"a"})});
    ScriptedPolicy p;
    p.on("ARRIVAL:a", {Decision::map("a", kGpu)});
    p.on("ARRIVAL:b", {Decision::map("b", kGpu)});
    const auto trace = run_scripted(s, p, platform);
    CHECK(trace.request("b")->arrival_ms == doctest::Approx(10.0));
    CHECK(trace.request("b")->completion_ms == doctest::Approx(20.0));
}

TEST_CASE("runs are deterministic") {
    const auto s = load_mix_file(test::data_dir() + "/mixes/mix3.json", test::models());
    TwillPolicy p1, p2;
    const auto a = run(s, test::default_platform(), test::default_matrix(), p1);
    const auto b = run(s, test::default_platform(), test::default_matrix(), p2);
    CHECK(test::serialize_all(a) == test::serialize_all(b));
}
