#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "support/checks.hpp"
#include "support/fixtures.hpp"
#include "support/random_scenarios.hpp"
#include "twill/baselines.hpp"
#include "twill/controller.hpp"
#include "twill/error.hpp"

using namespace twill;

namespace {

const std::vector<PolicyKind> kBaselines{PolicyKind::GPU_QUEUE, PolicyKind::STATIC_AT_ARRIVAL_DVFS,
                                         PolicyKind::STATIC_SUBGRAPH_NO_DVFS};

WorkloadScenario mix(const std::string& name) {
    return load_mix_file(test::data_dir() + "/mixes/" + name + ".json", test::models());
}

Trace run_kind(PolicyKind kind, const WorkloadScenario& s, PolicyOptions options = {}) {
    auto p = make_policy(kind, options);
    return run(s, test::default_platform(), test::default_matrix(), *p);
}

double work_on(const Trace& t, const std::string& request_prefix, const std::string& cluster) {
    double w = 0.0;
    for (const auto& s : t.segments)
        if (s.task_id.rfind(request_prefix, 0) == 0 && s.cluster == cluster)
            w += s.work;
    return w;
}

} // namespace

TEST_CASE("policy names round-trip") {
    for (auto k : all_policy_kinds()) {
        CHECK(policy_kind_from_string(cli_name(k)) == k);
        CHECK(policy_kind_from_string(to_string(k)) == k);
        CHECK(make_policy(k)->kind() == k);
    }
    CHECK_THROWS_AS(policy_kind_from_string("round_robin"), ValidationError);
}

TEST_CASE("baselines satisfy the shared engine invariants on random scenarios") {
    for (auto kind : kBaselines) {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            CAPTURE(cli_name(kind));
            CAPTURE(seed);
            const auto s = test::random_scenario(seed);
            const auto trace = run_kind(kind, s);
            CHECK(test::check_all_complete(s, trace).empty());
            CHECK(test::check_occupancy(trace).empty());
            CHECK(test::check_work_conservation(trace).empty());
            CHECK(test::check_request_times(trace).empty());
            for (const auto& d : trace.decisions) {
                CHECK(d.action != Action::MIGRATE);
                CHECK(d.action != Action::FREEZE);
                CHECK(d.action != Action::UNFREEZE);
            }
        }
    }
}

TEST_CASE("gpu_queue never uses the DLA and runs requests one at a time in arrival order") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        CAPTURE(seed);
        const auto s = test::random_scenario(seed);
        const auto trace = run_kind(PolicyKind::GPU_QUEUE, s);
        for (const auto& d : trace.decisions)
            CHECK(d.target == "gpu0");
        auto reqs = trace.requests;
        std::sort(reqs.begin(), reqs.end(), [](const auto& a, const auto& b) { return a.start_ms < b.start_ms; });
        for (std::size_t i = 1; i < reqs.size(); ++i) {
            CHECK(reqs[i].start_ms >= reqs[i - 1].completion_ms - 1e-9);
            CHECK(reqs[i].arrival_ms >= reqs[i - 1].arrival_ms);
        }
    }
}

TEST_CASE("gpu_queue on mix2 matches a hand-computed FIFO timeline") {
    const auto s = mix("mix2");
    const auto trace = run_kind(PolicyKind::GPU_QUEUE, s);
    // The GPU alone fits the budget at its top level: 2346 GFLOP/s.
    const double rate = 2.0 * 1173.0 / 1000.0;
    double free_at = 0.0;
    for (const auto* id : {"vgg-19", "vit-base", "resnet-152"}) {
        CAPTURE(id);
        const auto& r = *s.find(id);
        const double start = std::max(r.arrival_ms, free_at);
        free_at = start + r.app->total_work_gflop() / rate;
        CHECK(trace.request(id)->start_ms == doctest::Approx(start));
        CHECK(trace.request(id)->completion_ms == doctest::Approx(free_at));
    }
    CHECK(trace.summarize().violation_fraction == 0.0);
}

TEST_CASE("gpu_queue makes the second mix1 request wait for the first") {
    const auto trace = run_kind(PolicyKind::GPU_QUEUE, mix("mix1"));
    const auto* bert = trace.request("bert-base");
    const auto* eff = trace.request("efficientnet-b4");
    CHECK(eff->start_ms == doctest::Approx(bert->completion_ms));
    CHECK(eff->waiting_ms() > 0.0);
}

TEST_CASE("static_dvfs keeps its arrival placement and drives the GPU to the top level") {
    const auto trace = run_kind(PolicyKind::STATIC_AT_ARRIVAL_DVFS, mix("mix1"));
    // EfficientNet arrives while Bert holds the GPU and stays on the DLA.
    CHECK(work_on(trace, "efficientnet-b4", "gpu0") == 0.0);
    CHECK(work_on(trace, "efficientnet-b4", "dla0") > 0.0);
    CHECK(trace.request("efficientnet-b4")->waiting_ms() == 0.0);
    for (const auto& d : trace.decisions)
        if (d.action == Action::SET_FREQ)
            CHECK(d.level == std::optional<std::size_t>{7});
    CHECK(trace.summarize().violation_fraction > 0.0);
}

TEST_CASE("static_dvfs queues a GPU-only model instead of sending it to the DLA") {
    const auto s = test::scenario("q", {test::request("a", test::shipped_app("bert-base"), 0.0),
                                        test::request("b", test::shipped_app("vit-base", 4.0), 5.0)});
    const auto trace = run_kind(PolicyKind::STATIC_AT_ARRIVAL_DVFS, s);
    CHECK(work_on(trace, "b", "dla0") == 0.0);
    CHECK(trace.request("b")->start_ms == doctest::Approx(trace.request("a")->completion_ms));
}

TEST_CASE("static_subgraph pins one GPU level and splits requests by subgraph") {
    const auto s = mix("mix5");
    const auto trace = run_kind(PolicyKind::STATIC_SUBGRAPH_NO_DVFS, s);
    std::size_t set_freq = 0;
    for (const auto& d : trace.decisions)
        if (d.action == Action::SET_FREQ) {
            ++set_freq;
            CHECK(d.level == std::optional<std::size_t>{4});
            CHECK(d.time_ms == 0.0);
        }
    CHECK(set_freq == 1);
    // Transformer work is mostly GPU-only.
    const double bert_gpu = work_on(trace, "bert-base", "gpu0");
    const double bert_dla = work_on(trace, "bert-base", "dla0");
    CHECK(bert_gpu > bert_dla);
    // GPU stages never run on the DLA.
    for (const auto& seg : trace.segments)
        if (seg.task_id.find("/gpu") != std::string::npos)
            CHECK(seg.cluster == "gpu0");
    CHECK(trace.summarize().violation_fraction == 0.0);
    CHECK(test::check_all_complete(s, trace).empty());
}

TEST_CASE("static_subgraph stages run back to back") {
    const auto s = test::scenario("one", {test::request("r", test::shipped_app("bert-base"), 0.0)});
    const auto trace = run_kind(PolicyKind::STATIC_SUBGRAPH_NO_DVFS, s);
    double dla_end = 0.0, gpu_start = 1e18;
    for (const auto& seg : trace.segments) {
        if (seg.task_id == "r/dla")
            dla_end = std::max(dla_end, seg.t1);
        if (seg.task_id == "r/gpu")
            gpu_start = std::min(gpu_start, seg.t0);
    }
    CHECK(gpu_start == doctest::Approx(dla_end));
    REQUIRE(trace.requests.size() == 1);
    CHECK(trace.requests[0].start_ms == 0.0);
}

TEST_CASE("static_subgraph honours an explicit pinned level") {
    PolicyOptions o;
    o.static_subgraph_level = 2;
    const auto trace = run_kind(PolicyKind::STATIC_SUBGRAPH_NO_DVFS, mix("mix1"), o);
    REQUIRE_FALSE(trace.decisions.empty());
    CHECK(trace.decisions.front().action == Action::SET_FREQ);
    CHECK(trace.decisions.front().freq_mhz == 554.0);
    o.static_subgraph_level = 99;
    const auto clamped = run_kind(PolicyKind::STATIC_SUBGRAPH_NO_DVFS, mix("mix1"), o);
    CHECK(clamped.decisions.front().freq_mhz == 1173.0);
}

TEST_CASE("a lone GPU request costs Twill exactly one control cycle more than gpu_queue") {
    const auto s = test::scenario("one", {test::request("bert", test::shipped_app("bert-base"), 10.0)});
    const auto q = run_kind(PolicyKind::GPU_QUEUE, s);
    const auto t = run_kind(PolicyKind::TWILL, s);
    CHECK(t.request("bert")->latency_ms() ==
          doctest::Approx(q.request("bert")->latency_ms() + test::default_platform().control_cycle_overhead_ms));
}
