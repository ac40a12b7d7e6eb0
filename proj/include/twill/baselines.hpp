#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "twill/engine.hpp"
#include "twill/policy.hpp"

namespace twill {

struct PolicyOptions {
    // GPU level the subgraph baseline pins for the whole run, clamped to the
    // table. Unset: the highest level within the TDP with every cluster busy.
    std::optional<std::size_t> static_subgraph_level;
};

// Every request goes to the GPU in arrival order, one at a time. The GPU runs
// at the highest level the budget allows while busy.
class GpuQueuePolicy final : public Policy {
  public:
    [[nodiscard]] PolicyKind kind() const override { return PolicyKind::GPU_QUEUE; }
    std::vector<Decision> decide(const ControllerEvent& event, const Simulation& world) override;

  private:
    std::deque<std::string> fifo_;
};

// Placement fixed at arrival: GPU if free, else DLA when the model's affinity
// set includes it, else wait. The GPU is driven to its top level whenever
// it has work, regardless of the budget.
class StaticArrivalPolicy final : public Policy {
  public:
    [[nodiscard]] PolicyKind kind() const override { return PolicyKind::STATIC_AT_ARRIVAL_DVFS; }
    std::vector<Decision> decide(const ControllerEvent& event, const Simulation& world) override;

  private:
    std::deque<std::string> fifo_;
};

// Each request is split into a DLA stage (the DLA-feasible subgraphs) and a
// GPU stage (the rest), run back to back. The DLA stage takes the DLA if it is
// free at arrival and otherwise joins the GPU queue. The GPU level is pinned.
class StaticSubgraphPolicy final : public Policy {
  public:
    explicit StaticSubgraphPolicy(std::optional<std::size_t> pinned_level = std::nullopt)
        : pinned_level_(pinned_level) {}

    [[nodiscard]] PolicyKind kind() const override { return PolicyKind::STATIC_SUBGRAPH_NO_DVFS; }
    std::vector<TaskPlan> plan_tasks(const InferenceRequest& request, const SignatureMap& signature,
                                     const Simulation& world) override;
    std::vector<Decision> decide(const ControllerEvent& event, const Simulation& world) override;

    static constexpr const char* kDlaSuffix = "/dla";
    static constexpr const char* kGpuSuffix = "/gpu";

  private:
    std::optional<std::size_t> pinned_level_;
    bool pinned_{false};
    std::map<std::string, std::vector<std::string>> stages_; // request -> task ids in order
    std::map<std::string, std::size_t> next_stage_;          // request -> index of first unqueued stage
    std::deque<std::string> gpu_fifo_;
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyOptions& options = {});

} // namespace twill
