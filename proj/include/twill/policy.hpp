#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "twill/decision.hpp"
#include "twill/interpreter.hpp"
#include "twill/platform.hpp"
#include "twill/workload.hpp"

namespace twill {

class Simulation;

enum class PolicyKind { TWILL, GPU_QUEUE, STATIC_AT_ARRIVAL_DVFS, STATIC_SUBGRAPH_NO_DVFS };

std::string_view to_string(PolicyKind k);
// Accepts the CLI names: twill, gpu_queue, static_dvfs, static_subgraph.
PolicyKind policy_kind_from_string(std::string_view text);
std::string_view cli_name(PolicyKind k);
std::vector<PolicyKind> all_policy_kinds();

// How a released request is turned into engine tasks. The default is one task
// carrying the whole request.
struct TaskPlan {
    std::string suffix;        // appended to the request id to form the task id
    double work_fraction{1.0}; // share of the request's total work
    double dla_fraction{-1.0}; // rate model override; < 0 means "use the signature"
};

// A scheduling policy is a synchronous state machine driven by the engine.
// Swapping policies changes no engine code path.
class Policy {
  public:
    virtual ~Policy() = default;

    [[nodiscard]] virtual PolicyKind kind() const = 0;
    [[nodiscard]] virtual double control_overhead_ms(const PlatformSpec&) const { return 0.0; }

    virtual std::vector<TaskPlan> plan_tasks(const InferenceRequest&, const SignatureMap&, const Simulation&) {
        return {TaskPlan{}};
    }

    virtual std::vector<Decision> decide(const ControllerEvent& event, const Simulation& world) = 0;

    // Called after a decision batch was applied.
    virtual void on_deployed(const std::vector<Decision>&, const Simulation&) {}
};

} // namespace twill
