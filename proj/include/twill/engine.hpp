#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "twill/decision.hpp"
#include "twill/interpreter.hpp"
#include "twill/platform.hpp"
#include "twill/policy.hpp"
#include "twill/trace.hpp"
#include "twill/workload.hpp"

namespace twill {

struct SimConfig {
    double fallback_penalty_factor{8.0};
    double migration_overhead_ms{30.0};
    double freeze_overhead_ms{10.0};
    double power_sample_period_ms{10.0};
    double affinity_threshold{kDefaultAffinityThreshold};
    // Decide cycles allowed at a single timestamp before the run is declared stuck.
    std::size_t max_cycles_per_instant{10000};
};

// Work is tracked in GFLOP, time in ms.
struct RunningTask {
    std::string task_id;
    RequestId request_id;
    std::shared_ptr<const AppProfile> app;
    std::shared_ptr<const SignatureMap> signature;
    int priority{0};
    double dla_fraction{0.0};
    double total_work{0.0};
    double progress{0.0};
    // Migration split points within one pass (ascending, ends at pass_work).
    std::shared_ptr<const std::vector<double>> pass_boundaries;
    double pass_work{0.0};

    std::optional<std::size_t> cluster;
    bool frozen{false};
    bool started{false};
    bool completed{false};
    std::optional<std::size_t> frozen_from;

    double stall_ms{0.0};          // overhead still to be paid before progress resumes
    double pending_resume_ms{0.0}; // freeze overhead carried until the task runs again
    double freeze_started_ms{0.0};
    double frozen_ms{0.0};
    double start_ms{0.0};
    double completion_ms{0.0};
    double recomputed_work{0.0};

    [[nodiscard]] double remaining() const { return total_work - progress; }
    // Largest split point <= `work`; 0 when none.
    [[nodiscard]] double boundary_at_or_below(double work) const;
    [[nodiscard]] bool running() const { return cluster.has_value() && !frozen && !completed; }
    [[nodiscard]] bool waiting() const { return !cluster && !completed; }
};

// Effective GFLOP/s of a task with the given DLA-feasible fraction on a cluster.
double exec_rate(double dla_fraction, const ClusterState& cluster, double fallback_penalty_factor);
double exec_rate(const SignatureMap& signature, const ClusterState& cluster, double fallback_penalty_factor);

// Cumulative GFLOP at each layer end within one pass, scaled by `work_fraction`.
std::vector<double> pass_boundaries(const AppProfile& app, double work_fraction);

class Simulation {
  public:
    Simulation(PlatformSpec platform, CompatibilityMatrix matrix, SimConfig config = {});
    // Cluster states point into the owned platform.
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    // Attaches a scenario and policy; arrivals at t=0 are not yet released.
    void load(WorkloadScenario scenario, Policy& policy);

    // Runs to completion. Throws DeadlockError when requests can never be released.
    Trace run();

    // Advances virtual time to the next arrival, completion or power tick and
    // returns the events that fired there (completions then arrivals).
    std::vector<ControllerEvent> step();

    // Hands events to the policy and deploys every decision batch, including
    // the cascade of CLUSTER_FREED events the batches cause.
    void dispatch(std::vector<ControllerEvent> events);

    // Releases a request outside of any scenario timing (unit-test entry point).
    ControllerEvent release(const InferenceRequest& request);

    // Single decision, no control overhead.
    void apply_decision(const Decision& decision);

    // Applies a batch atomically at the current time. MAP/MIGRATE/UNFREEZE
    // subjects are charged `control_overhead_ms`. Returns clusters that were
    // occupied before and are free after.
    std::vector<std::size_t> deploy(const std::vector<Decision>& decisions, double control_overhead_ms,
                                    EventKind trigger = EventKind::ARRIVAL);

    // Integrates progress up to `t_ms` without processing events.
    void advance_to(double t_ms);

    // ---- world view for policies ----
    [[nodiscard]] double now() const { return now_; }
    [[nodiscard]] const PlatformSpec& platform() const { return platform_; }
    [[nodiscard]] const CompatibilityMatrix& matrix() const { return matrix_; }
    [[nodiscard]] const SimConfig& config() const { return config_; }
    [[nodiscard]] const std::vector<ClusterState>& clusters() const { return clusters_; }
    [[nodiscard]] const std::map<std::string, RunningTask>& tasks() const { return tasks_; }
    [[nodiscard]] const RunningTask* task(const std::string& id) const;
    [[nodiscard]] bool cluster_free(std::size_t cluster) const;
    [[nodiscard]] std::optional<std::size_t> gpu() const { return platform_.first_of_kind(ClusterKind::GPU); }
    [[nodiscard]] double task_rate(const RunningTask& task, std::size_t cluster) const;
    [[nodiscard]] double current_power() const;
    // Power if `occupied` described cluster occupancy and the GPU ran at `gpu_level`.
    [[nodiscard]] double predicted_power(const std::vector<bool>& occupied, std::size_t gpu_level) const;
    [[nodiscard]] std::vector<bool> occupancy() const;
    [[nodiscard]] bool finished() const;
    [[nodiscard]] std::size_t cycle_count() const { return cycle_; }
    [[nodiscard]] const Trace& trace() const { return trace_; }

  private:
    RunningTask& task_mut(const Decision& d);
    void apply_one(const Decision& d, EventKind trigger);
    void place(RunningTask& t, std::size_t cluster);
    void unplace(RunningTask& t);
    void rollback(RunningTask& t);
    void complete(RunningTask& t);
    void sample_power();
    void log_segment(const RunningTask& t, double t0, double t1, double stall, double work);
    std::vector<ControllerEvent> release_ready();
    [[nodiscard]] std::optional<double> next_completion() const;

    PlatformSpec platform_;
    CompatibilityMatrix matrix_;
    SimConfig config_;
    std::vector<ClusterState> clusters_;
    std::map<std::string, RunningTask> tasks_;
    std::map<RequestId, std::vector<std::string>> request_tasks_;
    std::map<std::string, std::shared_ptr<const SignatureMap>> signatures_;
    std::map<RequestId, double> release_ms_;
    std::map<std::string, std::size_t> last_segment_;

    WorkloadScenario scenario_;
    Policy* policy_{nullptr};
    std::set<RequestId> released_;
    std::set<RequestId> completed_;

    double now_{0.0};
    std::size_t samples_taken_{0};
    std::size_t cycle_{0};
    Trace trace_;
};

// Convenience wrapper: load + run.
Trace run(const WorkloadScenario& scenario, const PlatformSpec& platform, const CompatibilityMatrix& matrix,
          Policy& policy, const SimConfig& config = {});

} // namespace twill
