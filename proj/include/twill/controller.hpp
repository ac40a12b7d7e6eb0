#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "twill/engine.hpp"
#include "twill/policy.hpp"

namespace twill {

struct FreezeEntry {
    std::string task_id;
    int priority{0};
    double enqueue_ms{0.0};
    std::uint64_t seq{0};
};

// Suspended or deferred tasks waiting for a cluster. Dequeue order is highest
// priority first, then earliest enqueue, then lowest task id.
class FreezeQueue {
  public:
    void push(std::string task_id, int priority, double now_ms);
    bool remove(const std::string& task_id);
    [[nodiscard]] bool contains(const std::string& task_id) const;
    [[nodiscard]] std::optional<FreezeEntry> best(const std::function<bool(const FreezeEntry&)>& eligible) const;
    [[nodiscard]] std::vector<FreezeEntry> ordered() const;
    [[nodiscard]] std::size_t size() const { return entries_.size(); }
    [[nodiscard]] bool empty() const { return entries_.empty(); }

    static bool before(const FreezeEntry& a, const FreezeEntry& b);

  private:
    std::vector<FreezeEntry> entries_;
    std::uint64_t next_seq_{0};
};

struct PowerReading {
    double power_mw{0.0};
    double gpu_freq_mhz{0.0};
};

// Linear-model governor. `before` is the reading kept from the previous
// control cycle, `after` the state once the new mapping is in effect.
// Returns a GPU level index.
std::size_t dvfs_update(std::optional<PowerReading> before, PowerReading after, double budget_mw,
                        const ClusterState& gpu, bool gpu_busy, std::size_t handled_apps = 1);

// Cluster indices in the order of the signature's preferred kinds.
std::vector<std::size_t> preferred_indices(const PlatformSpec& platform, const SignatureMap& signature);

// Highest GPU level whose modeled power with `occupied` stays within the budget.
std::size_t budget_level(const Simulation& world, const std::vector<bool>& occupied);

class TwillPolicy final : public Policy {
  public:
    [[nodiscard]] PolicyKind kind() const override { return PolicyKind::TWILL; }
    [[nodiscard]] double control_overhead_ms(const PlatformSpec& platform) const override {
        return platform.control_cycle_overhead_ms;
    }

    std::vector<Decision> decide(const ControllerEvent& event, const Simulation& world) override;
    void on_deployed(const std::vector<Decision>& decisions, const Simulation& world) override;

    [[nodiscard]] const FreezeQueue& freeze_queue() const { return queue_; }

  private:
    void on_arrival(const RunningTask& task, const Simulation& world, std::vector<Decision>& out);
    void on_freed(std::size_t cluster, const Simulation& world, std::vector<Decision>& out);
    void govern(const Simulation& world, std::vector<Decision>& out) const;

    FreezeQueue queue_;
    std::optional<PowerReading> last_reading_;
};

} // namespace twill
