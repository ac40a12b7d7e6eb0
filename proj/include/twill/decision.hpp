#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace twill {

enum class Action { MAP, MIGRATE, FREEZE, UNFREEZE, SET_FREQ };
enum class EventKind { ARRIVAL, CLUSTER_FREED, COMPLETION };

std::string_view to_string(Action a);
std::string_view to_string(EventKind k);

// One knob actuation. `subject` is a task id, except for SET_FREQ where it is
// the cluster id. Cluster references are indices into PlatformSpec::clusters.
struct Decision {
    Action action{Action::MAP};
    std::string subject;
    std::optional<std::size_t> source;
    std::optional<std::size_t> target;
    std::optional<std::size_t> level;

    static Decision map(std::string task, std::size_t cluster) {
        return {Action::MAP, std::move(task), std::nullopt, cluster, std::nullopt};
    }
    static Decision migrate(std::string task, std::size_t from, std::size_t to) {
        return {Action::MIGRATE, std::move(task), from, to, std::nullopt};
    }
    static Decision freeze(std::string task, std::optional<std::size_t> from = std::nullopt) {
        return {Action::FREEZE, std::move(task), from, std::nullopt, std::nullopt};
    }
    static Decision unfreeze(std::string task, std::size_t to) {
        return {Action::UNFREEZE, std::move(task), std::nullopt, to, std::nullopt};
    }
    static Decision set_freq(std::string cluster_id, std::size_t cluster, std::size_t level) {
        return {Action::SET_FREQ, std::move(cluster_id), std::nullopt, cluster, level};
    }

    bool operator==(const Decision&) const = default;
};

struct ControllerEvent {
    EventKind kind{EventKind::ARRIVAL};
    double timestamp_ms{0.0};
    std::string payload; // request id (ARRIVAL/COMPLETION) or cluster id (CLUSTER_FREED)
    std::optional<std::size_t> cluster;
};

} // namespace twill
