#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace twill {

enum class ClusterKind { GPU, DLA };

std::string_view to_string(ClusterKind kind);
ClusterKind cluster_kind_from_string(std::string_view text);

struct ClusterSpec {
    std::string id;
    ClusterKind kind{ClusterKind::GPU};
    std::vector<double> freq_levels_mhz;
    std::vector<double> throughput_gflops; // effective compute rate per level
    double idle_power_mw{0.0};
    double active_power_slope_mw_per_mhz{0.0};

    [[nodiscard]] std::size_t num_levels() const { return freq_levels_mhz.size(); }
    [[nodiscard]] std::size_t max_level() const { return freq_levels_mhz.size() - 1; }
    [[nodiscard]] bool has_dvfs() const { return kind == ClusterKind::GPU; }

    bool operator==(const ClusterSpec&) const = default;
};

struct PlatformSpec {
    std::vector<ClusterSpec> clusters;
    double tdp_mw{10000.0};
    double base_power_mw{3000.0};
    double control_cycle_overhead_ms{15.0};

    [[nodiscard]] std::optional<std::size_t> find_cluster(std::string_view id) const;
    // Index of the first cluster of the given kind, in declaration order.
    [[nodiscard]] std::optional<std::size_t> first_of_kind(ClusterKind kind) const;

    bool operator==(const PlatformSpec&) const = default;
};

// Running state of one cluster. `occupant` holds a task id; at most one model
// runs on a cluster at a time.
struct ClusterState {
    const ClusterSpec* spec{nullptr};
    std::size_t current_level{0};
    std::optional<std::string> occupant;
    bool busy{false};

    [[nodiscard]] double frequency_mhz() const { return spec->freq_levels_mhz[current_level]; }
    [[nodiscard]] double throughput_gflops() const { return spec->throughput_gflops[current_level]; }
};

// Throws ValidationError naming the offending field.
void validate(const ClusterSpec& spec);
void validate(const PlatformSpec& spec);

// Parses a JSON platform description. Throws ParseError on malformed text and
// ValidationError on invariant violations.
PlatformSpec load_platform(std::string_view config_text);
PlatformSpec load_platform_file(const std::string& path);
std::string serialize_platform(const PlatformSpec& spec);

// Fresh per-cluster states, every cluster at its lowest level and unoccupied.
std::vector<ClusterState> initial_states(const PlatformSpec& platform);

// Throws DvfsUnsupported for a DLA target and LevelOutOfRange for a bad index.
ClusterState set_frequency(const ClusterState& state, std::size_t level);

// Affine power model: base + sum(idle + util * slope * freq).
double power_draw(const PlatformSpec& platform, std::span<const ClusterState> states,
                  std::span<const double> utilization);

} // namespace twill
