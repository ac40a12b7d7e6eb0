#include "twill/platform.hpp"

#include <algorithm>
#include <set>

#include "json_util.hpp"

namespace twill {

using detail::json;

std::string_view to_string(ClusterKind kind) {
    return kind == ClusterKind::GPU ? "GPU" : "DLA";
}

ClusterKind cluster_kind_from_string(std::string_view text) {
    if (text == "GPU")
        return ClusterKind::GPU;
    if (text == "DLA")
        return ClusterKind::DLA;
    throw ValidationError("unknown cluster kind '" + std::string(text) + "'");
}

std::optional<std::size_t> PlatformSpec::find_cluster(std::string_view id) const {
    for (std::size_t i = 0; i < clusters.size(); ++i)
        if (clusters[i].id == id)
            return i;
    return std::nullopt;
}

std::optional<std::size_t> PlatformSpec::first_of_kind(ClusterKind kind) const {
    for (std::size_t i = 0; i < clusters.size(); ++i)
        if (clusters[i].kind == kind)
            return i;
    return std::nullopt;
}

void validate(const ClusterSpec& spec) {
    const std::string where = "cluster '" + spec.id + "': ";
    if (spec.id.empty())
        throw ValidationError("cluster id must be nonempty");
    if (spec.freq_levels_mhz.empty())
        throw ValidationError(where + "freq_levels_mhz is empty");
    if (spec.throughput_gflops.size() != spec.freq_levels_mhz.size())
        throw ValidationError(where + "throughput_gflops must have the same length as freq_levels_mhz");
    if (!std::is_sorted(spec.freq_levels_mhz.begin(), spec.freq_levels_mhz.end(), std::less_equal<>{}))
        throw ValidationError(where + "freq_levels_mhz must be strictly increasing");
    if (!std::is_sorted(spec.throughput_gflops.begin(), spec.throughput_gflops.end(), std::less_equal<>{}))
        throw ValidationError(where + "throughput_gflops must be strictly increasing");
    if (spec.freq_levels_mhz.front() <= 0.0 || spec.throughput_gflops.front() <= 0.0)
        throw ValidationError(where + "freq_levels_mhz and throughput_gflops must be positive");
    if (spec.kind == ClusterKind::DLA && spec.freq_levels_mhz.size() != 1)
        throw ValidationError(where + "freq_levels_mhz: a DLA cluster has exactly one level (no DVFS)");
    if (spec.idle_power_mw < 0.0)
        throw ValidationError(where + "idle_power_mw must be >= 0");
    if (spec.active_power_slope_mw_per_mhz < 0.0)
        throw ValidationError(where + "active_power_slope_mw_per_mhz must be >= 0");
}

void validate(const PlatformSpec& spec) {
    if (spec.clusters.empty())
        throw ValidationError("no clusters");
    std::set<std::string> ids;
    for (const auto& c : spec.clusters) {
        validate(c);
        if (!ids.insert(c.id).second)
            throw ValidationError("clusters: duplicate cluster id '" + c.id + "'");
    }
    if (!spec.first_of_kind(ClusterKind::GPU))
        throw ValidationError("clusters: platform needs at least one GPU cluster");
    if (!spec.first_of_kind(ClusterKind::DLA))
        throw ValidationError("clusters: platform needs at least one DLA cluster");
    if (spec.base_power_mw < 0.0)
        throw ValidationError("base_power_mw must be >= 0");
    if (!(spec.tdp_mw > spec.base_power_mw))
        throw ValidationError("tdp_mw must exceed base_power_mw");
    if (spec.control_cycle_overhead_ms < 0.0)
        throw ValidationError("control_cycle_overhead_ms must be >= 0");
}

PlatformSpec load_platform(std::string_view config_text) {
    constexpr std::string_view what = "platform";
    const json doc = detail::parse_json(config_text, what);
    PlatformSpec spec;
    spec.tdp_mw = detail::field<double>(doc, "tdp_mw", what);
    spec.base_power_mw = detail::field<double>(doc, "base_power_mw", what);
    spec.control_cycle_overhead_ms = detail::field_or<double>(doc, "control_cycle_overhead_ms", 15.0, what);
    const json& clusters = detail::require(doc, "clusters", what);
    if (!clusters.is_array())
        throw ParseError("platform: 'clusters' must be an array");
    for (const auto& c : clusters) {
        ClusterSpec cs;
        cs.id = detail::field<std::string>(c, "id", what);
        cs.kind = cluster_kind_from_string(detail::field<std::string>(c, "kind", what));
        cs.freq_levels_mhz = detail::field<std::vector<double>>(c, "freq_levels_mhz", what);
        cs.throughput_gflops = detail::field<std::vector<double>>(c, "throughput_gflops", what);
        cs.idle_power_mw = detail::field<double>(c, "idle_power_mw", what);
        cs.active_power_slope_mw_per_mhz = detail::field<double>(c, "active_power_slope_mw_per_mhz", what);
        spec.clusters.push_back(std::move(cs));
    }
    validate(spec);
    return spec;
}

PlatformSpec load_platform_file(const std::string& path) {
    return load_platform(detail::read_file(path));
}

std::string serialize_platform(const PlatformSpec& spec) {
    json doc;
    doc["tdp_mw"] = spec.tdp_mw;
    doc["base_power_mw"] = spec.base_power_mw;
    doc["control_cycle_overhead_ms"] = spec.control_cycle_overhead_ms;
    doc["clusters"] = json::array();
    for (const auto& c : spec.clusters) {
        doc["clusters"].push_back({
            {"id", c.id},
            {"kind", std::string(to_string(c.kind))},
            {"freq_levels_mhz", c.freq_levels_mhz},
            {"throughput_gflops", c.throughput_gflops},
            {"idle_power_mw", c.idle_power_mw},
            {"active_power_slope_mw_per_mhz", c.active_power_slope_mw_per_mhz},
        });
    }
    return doc.dump(2);
}

std::vector<ClusterState> initial_states(const PlatformSpec& platform) {
    std::vector<ClusterState> states;
    states.reserve(platform.clusters.size());
    for (const auto& c : platform.clusters)
        states.push_back(ClusterState{&c, 0, std::nullopt, false});
    return states;
}

ClusterState set_frequency(const ClusterState& state, std::size_t level) {
    if (!state.spec->has_dvfs())
        throw DvfsUnsupported("cluster '" + state.spec->id + "' (DLA) does not support DVFS");
    if (level >= state.spec->num_levels())
        throw LevelOutOfRange("cluster '" + state.spec->id + "': level " + std::to_string(level) +
                              " out of range [0, " + std::to_string(state.spec->max_level()) + "]");
    ClusterState next = state;
    next.current_level = level;
    return next;
}

double power_draw(const PlatformSpec& platform, std::span<const ClusterState> states,
                  std::span<const double> utilization) {
    double total = platform.base_power_mw;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const ClusterSpec& c = *states[i].spec;
        const double u = i < utilization.size() ? utilization[i] : 0.0;
        total += c.idle_power_mw + u * c.active_power_slope_mw_per_mhz * states[i].frequency_mhz();
    }
    return total;
}

} // namespace twill
