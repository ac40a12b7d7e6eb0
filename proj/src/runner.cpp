#include "twill/runner.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "twill/error.hpp"

namespace twill {

namespace fs = std::filesystem;

namespace {

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ValidationError(fmt::format("--set {}: bad value '{}'", key, text));
    return value;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ValidationError("cannot write file: " + path.string());
    body(os);
}

} // namespace

void apply_override(RunConfig& c, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ValidationError(fmt::format("--set expects key=value, got '{}'", assignment));
    const auto key = assignment.substr(0, eq);
    const auto value = assignment.substr(eq + 1);

    if (key == "fallback_penalty_factor")
        c.sim.fallback_penalty_factor = parse_value<double>(key, value);
    else if (key == "migration_overhead_ms")
        c.sim.migration_overhead_ms = parse_value<double>(key, value);
    else if (key == "freeze_overhead_ms")
        c.sim.freeze_overhead_ms = parse_value<double>(key, value);
    else if (key == "power_sample_period_ms")
        c.sim.power_sample_period_ms = parse_value<double>(key, value);
    else if (key == "affinity_threshold")
        c.sim.affinity_threshold = parse_value<double>(key, value);
    else if (key == "control_overhead_ms")
        c.control_overhead_ms = parse_value<double>(key, value);
    else if (key == "tdp_mw")
        c.tdp_mw = parse_value<double>(key, value);
    else if (key == "static_subgraph_level")
        c.policy_options.static_subgraph_level = parse_value<std::size_t>(key, value);
    else if (key == "seed")
        c.seed = parse_value<std::uint64_t>(key, value);
    else
        throw ValidationError(fmt::format("--set: unknown key '{}'", key));
}

std::string resolve_mix_path(const RunConfig& config, const std::string& mix) {
    if (fs::exists(mix) && fs::is_regular_file(mix))
        return mix;
    const auto candidate = fs::path(config.data_dir) / "mixes" / (mix + ".json");
    if (fs::exists(candidate))
        return candidate.string();
    // Let the loader report the path the user gave.
    return mix.find('/') != std::string::npos || mix.ends_with(".json") ? mix : candidate.string();
}

PlatformSpec load_run_platform(const RunConfig& config) {
    const auto path =
        config.platform_path.empty() ? (fs::path(config.data_dir) / "platform.json").string() : config.platform_path;
    PlatformSpec p = load_platform_file(path);
    if (config.tdp_mw)
        p.tdp_mw = *config.tdp_mw;
    if (config.control_overhead_ms)
        p.control_cycle_overhead_ms = *config.control_overhead_ms;
    validate(p);
    return p;
}

CompatibilityMatrix load_run_matrix(const RunConfig& config) {
    const auto path =
        config.matrix_path.empty() ? (fs::path(config.data_dir) / "dla_matrix.json").string() : config.matrix_path;
    return load_matrix_file(path);
}

WorkloadScenario load_run_mix(const RunConfig& config, const std::string& mix) {
    ModelRepository models((fs::path(config.data_dir) / "models").string());
    WorkloadScenario s = load_mix_file(resolve_mix_path(config, mix), models);
    if (config.seed)
        s.seed = *config.seed;
    return s;
}

RunResult run_policy(const WorkloadScenario& scenario, const PlatformSpec& platform,
                     const CompatibilityMatrix& matrix, PolicyKind kind, const RunConfig& config) {
    auto policy = make_policy(kind, config.policy_options);
    RunResult r;
    r.trace = run(scenario, platform, matrix, *policy, config.sim);
    r.summary = r.trace.summarize();
    return r;
}

void write_outputs(const std::string& out_dir, const std::string& prefix, const RunResult& result) {
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw ValidationError("cannot create output directory: " + out_dir);
    write_file(dir / (prefix + "_decisions.csv"), [&](auto& os) { write_decisions_csv(os, result.trace); });
    write_file(dir / (prefix + "_requests.csv"), [&](auto& os) { write_requests_csv(os, result.trace); });
    write_file(dir / (prefix + "_power.csv"), [&](auto& os) { write_power_csv(os, result.trace); });
    write_file(dir / (prefix + "_events.csv"), [&](auto& os) { write_events_csv(os, result.trace); });
    write_file(dir / (prefix + "_summary.json"), [&](auto& os) { os << summary_json(result.summary); });
}

void cmd_run(const RunConfig& config, std::ostream& out) {
    if (config.mixes.empty())
        throw ValidationError("run requires --mix");
    const auto kind = config.policies.empty() ? PolicyKind::TWILL : config.policies.front();
    const auto platform = load_run_platform(config);
    const auto matrix = load_run_matrix(config);
    const auto scenario = load_run_mix(config, config.mixes.front());
    const auto result = run_policy(scenario, platform, matrix, kind, config);

    if (!config.out_dir.empty())
        write_outputs(config.out_dir, fmt::format("{}_{}", scenario.name, cli_name(kind)), result);

    const auto& s = result.summary;
    fmt::print(out, "scenario {}  policy {}  seed {}\n", scenario.name, cli_name(kind), scenario.seed);
    fmt::print(out, "{:<14} {:<18} {:>4} {:>11} {:>11} {:>14} {:>11} {:>11}\n", "request", "model", "prio",
               "arrival_ms", "start_ms", "completion_ms", "latency_ms", "waiting_ms");
    for (const auto& r : s.requests)
        fmt::print(out, "{:<14} {:<18} {:>4} {:>11.1f} {:>11.1f} {:>14.1f} {:>11.1f} {:>11.1f}\n", r.request_id,
                   r.model, r.priority, r.arrival_ms, r.start_ms, r.completion_ms, r.latency_ms(), r.waiting_ms());
    fmt::print(out, "makespan_ms {:.1f}  total_waiting_ms {:.1f}  tdp_violation {:.2f}%\n", s.makespan_ms,
               s.total_waiting_ms, 100.0 * s.violation_fraction);
}

std::vector<CompareRow> compare(const RunConfig& config) {
    if (config.policies.size() < 2)
        throw ValidationError("compare requires >=2 policies");
    if (config.mixes.empty())
        throw ValidationError("compare requires at least one mix");
    const auto platform = load_run_platform(config);
    const auto matrix = load_run_matrix(config);
    std::vector<CompareRow> rows;
    for (const auto& mix : config.mixes) {
        const auto scenario = load_run_mix(config, mix);
        for (auto kind : config.policies) {
            const auto result = run_policy(scenario, platform, matrix, kind, config);
            if (!config.out_dir.empty())
                write_outputs(config.out_dir, fmt::format("{}_{}", scenario.name, cli_name(kind)), result);
            rows.push_back(CompareRow{scenario.name, kind, result.summary.makespan_ms,
                                      result.summary.total_waiting_ms, result.summary.violation_fraction});
        }
    }
    return rows;
}

std::optional<double> twill_improvement_pct(const std::vector<CompareRow>& rows, const CompareRow& row) {
    for (const auto& r : rows)
        if (r.mix == row.mix && r.policy == PolicyKind::TWILL && row.makespan_ms > 0.0)
            return 100.0 * (row.makespan_ms - r.makespan_ms) / row.makespan_ms;
    return std::nullopt;
}

void cmd_compare(const RunConfig& config, std::ostream& out) {
    const auto rows = compare(config);
    fmt::print(out, "{:<10} {:<16} {:>12} {:>12} {:>10} {:>12}\n", "mix", "policy", "makespan_ms", "waiting_ms",
               "tdp_viol%", "twill_gain%");
    for (const auto& r : rows) {
        const auto gain = twill_improvement_pct(rows, r);
        fmt::print(out, "{:<10} {:<16} {:>12.1f} {:>12.1f} {:>10.2f} {:>12}\n", r.mix, cli_name(r.policy),
                   r.makespan_ms, r.total_waiting_ms, 100.0 * r.violation_fraction,
                   gain && r.policy != PolicyKind::TWILL ? fmt::format("{:.1f}", *gain) : std::string("-"));
    }
    if (!config.out_dir.empty()) {
        write_file(fs::path(config.out_dir) / "compare.csv", [&](std::ostream& os) {
            os << "mix,policy,makespan_ms,total_waiting_ms,violation_fraction,twill_improvement_pct\n";
            for (const auto& r : rows) {
                const auto gain = twill_improvement_pct(rows, r);
                fmt::print(os, "{},{},{},{},{},{}\n", r.mix, cli_name(r.policy), r.makespan_ms, r.total_waiting_ms,
                           r.violation_fraction, gain ? fmt::format("{}", *gain) : std::string{});
            }
        });
    }
}

} // namespace twill
