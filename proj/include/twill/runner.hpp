#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twill/baselines.hpp"
#include "twill/engine.hpp"
#include "twill/interpreter.hpp"
#include "twill/platform.hpp"
#include "twill/policy.hpp"
#include "twill/trace.hpp"
#include "twill/workload.hpp"

namespace twill {

// Data directory layout: platform.json, dla_matrix.json, models/<name>.json,
// mixes/<name>.json.
struct RunConfig {
    std::string data_dir;
    std::string platform_path; // empty: <data_dir>/platform.json
    std::string matrix_path;   // empty: <data_dir>/dla_matrix.json
    std::vector<std::string> mixes; // names under <data_dir>/mixes or file paths
    std::vector<PolicyKind> policies;
    std::string out_dir; // empty: no files written
    SimConfig sim;
    PolicyOptions policy_options;
    std::optional<double> tdp_mw;
    std::optional<double> control_overhead_ms;
    std::optional<std::uint64_t> seed;
};

// Applies one `key=value` override. Throws ValidationError on an unknown key
// or a malformed value.
void apply_override(RunConfig& config, std::string_view assignment);

std::string resolve_mix_path(const RunConfig& config, const std::string& mix);
PlatformSpec load_run_platform(const RunConfig& config);
CompatibilityMatrix load_run_matrix(const RunConfig& config);
WorkloadScenario load_run_mix(const RunConfig& config, const std::string& mix);

struct RunResult {
    Trace trace;
    Summary summary;
};

RunResult run_policy(const WorkloadScenario& scenario, const PlatformSpec& platform,
                     const CompatibilityMatrix& matrix, PolicyKind kind, const RunConfig& config);

// Writes <prefix>_{decisions,requests,power,events}.csv and <prefix>_summary.json.
void write_outputs(const std::string& out_dir, const std::string& prefix, const RunResult& result);

// Runs the first mix under the first policy, prints the latency table.
void cmd_run(const RunConfig& config, std::ostream& out);

struct CompareRow {
    std::string mix;
    PolicyKind policy{PolicyKind::TWILL};
    double makespan_ms{0.0};
    double total_waiting_ms{0.0};
    double violation_fraction{0.0};
};

std::vector<CompareRow> compare(const RunConfig& config);
void cmd_compare(const RunConfig& config, std::ostream& out);

// Twill's makespan improvement over `row`, in percent; nullopt without a Twill row.
std::optional<double> twill_improvement_pct(const std::vector<CompareRow>& rows, const CompareRow& row);

} // namespace twill
