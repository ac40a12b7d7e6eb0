// twill: run one workload mix under one policy, or compare policies over mixes.
//
// Exit codes: 0 ok, 1 load/validation error, 2 internal error.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twill/error.hpp"
#include "twill/runner.hpp"

#ifndef TWILL_DEFAULT_DATA_DIR
#define TWILL_DEFAULT_DATA_DIR "data"
#endif

namespace {

std::string default_data_dir() {
    if (const char* env = std::getenv("TWILL_CONFIG_DIR"); env && *env)
        return env;
    return TWILL_DEFAULT_DATA_DIR;
}

struct Options {
    std::string data_dir = default_data_dir();
    std::string platform;
    std::string matrix;
    std::vector<std::string> mixes;
    std::vector<std::string> policies;
    std::string out;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App& cmd, Options& o) {
    cmd.add_option("--data-dir", o.data_dir, "Config directory (default: $TWILL_CONFIG_DIR)");
    cmd.add_option("--platform", o.platform, "Platform JSON (default: <data-dir>/platform.json)");
    cmd.add_option("--matrix", o.matrix, "DLA compatibility matrix JSON");
    cmd.add_option("--out", o.out, "Directory for trace CSVs and summary JSON");
    cmd.add_option("--set", o.sets, "Override key=value (repeatable)");
    cmd.add_option("--seed", o.seed, "Scenario seed");
}

twill::RunConfig to_config(const Options& o) {
    twill::RunConfig c;
    c.data_dir = o.data_dir;
    c.platform_path = o.platform;
    c.matrix_path = o.matrix;
    c.mixes = o.mixes;
    c.out_dir = o.out;
    for (const auto& p : o.policies)
        c.policies.push_back(twill::policy_kind_from_string(p));
    for (const auto& s : o.sets)
        twill::apply_override(c, s);
    if (o.seed)
        c.seed = *o.seed;
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GPU+DLA edge scheduling simulator"};
    app.require_subcommand(1);

    Options run_opts;
    auto* run = app.add_subcommand("run", "Run one mix under one policy");
    add_common(*run, run_opts);
    run->add_option("--mix", run_opts.mixes, "Mix name or file")->required()->expected(1);
    run->add_option("--policy", run_opts.policies, "twill | gpu_queue | static_dvfs | static_subgraph")
        ->expected(1);

    Options cmp_opts;
    auto* cmp = app.add_subcommand("compare", "Compare policies over mixes");
    add_common(*cmp, cmp_opts);
    cmp->add_option("--mix", cmp_opts.mixes, "Mix names or files (default: mix1..mix5)")->delimiter(',');
    cmp->add_option("--policy", cmp_opts.policies, "Policies (default: all)")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*run) {
            twill::cmd_run(to_config(run_opts), std::cout);
        } else {
            auto config = to_config(cmp_opts);
            if (cmp_opts.policies.empty())
                config.policies = twill::all_policy_kinds();
            if (config.mixes.empty())
                config.mixes = {"mix1", "mix2", "mix3", "mix4", "mix5"};
            twill::cmd_compare(config, std::cout);
        }
    } catch (const twill::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const twill::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
