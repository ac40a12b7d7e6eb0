#pragma once

#include <memory>
#include <string>
#include <vector>

#include "twill/engine.hpp"
#include "twill/interpreter.hpp"
#include "twill/platform.hpp"
#include "twill/workload.hpp"

namespace twill::test {

std::string data_dir();
PlatformSpec default_platform();
CompatibilityMatrix default_matrix();
ModelRepository& models();

// Shipped model at its descriptor defaults, or with an explicit size.
std::shared_ptr<const AppProfile> shipped_app(const std::string& name);
std::shared_ptr<const AppProfile> shipped_app(const std::string& name, double workload_size,
                                              std::optional<int> priority = std::nullopt);

// GPU with the given levels (throughput 2 GFLOP/s per MHz) and a one-level DLA.
PlatformSpec tiny_platform(std::vector<double> gpu_levels_mhz, double tdp_mw = 10000.0);

// Synthetic model: `layers` Conv layers (DLA-feasible) followed by MatMul
// layers (GPU only) so that `dla_fraction` of the flops are DLA-feasible.
// Each pass has `total_gflop` of work, split evenly within each group.
std::shared_ptr<const AppProfile> synthetic_app(const std::string& name, double total_gflop, double dla_fraction,
                                                int priority, std::size_t layers = 10);

InferenceRequest request(const std::string& id, std::shared_ptr<const AppProfile> app, double arrival_ms,
                         std::set<RequestId> depends_on = {});

WorkloadScenario scenario(const std::string& name, std::vector<InferenceRequest> requests);

// Reads a whole file; throws on failure.
std::string read_file(const std::string& path);

} // namespace twill::test
