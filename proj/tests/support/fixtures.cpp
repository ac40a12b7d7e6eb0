#include "support/fixtures.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace twill::test {

std::string data_dir() { return TWILL_TEST_DATA_DIR; }

PlatformSpec default_platform() { return load_platform_file(data_dir() + "/platform.json"); }

CompatibilityMatrix default_matrix() { return load_matrix_file(data_dir() + "/dla_matrix.json"); }

ModelRepository& models() {
    static ModelRepository repo(data_dir() + "/models");
    return repo;
}

std::shared_ptr<const AppProfile> shipped_app(const std::string& name) {
    static std::map<std::string, std::shared_ptr<const AppProfile>> cache;
    auto& slot = cache[name];
    if (!slot)
        slot = std::make_shared<const AppProfile>(models().load(name, {}, {}, {}));
    return slot;
}

std::shared_ptr<const AppProfile> shipped_app(const std::string& name, double workload_size,
                                              std::optional<int> priority) {
    auto app = std::make_shared<AppProfile>(*shipped_app(name));
    app->workload_size = workload_size;
    if (priority)
        app->priority = *priority;
    return app;
}

PlatformSpec tiny_platform(std::vector<double> gpu_levels_mhz, double tdp_mw) {
    PlatformSpec p;
    p.tdp_mw = tdp_mw;
    p.base_power_mw = 3000.0;
    p.control_cycle_overhead_ms = 15.0;
    ClusterSpec gpu;
    gpu.id = "gpu0";
    gpu.kind = ClusterKind::GPU;
    gpu.freq_levels_mhz = gpu_levels_mhz;
    for (double f : gpu_levels_mhz)
        gpu.throughput_gflops.push_back(2.0 * f);
    gpu.idle_power_mw = 400.0;
    gpu.active_power_slope_mw_per_mhz = 5.0;
    ClusterSpec dla;
    dla.id = "dla0";
    dla.kind = ClusterKind::DLA;
    dla.freq_levels_mhz = {614.0};
    dla.throughput_gflops = {938.4};
    dla.idle_power_mw = 200.0;
    dla.active_power_slope_mw_per_mhz = 2.9;
    p.clusters = {gpu, dla};
    validate(p);
    return p;
}

std::shared_ptr<const AppProfile> synthetic_app(const std::string& name, double total_gflop, double dla_fraction,
                                                int priority, std::size_t layers) {
    auto app = std::make_shared<AppProfile>();
    app->name = name;
    app->priority = priority;
    app->task_kind = TaskKind::DNN_BATCH;
    app->workload_size = 1.0;
    app->units_per_pass = 1.0;

    std::size_t conv = layers;
    if (dla_fraction <= 0.0)
        conv = 0;
    else if (dla_fraction < 1.0)
        conv = std::max<std::size_t>(1, layers / 2);
    const std::size_t matmul = layers - conv;
    const double total = total_gflop * 1e9;

    for (std::size_t i = 0; i < layers; ++i) {
        LayerSpec l;
        l.index = i;
        l.precision = Precision::FP16;
        l.in_shape = {1, 64, 56, 56};
        l.out_shape = {1, 64, 56, 56};
        if (i < conv) {
            l.op_type = "Conv";
            l.kernel = Pair{3, 3};
            l.stride = Pair{1, 1};
            l.padding = Pair{1, 1};
            l.flops = total * dla_fraction / static_cast<double>(conv);
        } else {
            l.op_type = "MatMul";
            l.flops = total * (1.0 - dla_fraction) / static_cast<double>(matmul);
        }
        app->layers.push_back(l);
        app->total_flops += l.flops;
    }
    app->total_layers = app->layers.size();
    return app;
}

InferenceRequest request(const std::string& id, std::shared_ptr<const AppProfile> app, double arrival_ms,
                         std::set<RequestId> depends_on) {
    InferenceRequest r;
    r.request_id = id;
    r.app = std::move(app);
    r.arrival_ms = arrival_ms;
    r.depends_on = std::move(depends_on);
    return r;
}

WorkloadScenario scenario(const std::string& name, std::vector<InferenceRequest> requests) {
    WorkloadScenario s;
    s.name = name;
    s.requests = std::move(requests);
    validate(s);
    return s;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace twill::test
