#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twill/platform.hpp"

namespace twill {

enum class Precision { FP32, FP16, INT8 };
enum class TaskKind { DNN_BATCH, ENCODER_PROMPT, GENERATIVE };

std::string_view to_string(Precision p);
Precision precision_from_string(std::string_view text);
std::string_view to_string(TaskKind k);
TaskKind task_kind_from_string(std::string_view text);

// Workload size used when a scenario does not give one: 32 images per DNN
// batch, a 128-token prompt, 100 generated tokens.
double default_workload_size(TaskKind kind);

using Pair = std::array<std::int64_t, 2>;

struct LayerSpec {
    std::size_t index{0};
    std::string op_type;
    Precision precision{Precision::FP16};
    double flops{0.0};
    std::vector<std::int64_t> in_shape;
    std::vector<std::int64_t> out_shape;
    std::optional<Pair> kernel;
    std::optional<Pair> stride;
    std::optional<Pair> padding;
};

struct AppProfile {
    std::string name;
    std::int64_t total_params{0};
    std::size_t total_layers{0};
    double total_flops{0.0}; // one pass at the descriptor's nominal input
    std::vector<LayerSpec> layers;
    int priority{0};
    TaskKind task_kind{TaskKind::DNN_BATCH};
    double workload_size{1.0};
    std::string work_unit{"image"};
    double units_per_pass{1.0};

    // Total GFLOP of the request: one pass scaled by workload_size / units_per_pass.
    [[nodiscard]] double total_work_gflop() const {
        return total_flops * (workload_size / units_per_pass) * 1e-9;
    }
};

struct CompatibilityMatrix {
    std::set<Precision> supported_precisions;
    std::set<std::string> unsupported_ops;
    std::set<std::string> param_checked_ops;
    Pair kernel_range{1, 32};
    Pair stride_range{1, 16};
    Pair padding_range{0, 31};
    std::int64_t max_batch{32};
    std::int64_t max_spatial_dim{8192};
};

struct SignatureMap {
    std::shared_ptr<const AppProfile> app;
    std::vector<std::set<ClusterKind>> layer_affinity;
    double dla_flops_fraction{0.0};
    std::vector<ClusterKind> preferred_clusters;
};

// A maximal run of consecutive layers sharing the same affinity set.
struct Subgraph {
    std::size_t first_layer{0};
    std::size_t last_layer{0}; // inclusive
    bool dla_feasible{false};
    double flops{0.0};
};

inline constexpr double kDefaultAffinityThreshold = 0.9;

// Parses a JSON model descriptor. Layers keep file order; totals are derived
// and cross-checked against declared_total_flops when the file carries it.
AppProfile parse_model(std::string_view descriptor_text, int priority, TaskKind task_kind,
                       double workload_size);

// Same, taking priority, kind and a default workload size from the descriptor.
AppProfile parse_model(std::string_view descriptor_text);

CompatibilityMatrix load_matrix(std::string_view text);
CompatibilityMatrix load_matrix_file(const std::string& path);
void validate(const CompatibilityMatrix& matrix);

bool dla_compatible(const LayerSpec& layer, const CompatibilityMatrix& matrix);

SignatureMap layer_affinity(std::shared_ptr<const AppProfile> profile, const CompatibilityMatrix& matrix,
                            double affinity_threshold = kDefaultAffinityThreshold);

double fallback_fraction(const SignatureMap& signature);

std::vector<Subgraph> partition_subgraphs(const SignatureMap& signature);

// Canonical JSON form; identical inputs give identical bytes.
std::string serialize_signature(const SignatureMap& signature);

} // namespace twill
