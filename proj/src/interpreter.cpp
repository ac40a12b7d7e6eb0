#include "twill/interpreter.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"

namespace twill {

using detail::json;

namespace {

// Ops whose layers carry kernel/stride/padding in a descriptor.
bool is_parameterized(const std::string& op) {
    return op == "Conv" || op == "FullyConnected";
}

std::optional<Pair> optional_pair(const json& obj, const char* key, std::string_view what) {
    if (!obj.contains(key) || obj.at(key).is_null())
        return std::nullopt;
    const auto v = detail::field<std::vector<std::int64_t>>(obj, key, what);
    if (v.size() != 2)
        throw ValidationError(std::string(what) + ": '" + key + "' must have two entries");
    return Pair{v[0], v[1]};
}

bool within(const Pair& value, const Pair& range) {
    return value[0] >= range[0] && value[0] <= range[1] && value[1] >= range[0] && value[1] <= range[1];
}

LayerSpec parse_layer(const json& l, std::size_t index) {
    const std::string what = "layer " + std::to_string(index);
    LayerSpec layer;
    layer.index = index;
    layer.op_type = detail::field<std::string>(l, "op", what);
    layer.precision = precision_from_string(detail::field<std::string>(l, "precision", what));
    layer.flops = detail::field<double>(l, "flops", what);
    layer.in_shape = detail::field<std::vector<std::int64_t>>(l, "in_shape", what);
    layer.out_shape = detail::field<std::vector<std::int64_t>>(l, "out_shape", what);
    layer.kernel = optional_pair(l, "kernel", what);
    layer.stride = optional_pair(l, "stride", what);
    layer.padding = optional_pair(l, "padding", what);

    if (layer.op_type.empty())
        throw ValidationError(what + ": op must be nonempty");
    if (!(layer.flops >= 0.0))
        throw ValidationError(what + ": flops must be >= 0");
    if (layer.in_shape.empty() || layer.out_shape.empty())
        throw ValidationError(what + ": in_shape and out_shape must be nonempty");
    const bool has_params = layer.kernel && layer.stride && layer.padding;
    if (is_parameterized(layer.op_type) && !has_params)
        throw ValidationError(what + ": " + layer.op_type + " requires kernel, stride and padding");
    // Pooling windows carry a kernel too; only the conv/FC triple is enforced.
    return layer;
}

} // namespace

std::string_view to_string(Precision p) {
    switch (p) {
    case Precision::FP32: return "FP32";
    case Precision::FP16: return "FP16";
    case Precision::INT8: return "INT8";
    }
    return "?";
}

Precision precision_from_string(std::string_view text) {
    if (text == "FP32") return Precision::FP32;
    if (text == "FP16") return Precision::FP16;
    if (text == "INT8") return Precision::INT8;
    throw ValidationError("unknown precision '" + std::string(text) + "'");
}

std::string_view to_string(TaskKind k) {
    switch (k) {
    case TaskKind::DNN_BATCH: return "DNN_BATCH";
    case TaskKind::ENCODER_PROMPT: return "ENCODER_PROMPT";
    case TaskKind::GENERATIVE: return "GENERATIVE";
    }
    return "?";
}

TaskKind task_kind_from_string(std::string_view text) {
    if (text == "DNN_BATCH") return TaskKind::DNN_BATCH;
    if (text == "ENCODER_PROMPT") return TaskKind::ENCODER_PROMPT;
    if (text == "GENERATIVE") return TaskKind::GENERATIVE;
    throw ValidationError("unknown task kind '" + std::string(text) + "'");
}

double default_workload_size(TaskKind kind) {
    switch (kind) {
    case TaskKind::DNN_BATCH: return 32.0;
    case TaskKind::ENCODER_PROMPT: return 128.0;
    case TaskKind::GENERATIVE: return 100.0;
    }
    return 1.0;
}

AppProfile parse_model(std::string_view descriptor_text, int priority, TaskKind task_kind,
                       double workload_size) {
    constexpr std::string_view what = "model descriptor";
    const json doc = detail::parse_json(descriptor_text, what);
    if (priority < 0)
        throw ValidationError("priority must be >= 0");
    if (!(workload_size > 0.0))
        throw ValidationError("workload_size must be > 0");

    AppProfile app;
    app.name = detail::field<std::string>(doc, "name", what);
    app.total_params = detail::field_or<std::int64_t>(doc, "total_params", 0, what);
    app.work_unit = detail::field_or<std::string>(doc, "work_unit", "image", what);
    app.units_per_pass = detail::field_or<double>(doc, "units_per_pass", 1.0, what);
    if (!(app.units_per_pass > 0.0))
        throw ValidationError("units_per_pass must be > 0");
    app.priority = priority;
    app.task_kind = task_kind;
    app.workload_size = workload_size;

    const json& layers = detail::require(doc, "layers", what);
    if (!layers.is_array())
        throw ParseError("model descriptor: 'layers' must be an array");
    app.layers.reserve(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        app.layers.push_back(parse_layer(layers[i], i));
        app.total_flops += app.layers.back().flops;
    }
    app.total_layers = app.layers.size();

    if (doc.contains("declared_total_flops")) {
        const double declared = detail::field<double>(doc, "declared_total_flops", what);
        const double scale = std::max(std::abs(declared), 1.0);
        if (std::abs(declared - app.total_flops) > 1e-6 * scale)
            throw ValidationError("model '" + app.name + "': declared_total_flops does not match layer sum");
    }
    if (doc.contains("declared_total_layers") &&
        detail::field<std::size_t>(doc, "declared_total_layers", what) != app.total_layers)
        throw ValidationError("model '" + app.name + "': declared_total_layers does not match layer count");
    return app;
}

AppProfile parse_model(std::string_view descriptor_text) {
    const json doc = detail::parse_json(descriptor_text, "model descriptor");
    const TaskKind kind = task_kind_from_string(
        detail::field_or<std::string>(doc, "task_kind", "DNN_BATCH", "model descriptor"));
    const int priority = detail::field_or<int>(doc, "default_priority", 0, "model descriptor");
    return parse_model(descriptor_text, priority, kind, default_workload_size(kind));
}

void validate(const CompatibilityMatrix& m) {
    for (const auto* range : {&m.kernel_range, &m.stride_range, &m.padding_range})
        if ((*range)[0] > (*range)[1])
            throw ValidationError("compatibility matrix: range has min > max");
    for (const auto& op : m.param_checked_ops)
        if (m.unsupported_ops.count(op))
            throw ValidationError("compatibility matrix: op '" + op + "' is both unsupported and param-checked");
    if (m.max_batch < 1 || m.max_spatial_dim < 1)
        throw ValidationError("compatibility matrix: max_batch and max_spatial_dim must be >= 1");
}

CompatibilityMatrix load_matrix(std::string_view text) {
    constexpr std::string_view what = "compatibility matrix";
    const json doc = detail::parse_json(text, what);
    CompatibilityMatrix m;
    for (const auto& p : detail::field<std::vector<std::string>>(doc, "supported_precisions", what))
        m.supported_precisions.insert(precision_from_string(p));
    for (const auto& op : detail::field<std::vector<std::string>>(doc, "unsupported_ops", what))
        m.unsupported_ops.insert(op);
    for (const auto& op : detail::field<std::vector<std::string>>(doc, "param_checked_ops", what))
        m.param_checked_ops.insert(op);
    auto range = [&](const char* key) {
        const auto v = detail::field<std::vector<std::int64_t>>(doc, key, what);
        if (v.size() != 2)
            throw ValidationError(std::string(what) + ": '" + key + "' must be [min, max]");
        return Pair{v[0], v[1]};
    };
    m.kernel_range = range("kernel_range");
    m.stride_range = range("stride_range");
    m.padding_range = range("padding_range");
    m.max_batch = detail::field<std::int64_t>(doc, "max_batch", what);
    m.max_spatial_dim = detail::field<std::int64_t>(doc, "max_spatial_dim", what);
    validate(m);
    return m;
}

CompatibilityMatrix load_matrix_file(const std::string& path) {
    return load_matrix(detail::read_file(path));
}

bool dla_compatible(const LayerSpec& layer, const CompatibilityMatrix& matrix) {
    if (!matrix.supported_precisions.count(layer.precision))
        return false;
    if (matrix.unsupported_ops.count(layer.op_type))
        return false;
    if (!matrix.param_checked_ops.count(layer.op_type))
        return true;

    if (!layer.kernel || !layer.stride || !layer.padding)
        return false;
    if (!within(*layer.kernel, matrix.kernel_range) || !within(*layer.stride, matrix.stride_range) ||
        !within(*layer.padding, matrix.padding_range))
        return false;
    if (layer.in_shape.front() > matrix.max_batch)
        return false;
    // NCHW: everything past the channel axis is spatial.
    for (std::size_t d = 2; d < layer.in_shape.size(); ++d)
        if (layer.in_shape[d] > matrix.max_spatial_dim)
            return false;
    return true;
}

SignatureMap layer_affinity(std::shared_ptr<const AppProfile> profile, const CompatibilityMatrix& matrix,
                            double affinity_threshold) {
    SignatureMap sig;
    sig.layer_affinity.reserve(profile->layers.size());
    double dla_flops = 0.0;
    bool all_dla = !profile->layers.empty();
    for (const auto& layer : profile->layers) {
        std::set<ClusterKind> feasible{ClusterKind::GPU};
        if (dla_compatible(layer, matrix)) {
            feasible.insert(ClusterKind::DLA);
            dla_flops += layer.flops;
        } else {
            all_dla = false;
        }
        sig.layer_affinity.push_back(std::move(feasible));
    }
    if (profile->total_flops > 0.0)
        sig.dla_flops_fraction = std::clamp(dla_flops / profile->total_flops, 0.0, 1.0);
    else
        sig.dla_flops_fraction = all_dla ? 1.0 : 0.0; // zero-FLOP model: vacuous case

    if (sig.dla_flops_fraction >= affinity_threshold)
        sig.preferred_clusters = {ClusterKind::DLA, ClusterKind::GPU};
    else
        sig.preferred_clusters = {ClusterKind::GPU};
    sig.app = std::move(profile);
    return sig;
}

double fallback_fraction(const SignatureMap& signature) {
    return 1.0 - signature.dla_flops_fraction;
}

std::vector<Subgraph> partition_subgraphs(const SignatureMap& signature) {
    std::vector<Subgraph> out;
    const auto& layers = signature.app->layers;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const bool dla = signature.layer_affinity[i].count(ClusterKind::DLA) > 0;
        if (out.empty() || out.back().dla_feasible != dla)
            out.push_back(Subgraph{i, i, dla, 0.0});
        out.back().last_layer = i;
        out.back().flops += layers[i].flops;
    }
    return out;
}

std::string serialize_signature(const SignatureMap& signature) {
    json doc;
    doc["app"] = signature.app->name;
    doc["total_flops"] = signature.app->total_flops;
    doc["dla_flops_fraction"] = signature.dla_flops_fraction;
    doc["preferred_clusters"] = json::array();
    for (auto k : signature.preferred_clusters)
        doc["preferred_clusters"].push_back(std::string(to_string(k)));
    doc["layers"] = json::array();
    for (std::size_t i = 0; i < signature.layer_affinity.size(); ++i) {
        const auto& layer = signature.app->layers[i];
        json aff = json::array();
        for (auto k : signature.layer_affinity[i])
            aff.push_back(std::string(to_string(k)));
        doc["layers"].push_back({{"index", layer.index},
                                 {"op", layer.op_type},
                                 {"precision", std::string(to_string(layer.precision))},
                                 {"flops", layer.flops},
                                 {"in_shape", layer.in_shape},
                                 {"out_shape", layer.out_shape},
                                 {"affinity", aff}});
    }
    return doc.dump();
}

} // namespace twill
