#include "twill/baselines.hpp"

#include <algorithm>

#include "twill/controller.hpp"
#include "twill/error.hpp"

namespace twill {

namespace {

std::vector<std::string> new_tasks_of(const Simulation& world, const std::string& request_id) {
    std::vector<std::string> out;
    for (const auto& [id, t] : world.tasks())
        if (t.request_id == request_id && !t.started && !t.completed)
            out.push_back(id);
    return out;
}

bool dla_preferred(const SignatureMap& sig) {
    return std::find(sig.preferred_clusters.begin(), sig.preferred_clusters.end(), ClusterKind::DLA) !=
           sig.preferred_clusters.end();
}

std::vector<bool> occupancy_after(const Simulation& world, const std::vector<Decision>& decisions) {
    auto occ = world.occupancy();
    for (const auto& d : decisions)
        if (d.action == Action::MAP)
            occ[*d.target] = true;
    return occ;
}

} // namespace

std::string_view to_string(PolicyKind k) {
    switch (k) {
    case PolicyKind::TWILL: return "TWILL";
    case PolicyKind::GPU_QUEUE: return "GPU_QUEUE";
    case PolicyKind::STATIC_AT_ARRIVAL_DVFS: return "STATIC_AT_ARRIVAL_DVFS";
    case PolicyKind::STATIC_SUBGRAPH_NO_DVFS: return "STATIC_SUBGRAPH_NO_DVFS";
    }
    return "?";
}

std::string_view cli_name(PolicyKind k) {
    switch (k) {
    case PolicyKind::TWILL: return "twill";
    case PolicyKind::GPU_QUEUE: return "gpu_queue";
    case PolicyKind::STATIC_AT_ARRIVAL_DVFS: return "static_dvfs";
    case PolicyKind::STATIC_SUBGRAPH_NO_DVFS: return "static_subgraph";
    }
    return "?";
}

PolicyKind policy_kind_from_string(std::string_view text) {
    for (auto k : all_policy_kinds())
        if (text == cli_name(k) || text == to_string(k))
            return k;
    throw ValidationError("unknown policy '" + std::string(text) +
                          "' (expected twill, gpu_queue, static_dvfs or static_subgraph)");
}

std::vector<PolicyKind> all_policy_kinds() {
    return {PolicyKind::TWILL, PolicyKind::GPU_QUEUE, PolicyKind::STATIC_AT_ARRIVAL_DVFS,
            PolicyKind::STATIC_SUBGRAPH_NO_DVFS};
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyOptions& options) {
    switch (kind) {
    case PolicyKind::TWILL: return std::make_unique<TwillPolicy>();
    case PolicyKind::GPU_QUEUE: return std::make_unique<GpuQueuePolicy>();
    case PolicyKind::STATIC_AT_ARRIVAL_DVFS: return std::make_unique<StaticArrivalPolicy>();
    case PolicyKind::STATIC_SUBGRAPH_NO_DVFS:
        return std::make_unique<StaticSubgraphPolicy>(options.static_subgraph_level);
    }
    throw std::logic_error("unhandled policy kind");
}

// ---- gpu_queue ----

std::vector<Decision> GpuQueuePolicy::decide(const ControllerEvent& event, const Simulation& world) {
    std::vector<Decision> out;
    const auto g = world.gpu();
    if (event.kind == EventKind::ARRIVAL)
        for (auto& id : new_tasks_of(world, event.payload))
            fifo_.push_back(std::move(id));
    if (!fifo_.empty() && world.cluster_free(*g)) {
        out.push_back(Decision::map(fifo_.front(), *g));
        fifo_.pop_front();
    }
    const auto occ = occupancy_after(world, out);
    if (occ[*g]) {
        const auto level = budget_level(world, occ);
        if (level != world.clusters()[*g].current_level)
            out.push_back(Decision::set_freq(world.platform().clusters[*g].id, *g, level));
    }
    return out;
}

// ---- static_dvfs ----

std::vector<Decision> StaticArrivalPolicy::decide(const ControllerEvent& event, const Simulation& world) {
    std::vector<Decision> out;
    const auto g = world.gpu();
    const auto dla = world.platform().first_of_kind(ClusterKind::DLA);
    std::vector<bool> taken(world.clusters().size(), false);
    auto free_now = [&](std::size_t c) { return world.cluster_free(c) && !taken[c]; };
    auto dla_ok = [&](const std::string& id) { return dla_preferred(*world.task(id)->signature); };

    if (event.kind == EventKind::ARRIVAL)
        for (auto& id : new_tasks_of(world, event.payload))
            fifo_.push_back(std::move(id));

    // FIFO with skipping: each waiting task takes the first cluster it may use.
    for (auto it = fifo_.begin(); it != fifo_.end();) {
        std::optional<std::size_t> target;
        if (free_now(*g))
            target = *g;
        else if (dla && free_now(*dla) && dla_ok(*it))
            target = *dla;
        if (!target) {
            ++it;
            continue;
        }
        taken[*target] = true;
        out.push_back(Decision::map(*it, *target));
        it = fifo_.erase(it);
    }

    const auto occ = occupancy_after(world, out);
    const auto& gpu = world.clusters()[*g];
    if (occ[*g] && gpu.current_level != gpu.spec->max_level())
        out.push_back(Decision::set_freq(gpu.spec->id, *g, gpu.spec->max_level()));
    return out;
}

// ---- static_subgraph ----

std::vector<TaskPlan> StaticSubgraphPolicy::plan_tasks(const InferenceRequest& request, const SignatureMap& signature,
                                                       const Simulation&) {
    double dla_flops = 0.0;
    for (const auto& sg : partition_subgraphs(signature))
        if (sg.dla_feasible)
            dla_flops += sg.flops;
    const double total = signature.app->total_flops;
    const double f = total > 0.0 ? dla_flops / total : signature.dla_flops_fraction;

    std::vector<TaskPlan> plans;
    if (f > 0.0)
        plans.push_back(TaskPlan{kDlaSuffix, f, 1.0});
    if (f < 1.0)
        plans.push_back(TaskPlan{kGpuSuffix, 1.0 - f, 0.0});
    auto& ids = stages_[request.request_id];
    for (const auto& p : plans)
        ids.push_back(request.request_id + p.suffix);
    next_stage_[request.request_id] = 0;
    return plans;
}

std::vector<Decision> StaticSubgraphPolicy::decide(const ControllerEvent& event, const Simulation& world) {
    std::vector<Decision> out;
    const auto g = world.gpu();
    const auto dla = world.platform().first_of_kind(ClusterKind::DLA);
    bool dla_taken = false;

    if (!pinned_) {
        pinned_ = true;
        const auto& spec = *world.clusters()[*g].spec;
        const auto level = pinned_level_ ? std::min(*pinned_level_, spec.max_level())
                                         : budget_level(world, std::vector<bool>(world.clusters().size(), true));
        if (level != world.clusters()[*g].current_level)
            out.push_back(Decision::set_freq(spec.id, *g, level));
    }

    auto enqueue_stage = [&](const std::string& request_id) {
        auto& idx = next_stage_[request_id];
        const auto& ids = stages_[request_id];
        if (idx >= ids.size())
            return;
        const auto& id = ids[idx];
        if (idx > 0 && !world.task(ids[idx - 1])->completed)
            return;
        ++idx;
        const bool dla_stage = id.size() >= 4 && id.compare(id.size() - 4, 4, kDlaSuffix) == 0;
        if (dla_stage && dla && world.cluster_free(*dla) && !dla_taken) {
            dla_taken = true;
            out.push_back(Decision::map(id, *dla));
        } else {
            gpu_fifo_.push_back(id);
        }
    };

    if (event.kind == EventKind::ARRIVAL) {
        enqueue_stage(event.payload);
    } else {
        // Later stages become ready once the earlier stage has finished.
        for (const auto& [request_id, ids] : stages_)
            if (next_stage_[request_id] > 0)
                enqueue_stage(request_id);
    }

    if (!gpu_fifo_.empty() && world.cluster_free(*g)) {
        out.push_back(Decision::map(gpu_fifo_.front(), *g));
        gpu_fifo_.pop_front();
    }
    return out;
}

} // namespace twill
