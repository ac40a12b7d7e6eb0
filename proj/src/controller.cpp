#include "twill/controller.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace twill {

namespace {

constexpr double kEps = 1e-9;

// Rate the task would get on `cluster` if occupancy became `occupied`.
double prospective_rate(const Simulation& world, const RunningTask& task, std::size_t cluster,
                        const std::vector<bool>& occupied) {
    ClusterState state = world.clusters()[cluster];
    if (state.spec->kind == ClusterKind::GPU)
        state.current_level = budget_level(world, occupied);
    return exec_rate(task.dla_fraction, state, world.config().fallback_penalty_factor);
}

bool listed(const std::vector<std::size_t>& clusters, std::size_t c) {
    return std::find(clusters.begin(), clusters.end(), c) != clusters.end();
}

} // namespace

void FreezeQueue::push(std::string task_id, int priority, double now_ms) {
    remove(task_id);
    entries_.push_back(FreezeEntry{std::move(task_id), priority, now_ms, next_seq_++});
}

bool FreezeQueue::remove(const std::string& task_id) {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.task_id == task_id; });
    if (it == entries_.end())
        return false;
    entries_.erase(it);
    return true;
}

bool FreezeQueue::contains(const std::string& task_id) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.task_id == task_id; });
}

bool FreezeQueue::before(const FreezeEntry& a, const FreezeEntry& b) {
    if (a.priority != b.priority)
        return a.priority > b.priority;
    if (a.enqueue_ms != b.enqueue_ms)
        return a.enqueue_ms < b.enqueue_ms;
    if (a.seq != b.seq)
        return a.seq < b.seq;
    return a.task_id < b.task_id;
}

std::optional<FreezeEntry> FreezeQueue::best(const std::function<bool(const FreezeEntry&)>& eligible) const {
    std::optional<FreezeEntry> out;
    for (const auto& e : entries_)
        if (eligible(e) && (!out || before(e, *out)))
            out = e;
    return out;
}

std::vector<FreezeEntry> FreezeQueue::ordered() const {
    auto out = entries_;
    std::sort(out.begin(), out.end(), before);
    return out;
}

std::size_t dvfs_update(std::optional<PowerReading> before, PowerReading after, double budget_mw,
                        const ClusterState& gpu, bool gpu_busy, std::size_t handled_apps) {
    const std::size_t current = gpu.current_level;
    // An idle GPU draws no frequency-dependent power; there is nothing to fit.
    if (!gpu_busy)
        return current;

    const auto& freqs = gpu.spec->freq_levels_mhz;
    const double f_cur = freqs[current];
    double slope = gpu.spec->active_power_slope_mw_per_mhz;
    if (before && std::abs(after.gpu_freq_mhz - before->gpu_freq_mhz) > kEps)
        slope = (after.power_mw - before->power_mw) / (after.gpu_freq_mhz - before->gpu_freq_mhz);

    const double headroom = budget_mw - after.power_mw;
    if (!(slope > 0.0)) {
        // No usable fit: move one level toward the budget, checked against the
        // configured slope before stepping up.
        if (headroom < 0.0)
            return current == 0 ? 0 : current - 1;
        if (current < gpu.spec->max_level()) {
            const double up = after.power_mw + gpu.spec->active_power_slope_mw_per_mhz * (freqs[current + 1] - f_cur);
            if (up <= budget_mw + kEps)
                return current + 1;
        }
        return current;
    }

    const double usable = headroom > 0.0 && handled_apps >= 2 ? headroom / 2.0 : headroom;
    const double target = after.power_mw + usable;
    for (std::size_t l = freqs.size(); l-- > 0;) {
        const double predicted = after.power_mw + slope * (freqs[l] - f_cur);
        if (predicted <= target + kEps)
            return l;
    }
    return 0;
}

std::vector<std::size_t> preferred_indices(const PlatformSpec& platform, const SignatureMap& signature) {
    std::vector<std::size_t> out;
    for (auto kind : signature.preferred_clusters)
        for (std::size_t i = 0; i < platform.clusters.size(); ++i)
            if (platform.clusters[i].kind == kind)
                out.push_back(i);
    return out;
}

std::size_t budget_level(const Simulation& world, const std::vector<bool>& occupied) {
    const auto g = world.gpu();
    if (!g)
        return 0;
    const auto& spec = world.platform().clusters[*g];
    for (std::size_t l = spec.num_levels(); l-- > 0;)
        if (world.predicted_power(occupied, l) <= world.platform().tdp_mw + kEps)
            return l;
    return 0;
}

void TwillPolicy::on_arrival(const RunningTask& task, const Simulation& world, std::vector<Decision>& out) {
    const auto& platform = world.platform();
    const auto pref = preferred_indices(platform, *task.signature);

    for (auto c : pref) {
        if (world.cluster_free(c)) {
            out.push_back(Decision::map(task.task_id, c));
            return;
        }
    }
    for (auto c : pref) {
        const auto* occupant = world.task(*world.clusters()[c].occupant);
        for (auto alt : preferred_indices(platform, *occupant->signature)) {
            if (alt != c && world.cluster_free(alt)) {
                out.push_back(Decision::migrate(occupant->task_id, c, alt));
                out.push_back(Decision::map(task.task_id, c));
                return;
            }
        }
    }
    for (auto c : pref) {
        const auto* occupant = world.task(*world.clusters()[c].occupant);
        if (occupant->priority < task.priority) {
            out.push_back(Decision::freeze(occupant->task_id, c));
            out.push_back(Decision::map(task.task_id, c));
            queue_.push(occupant->task_id, occupant->priority, world.now());
            return;
        }
    }
    out.push_back(Decision::freeze(task.task_id));
    queue_.push(task.task_id, task.priority, world.now());
}

void TwillPolicy::on_freed(std::size_t cluster, const Simulation& world, std::vector<Decision>& out) {
    const auto& platform = world.platform();
    const auto entry = queue_.best([&](const FreezeEntry& e) {
        const auto* t = world.task(e.task_id);
        return t && listed(preferred_indices(platform, *t->signature), cluster);
    });
    if (entry) {
        const auto* t = world.task(entry->task_id);
        out.push_back(t->started ? Decision::unfreeze(t->task_id, cluster) : Decision::map(t->task_id, cluster));
        queue_.remove(entry->task_id);
        return;
    }

    // Remap the running task that gains the most rate on the freed cluster.
    const RunningTask* pick = nullptr;
    std::size_t from = 0;
    double best_gain = 1.0;
    for (const auto& [id, t] : world.tasks()) {
        if (!t.running() || *t.cluster == cluster)
            continue;
        if (!listed(preferred_indices(platform, *t.signature), cluster))
            continue;
        auto now_occ = world.occupancy();
        auto moved = now_occ;
        moved[*t.cluster] = false;
        moved[cluster] = true;
        const double current = prospective_rate(world, t, *t.cluster, now_occ);
        const double there = prospective_rate(world, t, cluster, moved);
        const double gain = there / current;
        if (gain > best_gain * (1.0 + kEps)) {
            best_gain = gain;
            pick = &t;
            from = *t.cluster;
        }
    }
    if (pick)
        out.push_back(Decision::migrate(pick->task_id, from, cluster));
}

void TwillPolicy::govern(const Simulation& world, std::vector<Decision>& out) const {
    const auto g = world.gpu();
    if (!g)
        return;
    auto occ = world.occupancy();
    std::set<std::string> handled;
    for (const auto& d : out) {
        handled.insert(d.subject);
        switch (d.action) {
        case Action::MAP:
        case Action::UNFREEZE: occ[*d.target] = true; break;
        case Action::MIGRATE:
            occ[*d.source] = false;
            occ[*d.target] = true;
            break;
        case Action::FREEZE:
            if (const auto* t = world.task(d.subject); t && t->cluster)
                occ[*t->cluster] = false;
            break;
        case Action::SET_FREQ: break;
        }
    }
    const auto& gpu = world.clusters()[*g];
    const PowerReading after{world.predicted_power(occ, gpu.current_level), gpu.frequency_mhz()};
    const auto level = dvfs_update(last_reading_, after, world.platform().tdp_mw, gpu, occ[*g], handled.size());
    if (level != gpu.current_level)
        out.push_back(Decision::set_freq(gpu.spec->id, *g, level));
}

std::vector<Decision> TwillPolicy::decide(const ControllerEvent& event, const Simulation& world) {
    std::vector<Decision> out;
    if (event.kind == EventKind::ARRIVAL) {
        for (const auto& [id, t] : world.tasks())
            if (t.request_id == event.payload && !t.started && !t.frozen && !t.completed)
                on_arrival(t, world, out);
    } else if (event.kind == EventKind::CLUSTER_FREED && event.cluster && world.cluster_free(*event.cluster)) {
        on_freed(*event.cluster, world, out);
    }
    govern(world, out);
    return out;
}

void TwillPolicy::on_deployed(const std::vector<Decision>&, const Simulation& world) {
    if (const auto g = world.gpu())
        last_reading_ = PowerReading{world.current_power(), world.clusters()[*g].frequency_mhz()};
}

} // namespace twill
