#include "twill/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <fmt/format.h>

#include "twill/error.hpp"

namespace twill {

namespace {

double work_tolerance(double total) {
    return 1e-9 * std::max(1.0, total) + 1e-12;
}

std::string join_preferred(const SignatureMap& sig) {
    std::string out;
    for (auto k : sig.preferred_clusters) {
        if (!out.empty())
            out += '|';
        out += to_string(k);
    }
    return out;
}

} // namespace

double exec_rate(double dla_fraction, const ClusterState& cluster, double fallback_penalty_factor) {
    const double nominal = cluster.throughput_gflops();
    if (cluster.spec->kind == ClusterKind::GPU)
        return nominal;
    const double f = std::clamp(dla_fraction, 0.0, 1.0);
    return nominal / (f + (1.0 - f) * fallback_penalty_factor);
}

double exec_rate(const SignatureMap& signature, const ClusterState& cluster, double fallback_penalty_factor) {
    return exec_rate(signature.dla_flops_fraction, cluster, fallback_penalty_factor);
}

std::vector<double> pass_boundaries(const AppProfile& app, double work_fraction) {
    std::vector<double> out;
    double cum = 0.0;
    for (const auto& layer : app.layers) {
        if (layer.flops <= 0.0)
            continue;
        cum += layer.flops * 1e-9 * work_fraction;
        out.push_back(cum);
    }
    return out;
}

double RunningTask::boundary_at_or_below(double work) const {
    if (!pass_boundaries || pass_boundaries->empty() || pass_work <= 0.0)
        return 0.0;
    const double tol = work_tolerance(total_work);
    const double passes = std::floor((work + tol) / pass_work);
    const double base = passes * pass_work;
    const double within = work - base;
    const auto& b = *pass_boundaries;
    auto it = std::upper_bound(b.begin(), b.end(), within + tol);
    const double inner = it == b.begin() ? 0.0 : *std::prev(it);
    return std::min(base + inner, work);
}

Simulation::Simulation(PlatformSpec platform, CompatibilityMatrix matrix, SimConfig config)
    : platform_(std::move(platform)), matrix_(std::move(matrix)), config_(config) {
    validate(platform_);
    validate(matrix_);
    if (!(config_.fallback_penalty_factor > 1.0))
        throw ValidationError("fallback_penalty_factor must be > 1");
    if (config_.migration_overhead_ms < 0.0 || config_.freeze_overhead_ms < 0.0)
        throw ValidationError("overheads must be >= 0");
    if (!(config_.power_sample_period_ms > 0.0))
        throw ValidationError("power_sample_period_ms must be > 0");
    clusters_ = initial_states(platform_);
    trace_.tdp_mw = platform_.tdp_mw;
}

void Simulation::load(WorkloadScenario scenario, Policy& policy) {
    validate(scenario);
    scenario_ = std::move(scenario);
    policy_ = &policy;
    trace_.policy = std::string(cli_name(policy.kind()));
    trace_.scenario = scenario_.name;
}

const RunningTask* Simulation::task(const std::string& id) const {
    auto it = tasks_.find(id);
    return it == tasks_.end() ? nullptr : &it->second;
}

bool Simulation::cluster_free(std::size_t cluster) const {
    return cluster < clusters_.size() && !clusters_[cluster].occupant;
}

double Simulation::task_rate(const RunningTask& t, std::size_t cluster) const {
    return exec_rate(t.dla_fraction, clusters_.at(cluster), config_.fallback_penalty_factor);
}

std::vector<bool> Simulation::occupancy() const {
    std::vector<bool> out;
    out.reserve(clusters_.size());
    for (const auto& c : clusters_)
        out.push_back(c.occupant.has_value());
    return out;
}

double Simulation::predicted_power(const std::vector<bool>& occupied, std::size_t gpu_level) const {
    auto states = clusters_;
    std::vector<double> util(states.size(), 0.0);
    for (std::size_t i = 0; i < states.size(); ++i) {
        util[i] = i < occupied.size() && occupied[i] ? 1.0 : 0.0;
        if (states[i].spec->kind == ClusterKind::GPU)
            states[i].current_level = std::min(gpu_level, states[i].spec->max_level());
    }
    return power_draw(platform_, states, util);
}

double Simulation::current_power() const {
    std::vector<double> util;
    util.reserve(clusters_.size());
    for (const auto& c : clusters_)
        util.push_back(c.occupant ? 1.0 : 0.0);
    return power_draw(platform_, clusters_, util);
}

bool Simulation::finished() const {
    if (completed_.size() < scenario_.requests.size())
        return false;
    return std::all_of(tasks_.begin(), tasks_.end(), [](const auto& kv) { return kv.second.completed; });
}

ControllerEvent Simulation::release(const InferenceRequest& request) {
    if (!request.app)
        throw ValidationError("request '" + request.request_id + "' has no model");
    if (release_ms_.count(request.request_id))
        throw ValidationError("request '" + request.request_id + "' released twice");

    auto& sig = signatures_[request.app->name];
    if (!sig)
        sig = std::make_shared<const SignatureMap>(layer_affinity(request.app, matrix_, config_.affinity_threshold));
    // Signatures depend on layers only; rebind to this request's profile.
    auto bound = std::make_shared<SignatureMap>(*sig);
    bound->app = request.app;
    std::shared_ptr<const SignatureMap> signature = bound;

    std::vector<TaskPlan> plans = policy_ ? policy_->plan_tasks(request, *signature, *this) : std::vector<TaskPlan>{{}};
    if (plans.empty())
        throw IllegalDecision("policy produced no tasks for request '" + request.request_id + "'");

    const double total = request.app->total_work_gflop();
    const double passes = request.app->workload_size / request.app->units_per_pass;
    auto& ids = request_tasks_[request.request_id];
    for (const auto& plan : plans) {
        RunningTask t;
        t.task_id = request.request_id + plan.suffix;
        if (tasks_.count(t.task_id))
            throw ValidationError("duplicate task id '" + t.task_id + "'");
        t.request_id = request.request_id;
        t.app = request.app;
        t.signature = signature;
        t.priority = request.app->priority;
        t.dla_fraction = plan.dla_fraction < 0.0 ? signature->dla_flops_fraction : plan.dla_fraction;
        t.total_work = total * plan.work_fraction;
        t.pass_work = passes > 0.0 ? t.total_work / passes : t.total_work;
        t.pass_boundaries =
            std::make_shared<const std::vector<double>>(pass_boundaries(*request.app, plan.work_fraction));
        ids.push_back(t.task_id);
        tasks_.emplace(t.task_id, std::move(t));
    }
    released_.insert(request.request_id);
    release_ms_[request.request_id] = now_;
    return ControllerEvent{EventKind::ARRIVAL, now_, request.request_id, std::nullopt};
}

std::vector<ControllerEvent> Simulation::release_ready() {
    std::vector<ControllerEvent> events;
    for (const auto& r : ready_requests(scenario_, completed_, released_, now_))
        events.push_back(release(r));
    return events;
}

RunningTask& Simulation::task_mut(const Decision& d) {
    auto it = tasks_.find(d.subject);
    if (it == tasks_.end())
        throw IllegalDecision(fmt::format("{} references unknown task '{}'", to_string(d.action), d.subject));
    if (it->second.completed)
        throw IllegalDecision(fmt::format("{} references completed task '{}'", to_string(d.action), d.subject));
    return it->second;
}

void Simulation::place(RunningTask& t, std::size_t cluster) {
    t.cluster = cluster;
    clusters_[cluster].occupant = t.task_id;
    clusters_[cluster].busy = true;
    if (!t.started) {
        t.started = true;
        t.start_ms = now_;
    }
}

void Simulation::unplace(RunningTask& t) {
    if (!t.cluster)
        return;
    auto& c = clusters_[*t.cluster];
    c.occupant.reset();
    c.busy = false;
    t.cluster.reset();
}

void Simulation::rollback(RunningTask& t) {
    const double b = t.boundary_at_or_below(t.progress);
    t.recomputed_work += t.progress - b;
    t.progress = b;
}

void Simulation::apply_one(const Decision& d, EventKind trigger) {
    DecisionRecord rec;
    rec.time_ms = now_;
    rec.cycle = cycle_;
    rec.trigger = trigger;
    rec.action = d.action;
    rec.subject = d.subject;

    auto cluster_id = [&](std::size_t i) { return platform_.clusters.at(i).id; };
    auto require_target = [&]() {
        if (!d.target || *d.target >= clusters_.size())
            throw IllegalDecision(fmt::format("{} of '{}' has no valid target cluster", to_string(d.action), d.subject));
        return *d.target;
    };
    auto require_free = [&](std::size_t c) {
        if (!cluster_free(c))
            throw IllegalDecision(fmt::format("{} of '{}' onto occupied cluster {} (occupant '{}')",
                                              to_string(d.action), d.subject, cluster_id(c), *clusters_[c].occupant));
    };

    switch (d.action) {
    case Action::MAP: {
        auto& t = task_mut(d);
        const auto target = require_target();
        if (t.cluster)
            throw IllegalDecision("MAP of already placed task '" + t.task_id + "'");
        if (t.frozen && t.started)
            throw IllegalDecision("MAP of frozen task '" + t.task_id + "'; use UNFREEZE");
        require_free(target);
        t.frozen = false;
        place(t, target);
        rec.priority = t.priority;
        rec.target = cluster_id(target);
        break;
    }
    case Action::MIGRATE: {
        auto& t = task_mut(d);
        const auto target = require_target();
        if (!t.running())
            throw IllegalDecision("MIGRATE of task '" + t.task_id + "' that is not running");
        const auto source = *t.cluster;
        if (source == target)
            throw IllegalDecision("MIGRATE of task '" + t.task_id + "' onto its own cluster");
        require_free(target);
        rollback(t);
        t.stall_ms += config_.migration_overhead_ms;
        unplace(t);
        place(t, target);
        rec.priority = t.priority;
        rec.source = cluster_id(source);
        rec.target = cluster_id(target);
        break;
    }
    case Action::FREEZE: {
        auto& t = task_mut(d);
        if (t.running()) {
            rec.source = cluster_id(*t.cluster);
            t.frozen_from = t.cluster;
            unplace(t);
            t.frozen = true;
            t.pending_resume_ms += config_.freeze_overhead_ms;
            t.freeze_started_ms = now_;
        } else if (!t.cluster && !t.frozen && !t.started) {
            // Deferred admission: nothing to suspend yet.
            t.frozen = true;
            t.freeze_started_ms = now_;
        } else {
            throw IllegalDecision("FREEZE of task '" + t.task_id + "' that is already frozen");
        }
        rec.priority = t.priority;
        break;
    }
    case Action::UNFREEZE: {
        auto& t = task_mut(d);
        const auto target = require_target();
        if (!t.frozen)
            throw IllegalDecision("UNFREEZE of task '" + t.task_id + "' that is not frozen");
        require_free(target);
        if (t.started) {
            if (t.frozen_from != target) {
                rollback(t);
                t.stall_ms += config_.migration_overhead_ms;
            }
            t.stall_ms += t.pending_resume_ms + config_.freeze_overhead_ms;
            t.pending_resume_ms = 0.0;
            t.frozen_ms += now_ - t.freeze_started_ms;
            if (t.frozen_from)
                rec.source = cluster_id(*t.frozen_from);
        }
        t.frozen = false;
        t.frozen_from.reset();
        place(t, target);
        rec.priority = t.priority;
        rec.target = cluster_id(target);
        break;
    }
    case Action::SET_FREQ: {
        const auto target = require_target();
        if (!d.level)
            throw IllegalDecision("SET_FREQ on " + cluster_id(target) + " without a level");
        try {
            clusters_[target] = set_frequency(clusters_[target], *d.level);
        } catch (const std::exception& e) {
            throw IllegalDecision(fmt::format("SET_FREQ on {}: {}", cluster_id(target), e.what()));
        }
        rec.target = cluster_id(target);
        rec.level = d.level;
        rec.freq_mhz = clusters_[target].frequency_mhz();
        break;
    }
    }
    trace_.decisions.push_back(std::move(rec));
}

void Simulation::apply_decision(const Decision& decision) {
    deploy({decision}, 0.0);
}

std::vector<std::size_t> Simulation::deploy(const std::vector<Decision>& decisions, double control_overhead_ms,
                                            EventKind trigger) {
    if (decisions.empty())
        return {};
    const auto before = occupancy();
    auto saved_clusters = clusters_;
    auto saved_tasks = tasks_;
    const auto saved_log = trace_.decisions.size();
    try {
        for (const auto& d : decisions)
            apply_one(d, trigger);
    } catch (...) {
        clusters_ = std::move(saved_clusters);
        tasks_ = std::move(saved_tasks);
        trace_.decisions.resize(saved_log);
        throw;
    }

    std::set<std::string> charged;
    for (const auto& d : decisions) {
        if (d.action != Action::MAP && d.action != Action::MIGRATE && d.action != Action::UNFREEZE)
            continue;
        if (charged.insert(d.subject).second)
            tasks_.at(d.subject).stall_ms += control_overhead_ms;
    }

    std::vector<std::size_t> freed;
    const auto after = occupancy();
    for (std::size_t i = 0; i < after.size(); ++i)
        if (before[i] && !after[i])
            freed.push_back(i);
    return freed;
}

void Simulation::log_segment(const RunningTask& t, double t0, double t1, double stall, double work) {
    const double rate = task_rate(t, *t.cluster) / 1000.0;
    const auto& cid = platform_.clusters[*t.cluster].id;
    auto it = last_segment_.find(t.task_id);
    if (it != last_segment_.end()) {
        auto& seg = trace_.segments[it->second];
        if (seg.cluster == cid && seg.rate_gflop_per_ms == rate && seg.t1 == t0) {
            seg.t1 = t1;
            seg.stall_ms += stall;
            seg.work += work;
            return;
        }
    }
    last_segment_[t.task_id] = trace_.segments.size();
    trace_.segments.push_back(ExecSegment{t.task_id, cid, t0, t1, stall, rate, work});
}

void Simulation::advance_to(double t_ms) {
    if (t_ms < now_)
        throw std::logic_error(fmt::format("time moved backwards: {} -> {}", now_, t_ms));
    const double dt = t_ms - now_;
    if (dt > 0.0) {
        for (auto& [id, t] : tasks_) {
            if (!t.running())
                continue;
            const double stall = std::min(t.stall_ms, dt);
            t.stall_ms -= stall;
            const double rate = task_rate(t, *t.cluster) / 1000.0;
            const double work = std::min(rate * (dt - stall), t.remaining());
            t.progress += work;
            log_segment(t, now_, t_ms, stall, work);
        }
    }
    now_ = t_ms;
}

std::optional<double> Simulation::next_completion() const {
    std::optional<double> best;
    for (const auto& [id, t] : tasks_) {
        if (!t.running())
            continue;
        const double rate = task_rate(t, *t.cluster) / 1000.0;
        const double when = now_ + t.stall_ms + std::max(0.0, t.remaining()) / rate;
        if (!best || when < *best)
            best = when;
    }
    return best;
}

void Simulation::complete(RunningTask& t) {
    t.completed = true;
    t.completion_ms = now_;
    unplace(t);
    trace_.tasks.push_back(TaskRecord{t.task_id, t.request_id, t.total_work, t.recomputed_work});

    const auto& ids = request_tasks_.at(t.request_id);
    if (!std::all_of(ids.begin(), ids.end(), [&](const auto& id) { return tasks_.at(id).completed; }))
        return;
    RequestRecord r;
    r.request_id = t.request_id;
    r.model = t.app->name;
    r.priority = t.priority;
    r.preferred = join_preferred(*t.signature);
    r.arrival_ms = release_ms_.at(t.request_id);
    // A request starts when its first part starts executing.
    r.start_ms = tasks_.at(ids.front()).start_ms;
    for (const auto& id : ids) {
        const auto& part = tasks_.at(id);
        r.start_ms = std::min(r.start_ms, part.start_ms);
        r.frozen_ms += part.frozen_ms;
    }
    r.completion_ms = now_;
    completed_.insert(t.request_id);
    trace_.requests.push_back(std::move(r));
}

void Simulation::sample_power() {
    PowerSample s;
    s.time_ms = static_cast<double>(samples_taken_) * config_.power_sample_period_ms;
    s.power_mw = current_power();
    if (auto g = gpu()) {
        s.gpu_level = clusters_[*g].current_level;
        s.gpu_freq_mhz = clusters_[*g].frequency_mhz();
    }
    s.violation = s.power_mw > platform_.tdp_mw;
    trace_.power.push_back(s);
    ++samples_taken_;
}

std::vector<ControllerEvent> Simulation::step() {
    if (finished())
        return {};
    const auto completion = next_completion();
    const auto arrival = next_arrival_after(scenario_, completed_, released_, now_);
    if (!completion && !arrival) {
        std::string stuck;
        for (const auto& [id, t] : tasks_)
            if (!t.completed)
                stuck += fmt::format(" {}{}", id, t.frozen ? "(frozen)" : "(unmapped)");
        for (const auto& r : scenario_.requests)
            if (!released_.count(r.request_id))
                stuck += fmt::format(" {}(unreleased)", r.request_id);
        throw DeadlockError(fmt::format("no runnable work at t={} ms; stuck:{}", now_, stuck));
    }
    double next = std::numeric_limits<double>::infinity();
    if (completion)
        next = std::min(next, *completion);
    if (arrival)
        next = std::min(next, *arrival);
    next = std::min(next, static_cast<double>(samples_taken_) * config_.power_sample_period_ms);
    advance_to(std::max(next, now_));

    std::vector<ControllerEvent> events;
    for (auto& [id, t] : tasks_) {
        if (!t.running() || t.stall_ms > 1e-12 || t.remaining() > work_tolerance(t.total_work))
            continue;
        const auto cluster = *t.cluster;
        t.progress = t.total_work;
        complete(t);
        events.push_back(ControllerEvent{EventKind::COMPLETION, now_, id, cluster});
        events.push_back(ControllerEvent{EventKind::CLUSTER_FREED, now_, platform_.clusters[cluster].id, cluster});
    }
    for (auto& e : release_ready())
        events.push_back(std::move(e));
    return events;
}

void Simulation::dispatch(std::vector<ControllerEvent> events) {
    std::deque<ControllerEvent> queue(events.begin(), events.end());
    std::size_t cycles_here = 0;
    while (!queue.empty()) {
        const ControllerEvent e = std::move(queue.front());
        queue.pop_front();
        trace_.events.push_back(EventRecord{e.timestamp_ms, e.kind, e.payload});
        if (e.kind == EventKind::COMPLETION || !policy_)
            continue;
        if (++cycles_here > config_.max_cycles_per_instant)
            throw DeadlockError(fmt::format("policy did not settle at t={} ms", now_));
        ++cycle_;
        const auto decisions = policy_->decide(e, *this);
        const auto freed = deploy(decisions, policy_->control_overhead_ms(platform_), e.kind);
        policy_->on_deployed(decisions, *this);
        for (auto c : freed)
            queue.push_back(ControllerEvent{EventKind::CLUSTER_FREED, now_, platform_.clusters[c].id, c});
    }
}

Trace Simulation::run() {
    if (!policy_)
        throw std::logic_error("Simulation::run called before load");
    dispatch(release_ready());
    while (!finished()) {
        if (static_cast<double>(samples_taken_) * config_.power_sample_period_ms <= now_)
            sample_power();
        dispatch(step());
    }
    return trace_;
}

Trace run(const WorkloadScenario& scenario, const PlatformSpec& platform, const CompatibilityMatrix& matrix,
          Policy& policy, const SimConfig& config) {
    Simulation sim(platform, matrix, config);
    sim.load(scenario, policy);
    return sim.run();
}

} // namespace twill
