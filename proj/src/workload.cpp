#include "twill/workload.hpp"

#include <algorithm>
#include <filesystem>

#include "json_util.hpp"

namespace twill {

using detail::json;

const InferenceRequest* WorkloadScenario::find(const RequestId& id) const {
    for (const auto& r : requests)
        if (r.request_id == id)
            return &r;
    return nullptr;
}

ModelRepository::ModelRepository(std::string directory) : directory_(std::move(directory)) {}

bool ModelRepository::has(const std::string& name) const {
    if (cache_.count(name))
        return true;
    return std::filesystem::exists(std::filesystem::path(directory_) / (name + ".json"));
}

const std::string& ModelRepository::descriptor_text(const std::string& name) const {
    auto it = cache_.find(name);
    if (it != cache_.end())
        return it->second;
    if (!has(name))
        throw ValidationError("unknown model name '" + name + "' (no descriptor in " + directory_ + ")");
    const auto path = (std::filesystem::path(directory_) / (name + ".json")).string();
    return cache_.emplace(name, detail::read_file(path)).first->second;
}

AppProfile ModelRepository::load(const std::string& name, std::optional<int> priority,
                                 std::optional<TaskKind> kind, std::optional<double> workload_size) const {
    const std::string& text = descriptor_text(name);
    const AppProfile defaults = parse_model(text);
    const TaskKind k = kind.value_or(defaults.task_kind);
    return parse_model(text, priority.value_or(defaults.priority), k,
                       workload_size.value_or(default_workload_size(k)));
}

void validate(const WorkloadScenario& scenario) {
    std::map<RequestId, const InferenceRequest*> by_id;
    for (const auto& r : scenario.requests) {
        if (r.request_id.empty())
            throw ValidationError("request id must be nonempty");
        if (!by_id.emplace(r.request_id, &r).second)
            throw ValidationError("duplicate request id '" + r.request_id + "'");
        if (!r.app)
            throw ValidationError("request '" + r.request_id + "' has no model");
        if (r.arrival_ms < 0.0)
            throw ValidationError("request '" + r.request_id + "': arrival_ms must be >= 0");
    }
    for (const auto& r : scenario.requests)
        for (const auto& dep : r.depends_on)
            if (!by_id.count(dep))
                throw ValidationError("request '" + r.request_id + "' depends on unknown request '" + dep + "'");

    // Iterative DFS with colors; reports the first back edge found.
    enum class Color { White, Grey, Black };
    std::map<RequestId, Color> color;
    for (const auto& [id, _] : by_id)
        color[id] = Color::White;
    for (const auto& [root, _] : by_id) {
        if (color[root] != Color::White)
            continue;
        std::vector<std::pair<RequestId, std::set<RequestId>::const_iterator>> stack;
        color[root] = Color::Grey;
        stack.emplace_back(root, by_id[root]->depends_on.begin());
        while (!stack.empty()) {
            auto& [node, it] = stack.back();
            if (it == by_id[node]->depends_on.end()) {
                color[node] = Color::Black;
                stack.pop_back();
                continue;
            }
            const RequestId next = *it++;
            if (color[next] == Color::Grey)
                throw ValidationError("dependency cycle detected at request '" + next + "'");
            if (color[next] == Color::White) {
                color[next] = Color::Grey;
                stack.emplace_back(next, by_id[next]->depends_on.begin());
            }
        }
    }
}

WorkloadScenario load_mix(std::string_view text, const ModelRepository& models) {
    constexpr std::string_view what = "scenario";
    const json doc = detail::parse_json(text, what);
    WorkloadScenario s;
    s.name = detail::field<std::string>(doc, "name", what);
    s.description = detail::field_or<std::string>(doc, "description", "", what);
    s.platform_ref = detail::field_or<std::string>(doc, "platform", "", what);
    s.seed = detail::field_or<std::uint64_t>(doc, "seed", 0, what);

    const json& reqs = detail::require(doc, "requests", what);
    if (!reqs.is_array())
        throw ParseError("scenario: 'requests' must be an array");
    for (const auto& r : reqs) {
        InferenceRequest req;
        req.request_id = detail::field<std::string>(r, "id", what);
        const auto model = detail::field<std::string>(r, "model", what);
        std::optional<int> priority;
        if (r.contains("priority"))
            priority = detail::field<int>(r, "priority", what);
        std::optional<TaskKind> kind;
        if (r.contains("task_kind"))
            kind = task_kind_from_string(detail::field<std::string>(r, "task_kind", what));
        std::optional<double> size;
        if (r.contains("workload_size"))
            size = detail::field<double>(r, "workload_size", what);
        req.depends_on = detail::field_or<std::set<std::string>>(r, "depends_on", {}, what);
        if (!r.contains("arrival_ms") && req.depends_on.empty())
            throw ValidationError("request '" + req.request_id + "' needs arrival_ms or depends_on");
        req.arrival_ms = detail::field_or<double>(r, "arrival_ms", 0.0, what);
        req.app = std::make_shared<const AppProfile>(models.load(model, priority, kind, size));
        s.requests.push_back(std::move(req));
    }
    validate(s);
    return s;
}

WorkloadScenario load_mix_file(const std::string& path, const ModelRepository& models) {
    return load_mix(detail::read_file(path), models);
}

namespace {

bool deps_done(const InferenceRequest& r, const std::set<RequestId>& completed) {
    return std::includes(completed.begin(), completed.end(), r.depends_on.begin(), r.depends_on.end());
}

} // namespace

std::vector<InferenceRequest> ready_requests(const WorkloadScenario& scenario,
                                             const std::set<RequestId>& completed,
                                             const std::set<RequestId>& released, double now_ms) {
    std::vector<InferenceRequest> out;
    for (const auto& r : scenario.requests) {
        if (released.count(r.request_id) || completed.count(r.request_id))
            continue;
        if (r.arrival_ms <= now_ms && deps_done(r, completed))
            out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.arrival_ms != b.arrival_ms ? a.arrival_ms < b.arrival_ms : a.request_id < b.request_id;
    });
    return out;
}

std::optional<double> next_arrival_after(const WorkloadScenario& scenario, const std::set<RequestId>& completed,
                                         const std::set<RequestId>& released, double now_ms) {
    std::optional<double> best;
    for (const auto& r : scenario.requests) {
        if (released.count(r.request_id) || r.arrival_ms <= now_ms || !deps_done(r, completed))
            continue;
        if (!best || r.arrival_ms < *best)
            best = r.arrival_ms;
    }
    return best;
}

} // namespace twill
