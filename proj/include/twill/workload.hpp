#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "twill/interpreter.hpp"

namespace twill {

using RequestId = std::string;

struct InferenceRequest {
    RequestId request_id;
    std::shared_ptr<const AppProfile> app;
    // Absolute release time. For dependency-triggered requests this is a lower
    // bound; the request is released once every dependency has completed.
    double arrival_ms{0.0};
    std::set<RequestId> depends_on;
};

struct WorkloadScenario {
    std::string name;
    std::string description;
    std::string platform_ref;
    std::uint64_t seed{0};
    std::vector<InferenceRequest> requests;

    [[nodiscard]] const InferenceRequest* find(const RequestId& id) const;
};

// Resolves a model name to a descriptor. The shipped implementation reads
// <dir>/<name>.json and caches the text.
class ModelRepository {
  public:
    explicit ModelRepository(std::string directory);

    [[nodiscard]] bool has(const std::string& name) const;
    AppProfile load(const std::string& name, std::optional<int> priority, std::optional<TaskKind> kind,
                    std::optional<double> workload_size) const;

    [[nodiscard]] const std::string& directory() const { return directory_; }

  private:
    const std::string& descriptor_text(const std::string& name) const;

    std::string directory_;
    mutable std::map<std::string, std::string> cache_;
};

// Throws ValidationError on duplicate ids, dangling dependencies and cycles.
void validate(const WorkloadScenario& scenario);

WorkloadScenario load_mix(std::string_view text, const ModelRepository& models);
WorkloadScenario load_mix_file(const std::string& path, const ModelRepository& models);

// Requests released at `now_ms`: arrival passed, dependencies completed, not
// yet released. Ordered by (arrival_ms, request_id).
std::vector<InferenceRequest> ready_requests(const WorkloadScenario& scenario,
                                             const std::set<RequestId>& completed,
                                             const std::set<RequestId>& released, double now_ms);

// Earliest absolute arrival strictly after `now_ms` among unreleased requests
// whose dependencies are already complete.
std::optional<double> next_arrival_after(const WorkloadScenario& scenario, const std::set<RequestId>& completed,
                                         const std::set<RequestId>& released, double now_ms);

} // namespace twill
