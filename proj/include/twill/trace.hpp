#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twill/decision.hpp"

namespace twill {

struct DecisionRecord {
    double time_ms{0.0};
    std::size_t cycle{0};
    EventKind trigger{EventKind::ARRIVAL};
    Action action{Action::MAP};
    std::string subject;
    int priority{0}; // subject task priority; 0 for SET_FREQ
    std::string source;
    std::string target;
    std::optional<std::size_t> level;
    double freq_mhz{0.0};
};

struct RequestRecord {
    std::string request_id;
    std::string model;
    int priority{0};
    std::string preferred; // e.g. "DLA|GPU"
    double arrival_ms{0.0}; // release time
    double start_ms{0.0};
    double completion_ms{0.0};
    double frozen_ms{0.0};

    [[nodiscard]] double waiting_ms() const { return start_ms - arrival_ms; }
    [[nodiscard]] double latency_ms() const { return completion_ms - arrival_ms; }
};

struct PowerSample {
    double time_ms{0.0};
    double power_mw{0.0};
    std::size_t gpu_level{0};
    double gpu_freq_mhz{0.0};
    bool violation{false};
};

struct EventRecord {
    double time_ms{0.0};
    EventKind kind{EventKind::ARRIVAL};
    std::string payload;
};

// A stretch of constant-rate execution of one task on one cluster.
struct ExecSegment {
    std::string task_id;
    std::string cluster;
    double t0{0.0};
    double t1{0.0};
    double stall_ms{0.0};
    double rate_gflop_per_ms{0.0};
    double work{0.0};
};

struct TaskRecord {
    std::string task_id;
    std::string request_id;
    double total_work{0.0};
    double recomputed_work{0.0};
};

struct Summary {
    std::string policy;
    std::string scenario;
    double tdp_mw{0.0};
    double makespan_ms{0.0};
    double total_waiting_ms{0.0};
    double violation_fraction{0.0};
    std::size_t samples{0};
    std::vector<RequestRecord> requests;

    [[nodiscard]] const RequestRecord* find(std::string_view request_id) const;
};

struct Trace {
    std::string policy;
    std::string scenario;
    double tdp_mw{0.0};
    std::vector<DecisionRecord> decisions;
    std::vector<RequestRecord> requests; // in completion order
    std::vector<PowerSample> power;
    std::vector<EventRecord> events;
    std::vector<ExecSegment> segments;
    std::vector<TaskRecord> tasks;

    [[nodiscard]] Summary summarize() const;
    [[nodiscard]] const RequestRecord* request(std::string_view id) const;
};

// Makespan, waiting and violation fraction from plain records.
Summary summarize(std::string policy, std::string scenario, double tdp_mw, std::vector<RequestRecord> requests,
                  const std::vector<PowerSample>& power);

void write_decisions_csv(std::ostream& os, const Trace& trace);
void write_requests_csv(std::ostream& os, const Trace& trace);
void write_power_csv(std::ostream& os, const Trace& trace);
void write_events_csv(std::ostream& os, const Trace& trace);
std::string summary_json(const Summary& summary);

// Rebuilds a summary from the request and power CSV texts alone.
Summary summarize_csv(std::string_view requests_csv, std::string_view power_csv, double tdp_mw,
                      std::string policy = {}, std::string scenario = {});

} // namespace twill
