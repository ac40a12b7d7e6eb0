#include "twill/trace.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "json_util.hpp"
#include "twill/error.hpp"

namespace twill {

using detail::json;

std::string_view to_string(Action a) {
    switch (a) {
    case Action::MAP: return "MAP";
    case Action::MIGRATE: return "MIGRATE";
    case Action::FREEZE: return "FREEZE";
    case Action::UNFREEZE: return "UNFREEZE";
    case Action::SET_FREQ: return "SET_FREQ";
    }
    return "?";
}

std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::ARRIVAL: return "ARRIVAL";
    case EventKind::CLUSTER_FREED: return "CLUSTER_FREED";
    case EventKind::COMPLETION: return "COMPLETION";
    }
    return "?";
}

const RequestRecord* Summary::find(std::string_view request_id) const {
    for (const auto& r : requests)
        if (r.request_id == request_id)
            return &r;
    return nullptr;
}

const RequestRecord* Trace::request(std::string_view id) const {
    for (const auto& r : requests)
        if (r.request_id == id)
            return &r;
    return nullptr;
}

Summary summarize(std::string policy, std::string scenario, double tdp_mw, std::vector<RequestRecord> requests,
                  const std::vector<PowerSample>& power) {
    Summary s;
    s.policy = std::move(policy);
    s.scenario = std::move(scenario);
    s.tdp_mw = tdp_mw;
    if (!requests.empty()) {
        double first = requests.front().arrival_ms, last = requests.front().completion_ms;
        for (const auto& r : requests) {
            first = std::min(first, r.arrival_ms);
            last = std::max(last, r.completion_ms);
            s.total_waiting_ms += r.waiting_ms();
        }
        s.makespan_ms = last - first;
    }
    s.samples = power.size();
    const auto over = std::count_if(power.begin(), power.end(), [&](const auto& p) { return p.power_mw > tdp_mw; });
    s.violation_fraction = power.empty() ? 0.0 : static_cast<double>(over) / static_cast<double>(power.size());
    s.requests = std::move(requests);
    return s;
}

Summary Trace::summarize() const {
    return twill::summarize(policy, scenario, tdp_mw, requests, power);
}

void write_decisions_csv(std::ostream& os, const Trace& trace) {
    os << "time_ms,cycle,trigger,action,subject,priority,source,target,level,freq_mhz\n";
    for (const auto& d : trace.decisions) {
        fmt::print(os, "{},{},{},{},{},{},{},{},{},{}\n", d.time_ms, d.cycle, to_string(d.trigger),
                   to_string(d.action), d.subject, d.priority, d.source, d.target,
                   d.level ? std::to_string(*d.level) : std::string{},
                   d.level ? fmt::format("{}", d.freq_mhz) : std::string{});
    }
}

void write_requests_csv(std::ostream& os, const Trace& trace) {
    os << "request_id,model,priority,preferred,arrival_ms,start_ms,completion_ms,latency_ms,waiting_ms,frozen_ms\n";
    for (const auto& r : trace.requests) {
        fmt::print(os, "{},{},{},{},{},{},{},{},{},{}\n", r.request_id, r.model, r.priority, r.preferred,
                   r.arrival_ms, r.start_ms, r.completion_ms, r.latency_ms(), r.waiting_ms(), r.frozen_ms);
    }
}

void write_power_csv(std::ostream& os, const Trace& trace) {
    os << "time_ms,power_mw,gpu_level,gpu_freq_mhz,violation\n";
    for (const auto& p : trace.power)
        fmt::print(os, "{},{},{},{},{}\n", p.time_ms, p.power_mw, p.gpu_level, p.gpu_freq_mhz, p.violation ? 1 : 0);
}

void write_events_csv(std::ostream& os, const Trace& trace) {
    os << "time_ms,kind,payload\n";
    for (const auto& e : trace.events)
        fmt::print(os, "{},{},{}\n", e.time_ms, to_string(e.kind), e.payload);
}

std::string summary_json(const Summary& s) {
    json doc;
    doc["policy"] = s.policy;
    doc["scenario"] = s.scenario;
    doc["tdp_mw"] = s.tdp_mw;
    doc["makespan_ms"] = s.makespan_ms;
    doc["total_waiting_ms"] = s.total_waiting_ms;
    doc["violation_fraction"] = s.violation_fraction;
    doc["power_samples"] = s.samples;
    doc["requests"] = json::array();
    for (const auto& r : s.requests) {
        doc["requests"].push_back({{"request_id", r.request_id},
                                   {"model", r.model},
                                   {"priority", r.priority},
                                   {"arrival_ms", r.arrival_ms},
                                   {"start_ms", r.start_ms},
                                   {"completion_ms", r.completion_ms},
                                   {"latency_ms", r.latency_ms()},
                                   {"waiting_ms", r.waiting_ms()},
                                   {"frozen_ms", r.frozen_ms}});
    }
    return doc.dump(2) + "\n";
}

namespace {

std::vector<std::vector<std::string_view>> csv_rows(std::string_view text, std::size_t columns, std::string_view what) {
    std::vector<std::vector<std::string_view>> rows;
    bool header = true;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        if (line.empty())
            continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string_view> cells;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            cells.push_back(line.substr(pos, comma - pos));
            if (comma == std::string_view::npos)
                break;
            pos = comma + 1;
        }
        if (cells.size() != columns)
            throw ParseError(fmt::format("{}: expected {} columns, got {}", what, columns, cells.size()));
        rows.push_back(std::move(cells));
    }
    return rows;
}

template <typename T>
T number(std::string_view cell, std::string_view what) {
    T value{};
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw ParseError(fmt::format("{}: bad number '{}'", what, cell));
    return value;
}

} // namespace

Summary summarize_csv(std::string_view requests_csv, std::string_view power_csv, double tdp_mw, std::string policy,
                      std::string scenario) {
    std::vector<RequestRecord> requests;
    for (const auto& c : csv_rows(requests_csv, 10, "requests csv")) {
        RequestRecord r;
        r.request_id = std::string(c[0]);
        r.model = std::string(c[1]);
        r.priority = number<int>(c[2], "requests csv");
        r.preferred = std::string(c[3]);
        r.arrival_ms = number<double>(c[4], "requests csv");
        r.start_ms = number<double>(c[5], "requests csv");
        r.completion_ms = number<double>(c[6], "requests csv");
        r.frozen_ms = number<double>(c[9], "requests csv");
        requests.push_back(std::move(r));
    }
    std::vector<PowerSample> power;
    for (const auto& c : csv_rows(power_csv, 5, "power csv")) {
        PowerSample p;
        p.time_ms = number<double>(c[0], "power csv");
        p.power_mw = number<double>(c[1], "power csv");
        p.gpu_level = number<std::size_t>(c[2], "power csv");
        p.gpu_freq_mhz = number<double>(c[3], "power csv");
        p.violation = c[4] == "1";
        power.push_back(p);
    }
    return summarize(std::move(policy), std::move(scenario), tdp_mw, std::move(requests), power);
}

} // namespace twill
