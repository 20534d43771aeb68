#include "kvsched/core.hpp"

#include <algorithm>
#include <sstream>

namespace kvsched {

Instance::Instance(std::vector<Request> requests, Tokens memory_limit)
    : requests_(std::move(requests)), memory_limit_(memory_limit) {
    if (memory_limit_ < 1) {
        throw ValidationError("memory_limit must be >= 1");
    }
    index_.reserve(requests_.size());
    for (std::size_t i = 0; i < requests_.size(); ++i) {
        const Request& r = requests_[i];
        if (r.s < 1 || r.o < 1) {
            throw ValidationError("request " + std::to_string(r.id) + ": s and o must be >= 1");
        }
        if (r.s + r.o > memory_limit_) {
            throw ValidationError("request " + std::to_string(r.id) + ": s + o = " +
                                  std::to_string(r.s + r.o) + " exceeds memory limit " +
                                  std::to_string(memory_limit_));
        }
        if (!index_.emplace(r.id, i).second) {
            throw ValidationError("duplicate request id " + std::to_string(r.id));
        }
    }
}

std::size_t Instance::index_of(RequestId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw ValidationError("unknown request id " + std::to_string(id));
    }
    return it->second;
}

Time StartSchedule::start_of(RequestId id) const {
    auto it = starts.find(id);
    if (it == starts.end()) {
        throw ValidationError("schedule has no start for request " + std::to_string(id));
    }
    return it->second;
}

std::vector<RequestId> BatchPlan::flatten() const {
    std::vector<RequestId> out;
    for (const auto& batch : batches) {
        out.insert(out.end(), batch.begin(), batch.end());
    }
    return out;
}

std::string ValidationReport::message() const {
    if (ok()) {
        return "ok";
    }
    std::ostringstream os;
    os << "memory violation at t=" << violation->t << ": usage " << violation->usage
       << " exceeds limit " << violation->limit << " by " << violation->overflow();
    return os.str();
}

bool operator<(const FMetric& a, const FMetric& b) {
    using u128 = unsigned __int128;
    return static_cast<u128>(a.sum_o) * (static_cast<u128>(b.count) * b.count) <
           static_cast<u128>(b.sum_o) * (static_cast<u128>(a.count) * a.count);
}

bool operator==(const FMetric& a, const FMetric& b) {
    using u128 = unsigned __int128;
    return static_cast<u128>(a.sum_o) * (static_cast<u128>(b.count) * b.count) ==
           static_cast<u128>(b.sum_o) * (static_cast<u128>(a.count) * a.count);
}

Tokens memory_usage_at(const Instance& instance, const StartSchedule& schedule, Time t_star) {
    Tokens usage = 0;
    for (const auto& [id, p] : schedule.starts) {
        const Request& r = instance.request(id);  // throws on unknown id
        if (t_star > p && t_star <= p + r.o) {
            usage += r.s + (t_star - p);
        }
    }
    return usage;
}

namespace {

struct SweepEvent {
    Time t;
    bool enter;              // enter at t = p + 1, leave after t = p + o
    std::int64_t base;       // s - p
};

}  // namespace

ValidationReport validate_schedule(const Instance& instance, const StartSchedule& schedule) {
    if (schedule.starts.size() != instance.size()) {
        throw ValidationError("schedule covers " + std::to_string(schedule.starts.size()) +
                              " requests, instance has " + std::to_string(instance.size()));
    }

    Time makespan = 0;
    std::vector<SweepEvent> events;
    events.reserve(2 * instance.size());
    for (const auto& [id, p] : schedule.starts) {
        const Request& r = instance.request(id);
        makespan = std::max(makespan, p + r.o);
        const std::int64_t base = static_cast<std::int64_t>(r.s) - static_cast<std::int64_t>(p);
        events.push_back({p + 1, true, base});
        events.push_back({p + r.o + 1, false, base});
    }
    std::sort(events.begin(), events.end(),
              [](const SweepEvent& a, const SweepEvent& b) { return a.t < b.t; });

    // usage(t) = sum over active of (s - p) + t * |active|
    std::int64_t base_sum = 0;
    std::int64_t active = 0;
    std::size_t next = 0;
    const Tokens limit = instance.memory_limit();
    for (Time t = 1; t <= makespan; ++t) {
        while (next < events.size() && events[next].t == t) {
            if (events[next].enter) {
                base_sum += events[next].base;
                ++active;
            } else {
                base_sum -= events[next].base;
                --active;
            }
            ++next;
        }
        const std::int64_t usage = base_sum + static_cast<std::int64_t>(t) * active;
        if (usage > static_cast<std::int64_t>(limit)) {
            return {MemoryViolation{t, static_cast<Tokens>(usage), limit}};
        }
    }
    return {};
}

bool batch_feasible_exact(std::span<const Request> batch, Tokens memory_limit) {
    // Usage of a co-started batch is maximized at the completion checkpoints,
    // i.e. the distinct o-values.
    std::vector<Tokens> checkpoints;
    checkpoints.reserve(batch.size());
    for (const Request& r : batch) {
        checkpoints.push_back(r.o);
    }
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());

    for (Tokens v : checkpoints) {
        Tokens usage = 0;
        for (const Request& r : batch) {
            if (r.o >= v) {
                usage += r.s + v;
            }
        }
        if (usage > memory_limit) {
            return false;
        }
    }
    return true;
}

bool batch_feasible_conservative(std::span<const Request> batch, Tokens memory_limit) {
    Tokens total = 0;
    for (const Request& r : batch) {
        total += r.footprint();
    }
    return total <= memory_limit;
}

FMetric f_metric(std::span<const Request> batch) {
    if (batch.empty()) {
        throw std::domain_error("f_metric of an empty batch");
    }
    FMetric f;
    f.count = batch.size();
    for (const Request& r : batch) {
        f.sum_o += r.o;
    }
    return f;
}

Metrics compute_metrics(const Instance& instance, const StartSchedule& schedule) {
    ValidationReport report = validate_schedule(instance, schedule);
    if (!report.ok()) {
        throw ValidationError("invalid schedule: " + report.message());
    }

    Metrics m;
    for (const auto& [id, p] : schedule.starts) {
        const Request& r = instance.request(id);
        const Time c = p + r.o;
        m.tel += c;
        m.makespan = std::max(m.makespan, c);
    }
    m.mean_latency = instance.empty() ? 0.0 : static_cast<double>(m.tel) / static_cast<double>(instance.size());

    // Peak and mean utilization via the same sweep as validation.
    std::vector<SweepEvent> events;
    events.reserve(2 * instance.size());
    for (const auto& [id, p] : schedule.starts) {
        const Request& r = instance.request(id);
        const std::int64_t base = static_cast<std::int64_t>(r.s) - static_cast<std::int64_t>(p);
        events.push_back({p + 1, true, base});
        events.push_back({p + r.o + 1, false, base});
    }
    std::sort(events.begin(), events.end(),
              [](const SweepEvent& a, const SweepEvent& b) { return a.t < b.t; });

    std::int64_t base_sum = 0;
    std::int64_t active = 0;
    std::size_t next = 0;
    double utilization_sum = 0.0;
    std::uint64_t busy_steps = 0;
    for (Time t = 1; t <= m.makespan; ++t) {
        while (next < events.size() && events[next].t == t) {
            if (events[next].enter) {
                base_sum += events[next].base;
                ++active;
            } else {
                base_sum -= events[next].base;
                --active;
            }
            ++next;
        }
        const Tokens usage = static_cast<Tokens>(base_sum + static_cast<std::int64_t>(t) * active);
        if (usage > 0) {
            utilization_sum += static_cast<double>(usage) / static_cast<double>(instance.memory_limit());
            ++busy_steps;
        }
        m.peak_memory = std::max(m.peak_memory, usage);
    }
    m.mean_utilization = busy_steps == 0 ? 0.0 : utilization_sum / static_cast<double>(busy_steps);
    return m;
}

}  // namespace kvsched
