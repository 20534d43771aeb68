#include "kvsched/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <deque>
#include <map>
#include <ostream>

namespace kvsched {

namespace {

std::atomic<std::uint64_t> g_safety_checks{0};

void check_step_memory(Tokens used, Tokens limit, Time step) {
    g_safety_checks.fetch_add(1, std::memory_order_relaxed);
    if (used > limit) {
        throw std::logic_error("simulator invariant broken: memory " + std::to_string(used) +
                               " > " + std::to_string(limit) + " at step " + std::to_string(step));
    }
}

// Active requests aggregated by completion time. Usage at a time point t* is
//   sum over members with c >= t* of (s - p)  +  t* * count{c >= t*},
// which only needs one reverse walk over the checkpoints.
class CheckpointSet {
public:
    void insert(Time completion, std::int64_t base) {
        auto& entry = checkpoints_[completion];
        entry.count += 1;
        entry.base_sum += base;
    }

    void erase(Time completion, std::int64_t base) {
        auto it = checkpoints_.find(completion);
        assert(it != checkpoints_.end());
        it->second.count -= 1;
        it->second.base_sum -= base;
        if (it->second.count == 0) {
            checkpoints_.erase(it);
        }
    }

    // True iff adding a request starting at `start` with prefill `s` and
    // output `o` keeps usage within `limit` at every completion checkpoint of
    // the tentative set. Walks the merged checkpoints in descending order,
    // accumulating members whose completion is >= the checkpoint at hand.
    bool fits(Time start, Tokens s, Tokens o, Tokens limit) const {
        const Time cand_c = start + o;
        const std::int64_t cand_base = static_cast<std::int64_t>(s) - static_cast<std::int64_t>(start);
        std::int64_t cum_count = 0;
        std::int64_t cum_base = 0;
        bool cand_added = false;

        auto it = checkpoints_.rbegin();
        const auto rend = checkpoints_.rend();
        while (it != rend || !cand_added) {
            Time t;
            if (!cand_added && (it == rend || cand_c > it->first)) {
                cum_count += 1;
                cum_base += cand_base;
                cand_added = true;
                t = cand_c;
            } else {
                if (!cand_added && cand_c == it->first) {
                    cum_count += 1;
                    cum_base += cand_base;
                    cand_added = true;
                }
                cum_count += it->second.count;
                cum_base += it->second.base_sum;
                t = it->first;
                ++it;
            }
            if (cum_base + static_cast<std::int64_t>(t) * cum_count > static_cast<std::int64_t>(limit)) {
                return false;
            }
        }
        return true;
    }

    // Usage of the current set at time point t*.
    std::int64_t usage(Time t_star) const {
        std::int64_t count = 0;
        std::int64_t base = 0;
        for (auto it = checkpoints_.lower_bound(t_star); it != checkpoints_.end(); ++it) {
            count += it->second.count;
            base += it->second.base_sum;
        }
        return base + static_cast<std::int64_t>(t_star) * count;
    }

private:
    struct Entry {
        std::int64_t count = 0;
        std::int64_t base_sum = 0;
    };
    std::map<Time, Entry> checkpoints_;
};

struct ActiveRequest {
    std::size_t index;
    Time start;
};

}  // namespace

std::uint64_t sim_safety_checks() { return g_safety_checks.load(std::memory_order_relaxed); }

SimResult execute_ordered(const Instance& instance, std::span<const RequestId> order,
                          ExecutionPolicy policy) {
    if (order.size() != instance.size()) {
        throw ValidationError("order covers " + std::to_string(order.size()) +
                              " requests, instance has " + std::to_string(instance.size()));
    }
    std::vector<char> seen(instance.size(), 0);
    std::deque<std::size_t> pending;
    for (RequestId id : order) {
        const std::size_t idx = instance.index_of(id);
        if (seen[idx]) {
            throw ValidationError("order repeats request id " + std::to_string(id));
        }
        seen[idx] = 1;
        pending.push_back(idx);
    }

    const auto& requests = instance.requests();
    const Tokens limit = instance.memory_limit();

    SimResult result;
    std::vector<ActiveRequest> active;
    CheckpointSet checkpoints;

    Time t = 0;
    while (true) {
        // Retire requests that completed at or before t.
        std::erase_if(active, [&](const ActiveRequest& a) {
            if (a.start + requests[a.index].o <= t) {
                checkpoints.erase(a.start + requests[a.index].o,
                                  static_cast<std::int64_t>(requests[a.index].s) -
                                      static_cast<std::int64_t>(a.start));
                return true;
            }
            return false;
        });
        if (pending.empty() && active.empty()) {
            break;
        }

        TraceStep step;
        step.step = t;

        auto it = pending.begin();
        while (it != pending.end()) {
            const Request& r = requests[*it];
            if (checkpoints.fits(t, r.s, r.o, limit)) {
                checkpoints.insert(t + r.o, static_cast<std::int64_t>(r.s) - static_cast<std::int64_t>(t));
                active.push_back({*it, t});
                result.schedule.starts[r.id] = t;
                step.admitted.push_back(r.id);
                it = pending.erase(it);
            } else if (policy.admission == AdmissionPolicy::prefix_blocking) {
                break;
            } else {
                ++it;
            }
        }

        step.active.reserve(active.size());
        for (const ActiveRequest& a : active) {
            step.active.push_back(requests[a.index].id);
        }
        step.memory_used = static_cast<Tokens>(checkpoints.usage(t + 1));
        check_step_memory(step.memory_used, limit, t);
        result.trace.steps.push_back(std::move(step));
        ++t;
    }
    return result;
}

SimTrace trace_from_schedule(const Instance& instance, const StartSchedule& schedule) {
    SimTrace trace;
    if (instance.empty()) {
        return trace;
    }

    Time makespan = 0;
    for (const auto& [id, p] : schedule.starts) {
        makespan = std::max(makespan, p + instance.request(id).o);
    }

    // Bucket requests by start time, then sweep steps carrying the active set.
    std::map<Time, std::vector<RequestId>> by_start;
    for (const auto& [id, p] : schedule.starts) {
        by_start[p].push_back(id);
    }

    std::vector<std::pair<RequestId, Time>> active;  // (id, completion)
    std::int64_t base_sum = 0;
    std::int64_t active_count = 0;
    for (Time t = 0; t < makespan; ++t) {
        TraceStep step;
        step.step = t;
        auto it = by_start.find(t);
        if (it != by_start.end()) {
            step.admitted = it->second;
            std::sort(step.admitted.begin(), step.admitted.end());
            for (RequestId id : step.admitted) {
                const Request& r = instance.request(id);
                active.emplace_back(id, t + r.o);
                base_sum += static_cast<std::int64_t>(r.s) - static_cast<std::int64_t>(t);
                ++active_count;
            }
        }
        std::erase_if(active, [&](const auto& entry) {
            if (entry.second <= t) {
                const Request& r = instance.request(entry.first);
                base_sum -= static_cast<std::int64_t>(r.s) -
                            static_cast<std::int64_t>(entry.second - r.o);
                --active_count;
                return true;
            }
            return false;
        });
        for (const auto& [id, c] : active) {
            step.active.push_back(id);
        }
        step.memory_used = static_cast<Tokens>(base_sum + static_cast<std::int64_t>(t + 1) * active_count);
        check_step_memory(step.memory_used, instance.memory_limit(), t);
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

SimResult execute_sequential_batches(const Instance& instance, const BatchPlan& plan) {
    std::vector<char> seen(instance.size(), 0);
    std::size_t covered = 0;
    for (const auto& batch : plan.batches) {
        for (RequestId id : batch) {
            const std::size_t idx = instance.index_of(id);
            if (seen[idx]) {
                throw ValidationError("plan repeats request id " + std::to_string(id));
            }
            seen[idx] = 1;
            ++covered;
        }
    }
    if (covered != instance.size()) {
        throw ValidationError("plan covers " + std::to_string(covered) + " of " +
                              std::to_string(instance.size()) + " requests");
    }

    SimResult result;
    Time batch_start = 0;
    for (std::size_t k = 0; k < plan.batches.size(); ++k) {
        const auto& batch = plan.batches[k];
        if (batch.empty()) {
            continue;
        }
        std::vector<Request> members;
        members.reserve(batch.size());
        Tokens max_o = 0;
        for (RequestId id : batch) {
            members.push_back(instance.request(id));
            max_o = std::max(max_o, members.back().o);
        }
        if (!batch_feasible_exact(members, instance.memory_limit())) {
            throw ValidationError("batch " + std::to_string(k) + " of the plan is infeasible");
        }
        for (RequestId id : batch) {
            result.schedule.starts[id] = batch_start;
        }
        batch_start += max_o;
    }
    result.trace = trace_from_schedule(instance, result.schedule);
    return result;
}

void write_trace_csv(const SimTrace& trace, std::ostream& out) {
    out << "step,active_count,admitted_ids,memory_used\n";
    for (const TraceStep& step : trace.steps) {
        out << step.step << ',' << step.active.size() << ',';
        for (std::size_t i = 0; i < step.admitted.size(); ++i) {
            if (i > 0) {
                out << ';';
            }
            out << step.admitted[i];
        }
        out << ',' << step.memory_used << '\n';
    }
}

}  // namespace kvsched
