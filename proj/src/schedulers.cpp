#include "kvsched/schedulers.hpp"

#include "kvsched/lp.hpp"

#include <algorithm>

namespace kvsched {

const char* scheduler_kind_name(SchedulerKind kind) {
    switch (kind) {
        case SchedulerKind::fcfs: return "fcfs";
        case SchedulerKind::mc_sf: return "mc_sf";
        case SchedulerKind::mc_sf_total: return "mc_sf_total";
        case SchedulerKind::sorted_f: return "sorted_f";
        case SchedulerKind::sorted_lp: return "sorted_lp";
        case SchedulerKind::lp_swap: return "lp_swap";
    }
    return "unknown";
}

SchedulerKind scheduler_kind_from_name(const std::string& name) {
    if (name == "fcfs") return SchedulerKind::fcfs;
    if (name == "mc_sf") return SchedulerKind::mc_sf;
    if (name == "mc_sf_total") return SchedulerKind::mc_sf_total;
    if (name == "sorted_f") return SchedulerKind::sorted_f;
    if (name == "sorted_lp") return SchedulerKind::sorted_lp;
    if (name == "lp_swap") return SchedulerKind::lp_swap;
    throw std::invalid_argument("unknown scheduler kind: " + name);
}

std::vector<RequestId> order_fcfs(const Instance& instance) {
    std::vector<RequestId> order;
    order.reserve(instance.size());
    for (const Request& r : instance.requests()) {
        order.push_back(r.id);
    }
    return order;
}

std::vector<RequestId> order_sf(const Instance& instance) {
    std::vector<const Request*> refs;
    refs.reserve(instance.size());
    for (const Request& r : instance.requests()) {
        refs.push_back(&r);
    }
    std::sort(refs.begin(), refs.end(), [](const Request* a, const Request* b) {
        return a->o != b->o ? a->o < b->o : a->id < b->id;
    });
    std::vector<RequestId> order;
    order.reserve(refs.size());
    for (const Request* r : refs) {
        order.push_back(r->id);
    }
    return order;
}

std::vector<RequestId> order_sf_total(const Instance& instance) {
    std::vector<const Request*> refs;
    refs.reserve(instance.size());
    for (const Request& r : instance.requests()) {
        refs.push_back(&r);
    }
    std::sort(refs.begin(), refs.end(), [](const Request* a, const Request* b) {
        if (a->footprint() != b->footprint()) {
            return a->footprint() < b->footprint();
        }
        return a->o != b->o ? a->o < b->o : a->id < b->id;
    });
    std::vector<RequestId> order;
    order.reserve(refs.size());
    for (const Request* r : refs) {
        order.push_back(r->id);
    }
    return order;
}

BatchPlan plan_sorted_f(const Instance& instance, const SelectorConfig& selector) {
    BatchPlan plan;
    std::vector<Request> remaining = instance.requests();
    while (!remaining.empty()) {
        std::vector<Request> batch = select_batch(remaining, instance.memory_limit(), selector);
        if (batch.empty()) {
            throw std::logic_error("selector returned no batch on a nonempty pool");
        }
        std::vector<RequestId> ids;
        ids.reserve(batch.size());
        for (const Request& r : batch) {
            ids.push_back(r.id);
        }
        plan.batches.push_back(std::move(ids));
        std::erase_if(remaining, [&](const Request& r) {
            return std::find_if(batch.begin(), batch.end(),
                                [&](const Request& b) { return b.id == r.id; }) != batch.end();
        });
    }
    return plan;
}

namespace {

// Heuristic schedule reused as LP warm start and as the horizon hint.
StartSchedule heuristic_schedule(const Instance& instance) {
    SelectorConfig selector;
    selector.kind = SelectorKind::local_swap;
    BatchPlan plan = plan_sorted_f(instance, selector);
    const std::vector<RequestId> order = plan.flatten();
    return execute_ordered(instance, order).schedule;
}

}  // namespace

std::map<RequestId, double> compute_lp_starts(const Instance& instance,
                                              const LpSchedulerOptions& options) {
    if (instance.empty()) {
        return {};
    }
    StartSchedule warm;
    const bool need_warm = options.warm_start || !options.horizon;
    if (need_warm) {
        warm = heuristic_schedule(instance);
    }

    Time horizon;
    if (options.horizon) {
        horizon = *options.horizon;
    } else {
        // The default sum(o) horizon always contains an optimum but is far
        // looser than needed; a feasible schedule's makespan plus the longest
        // output leaves room for anything the relaxation wants to express.
        Time makespan = 0;
        Time max_o = 0;
        for (const Request& r : instance.requests()) {
            makespan = std::max(makespan, warm.start_of(r.id) + r.o);
            max_o = std::max(max_o, r.o);
        }
        horizon = std::min(default_horizon(instance), makespan + max_o);
    }

    IpModel model = build_model(instance, horizon);
    LpOptions lp_options;
    lp_options.max_cells = options.max_cells;
    if (options.warm_start) {
        lp_options.warm_start = &warm;
    }
    LpSolution solution = solve_lp(model, lp_options);
    return expected_starts(model, solution);
}

std::vector<RequestId> plan_sorted_lp(const Instance& instance, const LpSchedulerOptions& options,
                                      const std::map<RequestId, double>* starts) {
    std::map<RequestId, double> computed;
    if (starts == nullptr) {
        computed = compute_lp_starts(instance, options);
        starts = &computed;
    }
    std::vector<const Request*> refs;
    refs.reserve(instance.size());
    for (const Request& r : instance.requests()) {
        refs.push_back(&r);
    }
    std::sort(refs.begin(), refs.end(), [&](const Request* a, const Request* b) {
        const double ya = starts->at(a->id);
        const double yb = starts->at(b->id);
        if (ya != yb) {
            return ya < yb;
        }
        return a->o != b->o ? a->o < b->o : a->id < b->id;
    });
    std::vector<RequestId> order;
    order.reserve(refs.size());
    for (const Request* r : refs) {
        order.push_back(r->id);
    }
    return order;
}

BatchPlan plan_lp_swap(const Instance& instance, const LpSchedulerOptions& options,
                       const std::map<RequestId, double>* starts) {
    std::map<RequestId, double> computed;
    if (starts == nullptr) {
        computed = compute_lp_starts(instance, options);
        starts = &computed;
    }

    BatchPlan plan;
    std::vector<Request> remaining = instance.requests();
    std::stable_sort(remaining.begin(), remaining.end(), [&](const Request& a, const Request& b) {
        const double ya = starts->at(a.id);
        const double yb = starts->at(b.id);
        if (ya != yb) {
            return ya < yb;
        }
        return a.o != b.o ? a.o < b.o : a.id < b.id;
    });

    while (!remaining.empty()) {
        std::vector<Request> seed;
        Tokens mem = 0;
        for (const Request& r : remaining) {
            if (mem + r.footprint() <= instance.memory_limit()) {
                mem += r.footprint();
                seed.push_back(r);
            }
        }
        std::vector<Request> batch = refine_local_swap(seed, remaining, instance.memory_limit());
        std::vector<RequestId> ids;
        ids.reserve(batch.size());
        for (const Request& r : batch) {
            ids.push_back(r.id);
        }
        plan.batches.push_back(std::move(ids));
        std::erase_if(remaining, [&](const Request& r) {
            return std::find_if(batch.begin(), batch.end(),
                                [&](const Request& b) { return b.id == r.id; }) != batch.end();
        });
    }
    return plan;
}

SchedulerRun run_scheduler(const Instance& instance, const SchedulerSpec& spec,
                           ExecutionPolicy policy) {
    std::vector<RequestId> order;
    switch (spec.kind) {
        case SchedulerKind::fcfs:
            order = order_fcfs(instance);
            break;
        case SchedulerKind::mc_sf:
            order = order_sf(instance);
            break;
        case SchedulerKind::mc_sf_total:
            order = order_sf_total(instance);
            break;
        case SchedulerKind::sorted_f:
            order = plan_sorted_f(instance, spec.selector).flatten();
            break;
        case SchedulerKind::sorted_lp: {
            LpSchedulerOptions options;
            options.horizon = spec.horizon_override;
            options.max_cells = spec.lp_max_cells;
            order = plan_sorted_lp(instance, options);
            break;
        }
        case SchedulerKind::lp_swap: {
            LpSchedulerOptions options;
            options.horizon = spec.horizon_override;
            options.max_cells = spec.lp_max_cells;
            order = plan_lp_swap(instance, options).flatten();
            break;
        }
    }
    SchedulerRun run;
    SimResult result = execute_ordered(instance, order, policy);
    run.schedule = std::move(result.schedule);
    run.trace = std::move(result.trace);
    run.metrics = compute_metrics(instance, run.schedule);
    return run;
}

}  // namespace kvsched
