#pragma once

#include "kvsched/core.hpp"
#include "kvsched/selectors.hpp"
#include "kvsched/sim.hpp"

#include <map>
#include <optional>
#include <string>

namespace kvsched {

enum class SchedulerKind { fcfs, mc_sf, mc_sf_total, sorted_f, sorted_lp, lp_swap };

const char* scheduler_kind_name(SchedulerKind kind);
SchedulerKind scheduler_kind_from_name(const std::string& name);

struct SchedulerSpec {
    SchedulerKind kind = SchedulerKind::fcfs;
    SelectorConfig selector;                // used by sorted_f
    std::optional<Time> horizon_override;   // LP-based kinds
    std::size_t lp_max_cells = 50'000;      // LP dimension budget
};

/// Arrival order (the instance's list order).
std::vector<RequestId> order_fcfs(const Instance& instance);

/// Shortest output first: ascending o, ties by id.
std::vector<RequestId> order_sf(const Instance& instance);

/// Smallest total first: ascending s+o, ties by o then id.
std::vector<RequestId> order_sf_total(const Instance& instance);

/// Phase 1: repeatedly pull the argmin-F batch from the remaining pool (kept
/// in its original order), each batch sorted ascending by o. Flattening the
/// plan gives the Phase-2 execution order.
BatchPlan plan_sorted_f(const Instance& instance, const SelectorConfig& selector);

struct LpSchedulerOptions {
    std::optional<Time> horizon;     // default: sum(o), shrunk if over budget
    std::size_t max_cells = 50'000;
    bool warm_start = true;          // seed the solver from a heuristic run
};

/// Expected LP start times y_i, shared between the two LP-guided planners.
/// Without an explicit horizon the model is cut to the makespan of a
/// local-swap Sorted-F run plus the longest output, capped at sum(o); starts
/// past the horizon can always park there, so the relaxation stays feasible.
std::map<RequestId, double> compute_lp_starts(const Instance& instance,
                                              const LpSchedulerOptions& options = {});

/// Ascending y_i, ties by o then id.
std::vector<RequestId> plan_sorted_lp(const Instance& instance,
                                      const LpSchedulerOptions& options = {},
                                      const std::map<RequestId, double>* starts = nullptr);

/// y-ordered greedy seed per batch, refined by local swaps against the
/// remaining pool, batches sorted ascending by o. A single LP solve provides
/// the y values for every round.
BatchPlan plan_lp_swap(const Instance& instance, const LpSchedulerOptions& options = {},
                       const std::map<RequestId, double>* starts = nullptr);

struct SchedulerRun {
    StartSchedule schedule;
    SimTrace trace;
    Metrics metrics;
};

/// Plans with the given policy and executes through the step engine.
SchedulerRun run_scheduler(const Instance& instance, const SchedulerSpec& spec,
                           ExecutionPolicy policy = {});

}  // namespace kvsched
