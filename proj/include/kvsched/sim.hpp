#pragma once

#include "kvsched/core.hpp"

#include <iosfwd>
#include <span>

namespace kvsched {

/// Admission rule for the per-step scan over pending requests.
/// prefix_blocking stops the scan at the first request that does not fit;
/// skip_scan keeps scanning past it.
enum class AdmissionPolicy { prefix_blocking, skip_scan };

struct ExecutionPolicy {
    AdmissionPolicy admission = AdmissionPolicy::prefix_blocking;
};

struct SimResult {
    StartSchedule schedule;
    SimTrace trace;
};

/// Runs the step-by-step execution engine over `order`. At every step the
/// pending requests are scanned in order and a request is admitted iff the
/// tentative active set stays within memory at every future completion
/// checkpoint. The returned schedule always validates.
/// Throws ValidationError if `order` is not a permutation of the instance ids.
SimResult execute_ordered(const Instance& instance, std::span<const RequestId> order,
                          ExecutionPolicy policy = {});

/// Runs the plan one batch at a time: batch k starts when batch k-1 has fully
/// completed, i.e. at the running sum of the previous batches' longest
/// outputs. Throws ValidationError if the plan is not a partition of the
/// instance or a batch fails the exact feasibility check.
SimResult execute_sequential_batches(const Instance& instance, const BatchPlan& plan);

/// Rebuilds the per-step trace of an externally produced schedule.
SimTrace trace_from_schedule(const Instance& instance, const StartSchedule& schedule);

/// CSV with columns step,active_count,admitted_ids,memory_used
/// (admitted ids separated by ';').
void write_trace_csv(const SimTrace& trace, std::ostream& out);

/// Number of per-step memory checks performed so far in this process. Every
/// simulated step is checked against M unconditionally; a breach throws.
std::uint64_t sim_safety_checks();

}  // namespace kvsched
