#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace kvsched {

using RequestId = std::uint64_t;
using Tokens = std::uint64_t;
using Time = std::uint64_t;

/// One inference job: prefill length `s` (tokens resident from the start)
/// and decode length `o` (tokens generated one per step).
struct Request {
    RequestId id = 0;
    Tokens s = 1;
    Tokens o = 1;

    Tokens footprint() const { return s + o; }  // peak memory, reached at completion
};

class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A request set plus the KV-cache capacity M. Immutable after construction;
/// construction enforces s,o >= 1, unique ids and s + o <= M for every request.
class Instance {
public:
    Instance() = default;
    Instance(std::vector<Request> requests, Tokens memory_limit);

    const std::vector<Request>& requests() const { return requests_; }
    Tokens memory_limit() const { return memory_limit_; }
    std::size_t size() const { return requests_.size(); }
    bool empty() const { return requests_.empty(); }

    bool contains(RequestId id) const { return index_.count(id) != 0; }
    std::size_t index_of(RequestId id) const;
    const Request& request(RequestId id) const { return requests_[index_of(id)]; }

private:
    std::vector<Request> requests_;
    Tokens memory_limit_ = 1;
    std::unordered_map<RequestId, std::size_t> index_;
};

/// Map request -> start time p. Completion is derived: c = p + o.
struct StartSchedule {
    std::map<RequestId, Time> starts;

    Time start_of(RequestId id) const;
};

/// Ordered batches; within a batch ids are sorted ascending by o (ties by id).
struct BatchPlan {
    std::vector<std::vector<RequestId>> batches;

    std::vector<RequestId> flatten() const;
};

/// One simulator step. `step` is the time at which admissions happened; the
/// active set generates one token each during (step, step+1] and memory_used
/// is the usage at the end of that interval.
struct TraceStep {
    Time step = 0;
    std::vector<RequestId> active;
    std::vector<RequestId> admitted;
    Tokens memory_used = 0;
};

struct SimTrace {
    std::vector<TraceStep> steps;
};

struct Metrics {
    std::uint64_t tel = 0;          // sum of completion times
    double mean_latency = 0.0;      // tel / n
    Time makespan = 0;              // max completion time
    Tokens peak_memory = 0;
    double mean_utilization = 0.0;  // mean memory_used / M over busy steps
};

struct MemoryViolation {
    Time t = 0;
    Tokens usage = 0;
    Tokens limit = 0;

    Tokens overflow() const { return usage - limit; }
};

struct ValidationReport {
    std::optional<MemoryViolation> violation;

    bool ok() const { return !violation.has_value(); }
    std::string message() const;
};

/// Exact batch-quality score F(X) = sum(o) / |X|^2, kept as an integer pair so
/// comparisons are exact. Cross-multiplication uses 128-bit intermediates.
struct FMetric {
    std::uint64_t sum_o = 0;
    std::uint64_t count = 0;

    std::uint64_t numerator() const { return sum_o; }
    std::uint64_t denominator() const { return count * count; }
    double value() const { return static_cast<double>(sum_o) / (static_cast<double>(count) * static_cast<double>(count)); }
};

bool operator<(const FMetric& a, const FMetric& b);
bool operator==(const FMetric& a, const FMetric& b);
inline bool operator>(const FMetric& a, const FMetric& b) { return b < a; }
inline bool operator<=(const FMetric& a, const FMetric& b) { return !(b < a); }
inline bool operator!=(const FMetric& a, const FMetric& b) { return !(a == b); }

/// Memory in use at time t by the scheduled requests: a request started at p
/// holds s + (t - p) tokens while 1 <= t - p <= o (it is generating token
/// t - p during the step that ends at t) and nothing outside that window.
/// Throws ValidationError if the schedule names an id the instance lacks.
Tokens memory_usage_at(const Instance& instance, const StartSchedule& schedule, Time t_star);

/// ok iff memory_usage_at(t) <= M for every integer t in [0, makespan].
/// The report names the first offending t and the usage there.
/// Throws ValidationError if the schedule does not cover the instance exactly.
ValidationReport validate_schedule(const Instance& instance, const StartSchedule& schedule);

/// Co-started batch feasibility: for every distinct o-value v in the batch,
/// sum over members with o >= v of (s + v) must stay within M.
bool batch_feasible_exact(std::span<const Request> batch, Tokens memory_limit);

/// Knapsack-style bound: sum(s + o) <= M. Implies batch_feasible_exact.
bool batch_feasible_conservative(std::span<const Request> batch, Tokens memory_limit);

/// F(X) = sum(o) / |X|^2. Throws std::domain_error on an empty batch.
FMetric f_metric(std::span<const Request> batch);

/// Metrics of a valid schedule. Throws ValidationError carrying the violation
/// report when the schedule is invalid.
Metrics compute_metrics(const Instance& instance, const StartSchedule& schedule);

}  // namespace kvsched
