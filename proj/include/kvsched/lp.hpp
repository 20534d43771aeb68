#pragma once

#include "kvsched/core.hpp"

#include <iosfwd>
#include <map>
#include <optional>

namespace kvsched {

/// Time-indexed start-variable program: variables x[i][t] for t in
/// {0..horizon}, start-once rows per request and one memory row per
/// t in [1, horizon]. Coefficients are arithmetic in (i, t, k), so the model
/// stores only the instance data and generates rows on demand.
struct IpModel {
    std::vector<Request> requests;  // variable order
    Tokens memory_limit = 1;
    Time horizon = 0;

    std::size_t num_requests() const { return requests.size(); }
    std::size_t num_variables() const { return requests.size() * (horizon + 1); }
    std::size_t num_rows() const { return requests.size() + horizon; }
    std::uint64_t objective_constant() const;

    /// Coefficient of x[i][k] in memory row t: s_i + t - k when
    /// max(0, t - o_i) <= k <= t - 1, else zero.
    Tokens memory_coefficient(Time t, std::size_t i, Time k) const;

    /// Memory row t evaluated on a schedule (an integral assignment).
    Tokens row_activity(Time t, const StartSchedule& schedule) const;
};

/// Horizon that always contains an optimum: the one-at-a-time sequential
/// schedule fits within sum(o).
Time default_horizon(const Instance& instance);

/// Builds the model with horizon sum(o) unless overridden. An override below
/// max(o) is rejected (no completion would be representable).
IpModel build_model(const Instance& instance, std::optional<Time> horizon_override = {});

struct LpSolution {
    double objective = 0.0;                  // includes the sum(o) constant
    std::vector<std::vector<double>> x;      // x[i][t]
    std::vector<double> expected_start;      // y_i per model variable order
    std::size_t iterations = 0;
};

struct LpOptions {
    std::size_t max_cells = 50'000;          // budget on n * horizon
    std::size_t max_iterations = 0;          // 0 = automatic
    /// Optional feasible schedule used as the starting basis; starts beyond
    /// the horizon are parked at the horizon (which no memory row sees).
    const StartSchedule* warm_start = nullptr;
};

/// Deterministic primal simplex on the relaxation: revised form with a dense
/// basis inverse, Dantzig pricing with smallest-index ties and a Bland
/// fallback once the objective stalls (anti-cycling). Throws on budget
/// violations and on numerical failure (with the residual in the message).
LpSolution solve_lp(const IpModel& model, const LpOptions& options = {});

/// y_i = sum_t t * x[i][t], keyed by request id.
std::map<RequestId, double> expected_starts(const IpModel& model, const LpSolution& solution);

struct IpOracleResult {
    StartSchedule schedule;
    std::uint64_t objective = 0;
};

/// Exact TEL minimum by branch and bound over start vectors: requests in
/// descending s+o order, start times ascending, pruned by memory infeasibility
/// and by partial TEL plus the remaining outputs against the incumbent.
/// Ties resolve to the lexicographically smallest start vector in id order.
/// Guarded to n <= 8 and horizon <= 32.
IpOracleResult solve_ip_exact(const Instance& instance, Time horizon);

/// Same search minimizing the makespan.
IpOracleResult solve_min_makespan(const Instance& instance, Time horizon);

/// Human-readable LP text (objective, rows, bounds) for external solvers.
void write_lp_text(const IpModel& model, std::ostream& out);

/// {"objective": <float>, "y": {"<id>": <float>}}
void write_solution_json(const IpModel& model, const LpSolution& solution, std::ostream& out);

}  // namespace kvsched
