#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kvsched/lp.hpp"
#include "kvsched/sim.hpp"
#include "kvsched/workloads.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <sstream>

using namespace kvsched;

namespace {

// Independent check used against the branch-and-bound oracle: enumerate every
// start vector up to `horizon` outright.
std::uint64_t brute_force_tel(const Instance& instance, Time horizon) {
    const std::size_t n = instance.size();
    std::vector<Time> starts(n, 0);
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    while (true) {
        StartSchedule sched;
        std::uint64_t tel = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const Request& r = instance.requests()[i];
            sched.starts[r.id] = starts[i];
            tel += starts[i] + r.o;
        }
        if (validate_schedule(instance, sched).ok()) {
            best = std::min(best, tel);
        }
        std::size_t pos = 0;
        while (pos < n && starts[pos] == horizon) {
            starts[pos++] = 0;
        }
        if (pos == n) {
            break;
        }
        ++starts[pos];
    }
    return best;
}

}  // namespace

TEST_CASE("build_model shapes and coefficients") {
    Instance single({{0, 4, 3}}, 10);
    IpModel model = build_model(single);
    CHECK(model.horizon == 3);
    CHECK(model.num_variables() == 4);
    CHECK(model.num_rows() == 1 + 3);
    // Row t holds x[0][k] for k in [max(0, t-o), t-1] with weight s + t - k.
    CHECK(model.memory_coefficient(1, 0, 0) == 5);
    CHECK(model.memory_coefficient(3, 0, 0) == 7);
    CHECK(model.memory_coefficient(3, 0, 2) == 5);
    CHECK(model.memory_coefficient(3, 0, 3) == 0);  // k >= t
    CHECK(model.memory_coefficient(2, 0, 2) == 0);

    Instance pair({{0, 2, 1}, {1, 5, 2}}, 10);
    IpModel m2 = build_model(pair);
    CHECK(m2.memory_coefficient(1, 0, 0) == 3);  // s_i + 1
    CHECK(m2.memory_coefficient(1, 1, 0) == 6);
    CHECK(m2.memory_coefficient(2, 0, 0) == 0);  // o_0 = 1 expired

    IpModel example = build_model(kvtest::example1());
    CHECK(example.horizon == 43);  // sum of outputs

    CHECK_THROWS_AS(build_model(pair, Time{1}), ValidationError);
    CHECK_NOTHROW(build_model(pair, Time{2}));
}

TEST_CASE("model rows reproduce the memory formula on integral assignments") {
    kvtest::Rng rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        Instance inst = kvtest::random_instance(rng, rng.range(1, 6), 5, 15);
        IpModel model = build_model(inst);
        StartSchedule sched;
        for (const Request& r : inst.requests()) {
            sched.starts[r.id] = rng.range(0, 4);
        }
        for (Time t = 1; t <= model.horizon; ++t) {
            CHECK(model.row_activity(t, sched) == memory_usage_at(inst, sched, t));
        }
    }
}

TEST_CASE("lp solves the single-request model") {
    Instance single({{0, 4, 3}}, 10);
    LpSolution sol = solve_lp(build_model(single));
    CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(sol.x[0][0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.expected_start[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("lp starts both requests immediately when they fit") {
    Instance pair({{0, 2, 2}, {1, 1, 3}}, 10);
    LpSolution sol = solve_lp(build_model(pair));
    CHECK(sol.objective == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(sol.x[0][0] == doctest::Approx(1.0));
    CHECK(sol.x[1][0] == doctest::Approx(1.0));
}

TEST_CASE("lp lower-bounds the exact oracle on small instances") {
    kvtest::Rng rng(456);
    for (int trial = 0; trial < 40; ++trial) {
        Instance inst = kvtest::random_instance(rng, rng.range(1, 5), 4, 10);
        const Time horizon = default_horizon(inst);
        LpSolution lp = solve_lp(build_model(inst));
        IpOracleResult ip = solve_ip_exact(inst, horizon);
        CHECK(lp.objective <= static_cast<double>(ip.objective) + 1e-6);
        CHECK(validate_schedule(inst, ip.schedule).ok());
    }
}

TEST_CASE("warm-started lp agrees with the cold start") {
    kvtest::Rng rng(1771);
    for (int trial = 0; trial < 20; ++trial) {
        Instance inst = kvtest::random_instance(rng, rng.range(2, 6), 4, 12);
        IpModel model = build_model(inst);
        LpSolution cold = solve_lp(model);

        std::vector<RequestId> order;
        for (const Request& r : inst.requests()) {
            order.push_back(r.id);
        }
        StartSchedule warm_schedule = execute_ordered(inst, order).schedule;
        LpOptions options;
        options.warm_start = &warm_schedule;
        LpSolution warm = solve_lp(model, options);
        CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-7));
    }
}

TEST_CASE("expected_starts on a hand-built fractional solution") {
    Instance pair({{7, 2, 4}, {9, 2, 2}}, 10);
    IpModel model = build_model(pair);
    LpSolution sol;
    sol.x.assign(2, std::vector<double>(model.horizon + 1, 0.0));
    sol.x[0][0] = 0.5;
    sol.x[0][4] = 0.5;
    sol.x[1][1] = 1.0;
    sol.expected_start = {2.0, 1.0};
    auto y = expected_starts(model, sol);
    CHECK(y[7] == doctest::Approx(2.0));
    CHECK(y[9] == doctest::Approx(1.0));
}

TEST_CASE("example instance: short requests come first in y order") {
    Instance inst = kvtest::example1();
    LpSolution sol = solve_lp(build_model(inst));
    auto y = expected_starts(build_model(inst), sol);
    double max_type2 = 0.0;
    for (RequestId id = 1; id <= 21; ++id) {
        max_type2 = std::max(max_type2, y[id]);
    }
    CHECK(max_type2 < y[0]);
    // The relaxation sits below the best integral schedule (TEL 45).
    CHECK(sol.objective <= 45.0 + 1e-6);
    CHECK(sol.objective >= 43.0);
}

TEST_CASE("integral lp solutions validate as schedules") {
    kvtest::Rng rng(31415);
    int integral_seen = 0;
    for (int trial = 0; trial < 40; ++trial) {
        Instance inst = kvtest::random_instance(rng, rng.range(1, 5), 4, 12);
        IpModel model = build_model(inst);
        LpSolution sol = solve_lp(model);
        bool integral = true;
        StartSchedule rounded;
        for (std::size_t i = 0; i < model.requests.size(); ++i) {
            for (Time k = 0; k <= model.horizon && integral; ++k) {
                if (sol.x[i][k] > 1e-9 && sol.x[i][k] < 1.0 - 1e-9) {
                    integral = false;
                }
            }
            rounded.starts[model.requests[i].id] =
                static_cast<Time>(std::llround(sol.expected_start[i]));
        }
        if (integral) {
            ++integral_seen;
            CHECK(validate_schedule(inst, rounded).ok());
        }
    }
    CHECK(integral_seen > 0);
}

TEST_CASE("lp dimension budget is enforced") {
    DistributionSpec spec;
    spec.seed = 3;
    Instance big = gen_synthetic(spec, 60, 100);
    IpModel model = build_model(big);  // horizon ~ 60 * 26
    LpOptions options;
    options.max_cells = 50'000;
    CHECK(model.requests.size() * model.horizon > options.max_cells);
    CHECK_THROWS_AS(solve_lp(model, options), std::invalid_argument);
}

TEST_CASE("ip oracle matches exhaustive search and pins the clone instance") {
    // One long-prompt request plus three short ones at M = 8.
    Instance clone({{0, 7, 1}, {1, 1, 2}, {2, 1, 2}, {3, 1, 2}}, 8);
    const Time horizon = default_horizon(clone);  // 7
    IpOracleResult oracle = solve_ip_exact(clone, horizon);
    CHECK(oracle.objective == brute_force_tel(clone, horizon));
    CHECK(oracle.objective == 11);
    CHECK(validate_schedule(clone, oracle.schedule).ok());
}

TEST_CASE("ip oracle on random instances against exhaustive search") {
    kvtest::Rng rng(2718);
    for (int trial = 0; trial < 25; ++trial) {
        Instance inst = kvtest::random_instance(rng, rng.range(1, 4), 4, 10);
        const Time horizon = default_horizon(inst);
        IpOracleResult oracle = solve_ip_exact(inst, horizon);
        CHECK(oracle.objective == brute_force_tel(inst, horizon));
    }
}

TEST_CASE("ip oracle singleton and guard") {
    Instance single({{0, 3, 4}}, 10);
    IpOracleResult res = solve_ip_exact(single, default_horizon(single));
    CHECK(res.objective == 4);
    CHECK(res.schedule.start_of(0) == 0);

    kvtest::Rng rng(1);
    Instance big = kvtest::random_instance(rng, 9, 3, 10);
    CHECK_THROWS_AS(solve_ip_exact(big, 8), std::invalid_argument);
    Instance ok = kvtest::random_instance(rng, 4, 3, 10);
    CHECK_THROWS_AS(solve_ip_exact(ok, 33), std::invalid_argument);
}

TEST_CASE("3-partition instance reaches the closed-form optimum") {
    Instance inst = gen_3partition({7, 6, 7, 5, 7, 8}, 20);
    IpOracleResult res = solve_ip_exact(inst, default_horizon(inst));
    CHECK(res.objective == 9);  // 3m(m+1)/2 with m = 2
}

TEST_CASE("makespan oracle distinguishes partitions") {
    Instance yes = gen_partition_makespan({3, 7, 4, 6}, 10);
    CHECK(solve_min_makespan(yes, default_horizon(yes)).objective == 2);

    Instance no = gen_partition_makespan({1, 1, 1, 1, 2, 2}, 4);
    const auto res = solve_min_makespan(no, default_horizon(no));
    CHECK(res.objective >= 3);
    CHECK(res.objective == 3);
}

TEST_CASE("lp text export lists rows and bounds") {
    Instance pair({{0, 2, 1}, {1, 5, 2}}, 10);
    std::ostringstream out;
    write_lp_text(build_model(pair), out);
    const std::string text = out.str();
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("start_0:") != std::string::npos);
    CHECK(text.find("mem_1:") != std::string::npos);
    CHECK(text.find("<= 10") != std::string::npos);
    CHECK(text.find("3 x_0_0") != std::string::npos);  // s + t - k = 2 + 1
}

TEST_CASE("solution json export") {
    Instance single({{0, 4, 3}}, 10);
    IpModel model = build_model(single);
    LpSolution sol = solve_lp(model);
    std::ostringstream out;
    write_solution_json(model, sol, out);
    CHECK(out.str().find("\"objective\"") != std::string::npos);
    CHECK(out.str().find("\"0\"") != std::string::npos);
}
