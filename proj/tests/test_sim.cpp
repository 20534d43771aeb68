#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kvsched/sim.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <sstream>

using namespace kvsched;

namespace {

std::vector<RequestId> mcsf_order_example1() {
    std::vector<RequestId> order{0};
    for (RequestId id = 1; id <= 21; ++id) {
        order.push_back(id);
    }
    return order;
}

std::vector<RequestId> sortedf_order_example1() {
    std::vector<RequestId> order;
    for (RequestId id = 1; id <= 21; ++id) {
        order.push_back(id);
    }
    order.push_back(0);
    return order;
}

// Greedy conservative partition used to build feasible plans for properties.
BatchPlan greedy_plan(const Instance& instance) {
    BatchPlan plan;
    std::vector<Request> remaining = instance.requests();
    while (!remaining.empty()) {
        std::vector<RequestId> batch;
        std::vector<Request> members;
        Tokens mem = 0;
        std::vector<Request> next;
        for (const Request& r : remaining) {
            if (mem + r.footprint() <= instance.memory_limit()) {
                mem += r.footprint();
                members.push_back(r);
            } else {
                next.push_back(r);
            }
        }
        std::sort(members.begin(), members.end(), [](const Request& a, const Request& b) {
            return a.o != b.o ? a.o < b.o : a.id < b.id;
        });
        for (const Request& r : members) {
            batch.push_back(r.id);
        }
        plan.batches.push_back(std::move(batch));
        remaining = std::move(next);
    }
    return plan;
}

}  // namespace

TEST_CASE("execute_ordered reproduces the worked example") {
    Instance inst = kvtest::example1();

    SimResult mcsf = execute_ordered(inst, mcsf_order_example1());
    CHECK(validate_schedule(inst, mcsf.schedule).ok());
    CHECK(compute_metrics(inst, mcsf.schedule).tel == 64);
    CHECK(mcsf.schedule.start_of(0) == 0);
    CHECK(mcsf.schedule.start_of(1) == 1);

    SimResult sorted_f = execute_ordered(inst, sortedf_order_example1());
    CHECK(validate_schedule(inst, sorted_f.schedule).ok());
    CHECK(compute_metrics(inst, sorted_f.schedule).tel == 45);
    CHECK(sorted_f.schedule.start_of(1) == 0);
    CHECK(sorted_f.schedule.start_of(0) == 2);
}

TEST_CASE("execute_ordered on a single request") {
    Instance inst({{0, 3, 5}}, 10);
    std::vector<RequestId> order{0};
    SimResult res = execute_ordered(inst, order);
    CHECK(res.schedule.start_of(0) == 0);
    CHECK(compute_metrics(inst, res.schedule).tel == 5);
    CHECK(res.trace.steps.size() == 5);
}

TEST_CASE("execute_ordered rejects non-permutations") {
    Instance inst({{0, 1, 1}, {1, 1, 1}}, 4);
    std::vector<RequestId> short_order{0};
    CHECK_THROWS_AS(execute_ordered(inst, short_order), ValidationError);
    std::vector<RequestId> repeated{0, 0};
    CHECK_THROWS_AS(execute_ordered(inst, repeated), ValidationError);
    std::vector<RequestId> unknown{0, 7};
    CHECK_THROWS_AS(execute_ordered(inst, unknown), ValidationError);
}

TEST_CASE("skip_scan admits past a blocked request") {
    Instance inst({{0, 5, 5}, {1, 5, 5}, {2, 1, 1}}, 10);
    std::vector<RequestId> order{0, 1, 2};

    SimResult blocking = execute_ordered(inst, order);
    CHECK(blocking.schedule.start_of(2) == 5);
    CHECK(compute_metrics(inst, blocking.schedule).tel == 21);

    SimResult skipping = execute_ordered(inst, order, {AdmissionPolicy::skip_scan});
    CHECK(skipping.schedule.start_of(2) == 0);
    CHECK(compute_metrics(inst, skipping.schedule).tel == 16);
}

TEST_CASE("simulation is deterministic") {
    kvtest::Rng rng(31337);
    Instance inst = kvtest::random_instance(rng, 20, 8, 24);
    std::vector<RequestId> order;
    for (const Request& r : inst.requests()) {
        order.push_back(r.id);
    }
    SimResult a = execute_ordered(inst, order);
    SimResult b = execute_ordered(inst, order);
    CHECK(a.schedule.starts == b.schedule.starts);
    REQUIRE(a.trace.steps.size() == b.trace.steps.size());
    for (std::size_t i = 0; i < a.trace.steps.size(); ++i) {
        CHECK(a.trace.steps[i].memory_used == b.trace.steps[i].memory_used);
        CHECK(a.trace.steps[i].admitted == b.trace.steps[i].admitted);
    }
}

TEST_CASE("trace memory matches the analytic usage and stays within M") {
    kvtest::Rng rng(555);
    for (int trial = 0; trial < 50; ++trial) {
        Instance inst = kvtest::random_instance(rng, rng.range(1, 15), 6, 20);
        std::vector<RequestId> order;
        for (const Request& r : inst.requests()) {
            order.push_back(r.id);
        }
        SimResult res = execute_ordered(inst, order);
        CHECK(validate_schedule(inst, res.schedule).ok());
        for (const TraceStep& step : res.trace.steps) {
            CHECK(step.memory_used <= inst.memory_limit());
            CHECK(step.memory_used == memory_usage_at(inst, res.schedule, step.step + 1));
        }
    }
}

TEST_CASE("work conservation under prefix blocking") {
    // Whenever the scan stopped with requests still pending, the blocked head
    // must genuinely not fit alongside the step's final active set.
    kvtest::Rng rng(808);
    for (int trial = 0; trial < 50; ++trial) {
        Instance inst = kvtest::random_instance(rng, rng.range(2, 12), 8, 20);
        std::vector<RequestId> order;
        for (const Request& r : inst.requests()) {
            order.push_back(r.id);
        }
        SimResult res = execute_ordered(inst, order);
        for (const TraceStep& step : res.trace.steps) {
            // Blocked head: first request in order whose start is after this step.
            std::optional<RequestId> head;
            for (RequestId id : order) {
                if (res.schedule.start_of(id) > step.step) {
                    head = id;
                    break;
                }
            }
            if (!head) {
                continue;
            }
            StartSchedule tentative;
            for (RequestId id : step.active) {
                tentative.starts[id] = res.schedule.start_of(id);
            }
            tentative.starts[*head] = step.step;
            Tokens peak = 0;
            for (const auto& [id, p] : tentative.starts) {
                const Time c = p + inst.request(id).o;
                peak = std::max(peak, memory_usage_at(inst, tentative, c));
            }
            CHECK(peak > inst.memory_limit());
        }
    }
}

TEST_CASE("sequential batches start at cumulative longest outputs") {
    Instance inst = kvtest::example1();
    BatchPlan plan;
    plan.batches.push_back({});
    for (RequestId id = 1; id <= 21; ++id) {
        plan.batches[0].push_back(id);
    }
    plan.batches.push_back({0});

    SimResult res = execute_sequential_batches(inst, plan);
    CHECK(res.schedule.start_of(1) == 0);
    CHECK(res.schedule.start_of(0) == 2);
    CHECK(validate_schedule(inst, res.schedule).ok());
    CHECK(compute_metrics(inst, res.schedule).tel == 45);
}

TEST_CASE("sequential execution rejects infeasible batches") {
    Instance inst = kvtest::example1();
    BatchPlan plan;
    plan.batches.push_back({});
    for (const Request& r : inst.requests()) {
        plan.batches[0].push_back(r.id);
    }
    CHECK_THROWS_AS(execute_sequential_batches(inst, plan), ValidationError);

    BatchPlan partial;
    partial.batches.push_back({0});
    CHECK_THROWS_AS(execute_sequential_batches(inst, partial), ValidationError);
}

TEST_CASE("single feasible batch runs like the ordered executor") {
    Instance inst({{0, 2, 2}, {1, 3, 1}, {2, 1, 4}}, 20);
    BatchPlan plan = greedy_plan(inst);
    REQUIRE(plan.batches.size() == 1);
    SimResult seq = execute_sequential_batches(inst, plan);
    SimResult ord = execute_ordered(inst, plan.flatten());
    CHECK(seq.schedule.starts == ord.schedule.starts);
}

TEST_CASE("overlapped execution never loses to sequential batches") {
    kvtest::Rng rng(161803);
    for (int trial = 0; trial < 300; ++trial) {
        Instance inst = kvtest::random_instance(rng, rng.range(1, 16), 8, 24);
        BatchPlan plan = greedy_plan(inst);
        SimResult seq = execute_sequential_batches(inst, plan);
        SimResult ord = execute_ordered(inst, plan.flatten());
        CHECK(compute_metrics(inst, ord.schedule).tel <= compute_metrics(inst, seq.schedule).tel);
    }
}

namespace {

// Slow reference executor: admission checks every future time point of the
// tentative set outright instead of only the completion checkpoints.
StartSchedule reference_execute(const Instance& inst, const std::vector<RequestId>& order) {
    StartSchedule schedule;
    std::vector<RequestId> pending(order.begin(), order.end());
    Time t = 0;
    while (true) {
        std::vector<std::pair<Time, const Request*>> tentative;
        for (const auto& [id, p] : schedule.starts) {
            const Request& r = inst.request(id);
            if (p + r.o > t) {
                tentative.emplace_back(p, &r);
            }
        }
        if (pending.empty() && tentative.empty()) {
            break;
        }
        auto fits_everywhere = [&](const std::vector<std::pair<Time, const Request*>>& set) {
            Time last = 0;
            for (const auto& [p, r] : set) {
                last = std::max(last, p + r->o);
            }
            for (Time t_star = t + 1; t_star <= last; ++t_star) {
                Tokens usage = 0;
                for (const auto& [p, r] : set) {
                    if (t_star > p && t_star <= p + r->o) {
                        usage += r->s + (t_star - p);
                    }
                }
                if (usage > inst.memory_limit()) {
                    return false;
                }
            }
            return true;
        };
        while (!pending.empty()) {
            const Request& head = inst.request(pending.front());
            auto with_head = tentative;
            with_head.emplace_back(t, &head);
            if (!fits_everywhere(with_head)) {
                break;
            }
            tentative = std::move(with_head);
            schedule.starts[head.id] = t;
            pending.erase(pending.begin());
        }
        ++t;
    }
    return schedule;
}

}  // namespace

TEST_CASE("executor agrees with the exhaustive-time reference") {
    kvtest::Rng rng(271828);
    for (int trial = 0; trial < 120; ++trial) {
        Instance inst = kvtest::random_instance(rng, rng.range(1, 10), 7, 18);
        std::vector<RequestId> order;
        for (const Request& r : inst.requests()) {
            order.push_back(r.id);
        }
        SimResult fast = execute_ordered(inst, order);
        StartSchedule slow = reference_execute(inst, order);
        CHECK(fast.schedule.starts == slow.starts);
    }
}

TEST_CASE("trace CSV export") {
    Instance inst({{0, 2, 2}, {1, 1, 1}}, 10);
    std::vector<RequestId> order{0, 1};
    SimResult res = execute_ordered(inst, order);
    std::ostringstream out;
    write_trace_csv(res.trace, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "step,active_count,admitted_ids,memory_used");
    std::getline(in, line);
    CHECK(line == "0,2,0;1,5");  // at t=1: (2+1) + (1+1)
}
