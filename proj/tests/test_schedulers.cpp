#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kvsched/schedulers.hpp"
#include "kvsched/lp.hpp"
#include "kvsched/workloads.hpp"
#include "test_util.hpp"

#include <algorithm>

using namespace kvsched;

namespace {

std::uint64_t tel_of_order(const Instance& inst, const std::vector<RequestId>& order) {
    return compute_metrics(inst, execute_ordered(inst, order).schedule).tel;
}

}  // namespace

TEST_CASE("fcfs keeps arrival order") {
    Instance inst({{3, 1, 2}, {1, 1, 1}, {2, 2, 2}}, 10);
    auto order = order_fcfs(inst);
    CHECK(order == std::vector<RequestId>{3, 1, 2});
}

TEST_CASE("shortest-output-first on the worked example") {
    Instance inst = kvtest::example1();
    auto order = order_sf(inst);
    CHECK(order.front() == 0);  // the o=1 long-prompt request leads
    CHECK(tel_of_order(inst, order) == 64);

    Instance ties({{5, 2, 3}, {2, 4, 3}, {9, 1, 3}}, 10);
    CHECK(order_sf(ties) == std::vector<RequestId>{2, 5, 9});
}

TEST_CASE("smallest-total-first prefers the short-output block on its adversary") {
    Instance inst = gen_adversarial_sf2(100);
    auto order = order_sf_total(inst);
    // Type 1 has footprint 10, type 2 footprint 11.
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(inst.request(order[i]).o == 9);
    }

    // With uniform s the two orders coincide.
    kvtest::Rng rng(12);
    std::vector<Request> reqs;
    for (std::size_t i = 0; i < 30; ++i) {
        reqs.push_back({i, 5, rng.range(1, 8)});
    }
    Instance uniform_s(std::move(reqs), 20);
    CHECK(order_sf(uniform_s) == order_sf_total(uniform_s));
}

TEST_CASE("sorted_f plan reproduces the worked example") {
    Instance inst = kvtest::example1();
    SelectorConfig selector;
    selector.kind = SelectorKind::exact_dp;
    BatchPlan plan = plan_sorted_f(inst, selector);
    REQUIRE(plan.batches.size() == 2);
    CHECK(plan.batches[0].size() == 21);
    CHECK(plan.batches[1] == std::vector<RequestId>{0});
    CHECK(tel_of_order(inst, plan.flatten()) == 45);

    selector.kind = SelectorKind::brute_force;
    CHECK(tel_of_order(inst, plan_sorted_f(inst, selector).flatten()) == 45);
}

TEST_CASE("sorted_f plans partition the instance") {
    kvtest::Rng rng(314);
    for (SelectorKind kind : {SelectorKind::exact_dp, SelectorKind::local_swap,
                              SelectorKind::quantile_greedy}) {
        SelectorConfig selector;
        selector.kind = kind;
        selector.seed = 5;
        for (int trial = 0; trial < 20; ++trial) {
            Instance inst = kvtest::random_instance(rng, rng.range(1, 25), 8, 24);
            BatchPlan plan = plan_sorted_f(inst, selector);
            auto flat = plan.flatten();
            CHECK(flat.size() == inst.size());
            std::sort(flat.begin(), flat.end());
            CHECK(std::adjacent_find(flat.begin(), flat.end()) == flat.end());
            for (const auto& batch : plan.batches) {
                std::vector<Request> members;
                for (RequestId id : batch) {
                    members.push_back(inst.request(id));
                }
                if (kind != SelectorKind::quantile_greedy) {
                    CHECK(batch_feasible_conservative(members, inst.memory_limit()));
                }
                for (std::size_t i = 1; i < members.size(); ++i) {
                    CHECK(members[i - 1].o <= members[i].o);
                }
            }
        }
    }
}

TEST_CASE("singleton instance yields a single singleton batch") {
    Instance inst({{4, 3, 2}}, 10);
    SelectorConfig selector;
    BatchPlan plan = plan_sorted_f(inst, selector);
    REQUIRE(plan.batches.size() == 1);
    CHECK(plan.batches[0] == std::vector<RequestId>{4});
}

TEST_CASE("sorted_lp orders the example's short requests first") {
    Instance inst = kvtest::example1();
    auto order = plan_sorted_lp(inst);
    CHECK(order.back() == 0);
    CHECK(tel_of_order(inst, order) == 45);
}

TEST_CASE("sorted_lp TEL dominates the LP objective") {
    kvtest::Rng rng(777);
    for (int trial = 0; trial < 15; ++trial) {
        Instance inst = kvtest::random_instance(rng, rng.range(1, 5), 4, 12);
        LpSolution lp = solve_lp(build_model(inst));
        auto order = plan_sorted_lp(inst);
        CHECK(static_cast<double>(tel_of_order(inst, order)) >= lp.objective - 1e-6);
    }
}

TEST_CASE("integral distinct-start LP solutions give the start order") {
    // Inject an integral solution with distinct starts; the planner must
    // reproduce the start-time order.
    Instance inst({{4, 3, 2}, {7, 2, 1}, {1, 1, 3}}, 12);
    std::map<RequestId, double> starts{{4, 2.0}, {7, 0.0}, {1, 5.0}};
    auto order = plan_sorted_lp(inst, {}, &starts);
    CHECK(order == std::vector<RequestId>{7, 4, 1});
}

TEST_CASE("lp_swap refines the lp order on the example") {
    Instance inst = kvtest::example1();
    auto starts = compute_lp_starts(inst);
    const std::uint64_t lp_tel = tel_of_order(inst, plan_sorted_lp(inst, {}, &starts));
    BatchPlan plan = plan_lp_swap(inst, {}, &starts);
    CHECK(tel_of_order(inst, plan.flatten()) <= lp_tel);
}

TEST_CASE("lp_swap with one feasible batch matches sorted_lp admission") {
    Instance inst({{0, 2, 2}, {1, 3, 1}, {2, 1, 4}}, 30);
    auto starts = compute_lp_starts(inst);
    BatchPlan plan = plan_lp_swap(inst, {}, &starts);
    REQUIRE(plan.batches.size() == 1);
    SimResult swap_run = execute_ordered(inst, plan.flatten());
    SimResult lp_run = execute_ordered(inst, plan_sorted_lp(inst, {}, &starts));
    CHECK(swap_run.schedule.starts == lp_run.schedule.starts);
}

TEST_CASE("lp_swap plans partition the instance") {
    kvtest::Rng rng(1618);
    for (int trial = 0; trial < 10; ++trial) {
        Instance inst = kvtest::random_instance(rng, rng.range(1, 12), 6, 18);
        BatchPlan plan = plan_lp_swap(inst);
        auto flat = plan.flatten();
        CHECK(flat.size() == inst.size());
        std::sort(flat.begin(), flat.end());
        CHECK(std::adjacent_find(flat.begin(), flat.end()) == flat.end());
    }
}

TEST_CASE("scaling outputs preserves order_sf and the argmin-F batch") {
    kvtest::Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        auto pool = kvtest::random_pool(rng, rng.range(2, 10), 6, 1000);
        Instance inst(pool, 1000);
        auto base_order = order_sf(inst);

        std::vector<Request> scaled = pool;
        for (Request& r : scaled) {
            r.o *= 7;
        }
        Instance scaled_inst(scaled, 7000);
        CHECK(order_sf(scaled_inst) == base_order);

        // With memory loose enough that every subset stays feasible, the
        // argmin-F members are scale-invariant.
        auto batch = select_exact_dp(pool, 1000);
        auto scaled_batch = select_exact_dp(scaled, 7000);
        REQUIRE(batch.size() == scaled_batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            CHECK(batch[i].id == scaled_batch[i].id);
        }
    }
}

TEST_CASE("f comparisons are scale invariant") {
    kvtest::Rng rng(555);
    for (int trial = 0; trial < 200; ++trial) {
        FMetric a{rng.range(1, 100), rng.range(1, 12)};
        FMetric b{rng.range(1, 100), rng.range(1, 12)};
        FMetric sa{a.sum_o * 9, a.count};
        FMetric sb{b.sum_o * 9, b.count};
        CHECK((a < b) == (sa < sb));
        CHECK((a == b) == (sa == sb));
    }
}

TEST_CASE("the short-first adversary punishes mc_sf at M = 100") {
    Instance inst = gen_adversarial_sf(100);
    const std::uint64_t mcsf_tel = tel_of_order(inst, order_sf(inst));

    // Alternative order: all type-2 requests first.
    std::vector<RequestId> alt;
    for (const Request& r : inst.requests()) {
        if (r.o == 2) {
            alt.push_back(r.id);
        }
    }
    for (const Request& r : inst.requests()) {
        if (r.o == 1) {
            alt.push_back(r.id);
        }
    }
    const std::uint64_t alt_tel = tel_of_order(inst, alt);
    CHECK(mcsf_tel > alt_tel);
    CHECK(static_cast<double>(mcsf_tel) / static_cast<double>(alt_tel) >= 1.0);  // 0.1 * sqrt(M)
}

TEST_CASE("run_scheduler dispatches every kind deterministically") {
    kvtest::Rng rng(86);
    Instance inst = kvtest::random_instance(rng, 10, 5, 16);
    for (SchedulerKind kind : {SchedulerKind::fcfs, SchedulerKind::mc_sf,
                               SchedulerKind::mc_sf_total, SchedulerKind::sorted_f,
                               SchedulerKind::sorted_lp, SchedulerKind::lp_swap}) {
        SchedulerSpec spec;
        spec.kind = kind;
        spec.selector.kind = SelectorKind::exact_dp;
        SchedulerRun a = run_scheduler(inst, spec);
        SchedulerRun b = run_scheduler(inst, spec);
        CHECK(a.schedule.starts == b.schedule.starts);
        CHECK(a.metrics.tel == b.metrics.tel);
        CHECK(validate_schedule(inst, a.schedule).ok());
    }
}

TEST_CASE("scheduler names round-trip") {
    for (SchedulerKind kind : {SchedulerKind::fcfs, SchedulerKind::mc_sf,
                               SchedulerKind::mc_sf_total, SchedulerKind::sorted_f,
                               SchedulerKind::sorted_lp, SchedulerKind::lp_swap}) {
        CHECK(scheduler_kind_from_name(scheduler_kind_name(kind)) == kind);
    }
    CHECK_THROWS_AS(scheduler_kind_from_name("nope"), std::invalid_argument);
}
