#include "kvsched/verify.hpp"

#include "kvsched/lp.hpp"
#include "kvsched/rng.hpp"
#include "kvsched/schedulers.hpp"
#include "kvsched/selectors.hpp"
#include "kvsched/sim.hpp"
#include "kvsched/workloads.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace kvsched::verify {

namespace {

Instance example1_instance() {
    std::vector<Request> requests;
    requests.push_back({0, 63, 1});
    for (RequestId id = 1; id <= 21; ++id) {
        requests.push_back({id, 1, 2});
    }
    return Instance(std::move(requests), 64);
}

std::vector<Request> random_pool(SplitMix64& rng, std::size_t n, Tokens max_len,
                                 Tokens memory_limit) {
    std::vector<Request> pool;
    pool.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        while (true) {
            const Tokens s = 1 + rng.next_below(max_len);
            const Tokens o = 1 + rng.next_below(max_len);
            if (s + o <= memory_limit) {
                pool.push_back({i, s, o});
                break;
            }
        }
    }
    return pool;
}

std::uint64_t tel_of(const Instance& instance, const std::vector<RequestId>& order) {
    return compute_metrics(instance, execute_ordered(instance, order).schedule).tel;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed << v;
    return os.str();
}

}  // namespace

bool SuiteResult::passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.passed; });
}

SuiteResult run_example1() {
    SuiteResult suite{"example1", {}};
    Instance inst = example1_instance();

    const std::uint64_t tel_mcsf = tel_of(inst, order_sf(inst));
    suite.checks.push_back({"mc_sf_tel", tel_mcsf == 64, "tel=" + std::to_string(tel_mcsf)});

    for (SelectorKind kind : {SelectorKind::exact_dp, SelectorKind::brute_force}) {
        SelectorConfig selector;
        selector.kind = kind;
        const std::uint64_t tel = tel_of(inst, plan_sorted_f(inst, selector).flatten());
        suite.checks.push_back({std::string("sorted_f_tel_") + selector_kind_name(kind),
                                tel == 45, "tel=" + std::to_string(tel)});
    }
    return suite;
}

SuiteResult run_lemma1(std::uint64_t seed, int pools) {
    SuiteResult suite{"lemma1", {}};
    SplitMix64 rng(seed);
    int violations = 0;
    for (int trial = 0; trial < pools; ++trial) {
        const Tokens m = 4 + rng.next_below(27);  // [4, 30]
        auto pool = random_pool(rng, 1 + rng.next_below(12), 10, m);
        for (auto* fn : {&select_brute_force, &select_exact_dp}) {
            auto batch = (*fn)(pool, m);
            std::uint64_t sum = 0;
            std::uint64_t max_o = 0;
            for (const Request& r : batch) {
                sum += r.o;
                max_o = std::max<std::uint64_t>(max_o, r.o);
            }
            if (batch.empty() || 2 * sum <= batch.size() * max_o) {
                ++violations;
            }
        }
    }
    suite.checks.push_back({"balance_violations", violations == 0,
                            "violations=" + std::to_string(violations) + "/" +
                                std::to_string(2 * pools)});
    return suite;
}

SuiteResult run_selector_equivalence(std::uint64_t seed, int pools) {
    SuiteResult suite{"selector_equivalence", {}};
    SplitMix64 rng(seed);
    int f_mismatches = 0;
    int scaled_mismatches = 0;
    int infeasible = 0;
    for (int trial = 0; trial < pools; ++trial) {
        const Tokens m = 4 + rng.next_below(27);
        auto pool = random_pool(rng, 1 + rng.next_below(12), 10, m);

        auto brute = select_brute_force(pool, m);
        auto dp = select_exact_dp(pool, m);
        if (!(f_metric(dp) == f_metric(brute))) {
            ++f_mismatches;
        }

        SelectorConfig scaled;
        scaled.kind = SelectorKind::scaled_dp;
        scaled.epsilon = {1, 1000};
        scaled.precision_b = 1000;  // lambda = max(1, M/1e6) = 1
        auto quantized = select_scaled_dp(pool, m, scaled);
        if (!(f_metric(quantized) == f_metric(dp))) {
            ++scaled_mismatches;
        }

        SelectorConfig config;
        auto swap = select_local_swap(pool, m);
        auto greedy = select_quantile_greedy(pool, m, config, seed ^ trial);
        if (!batch_feasible_conservative(swap, m) || !batch_feasible_conservative(greedy, m)) {
            ++infeasible;
        }
    }
    suite.checks.push_back({"exact_dp_equals_brute_force", f_mismatches == 0,
                            "mismatches=" + std::to_string(f_mismatches)});
    suite.checks.push_back({"scaled_dp_unit_lambda_equals_exact", scaled_mismatches == 0,
                            "mismatches=" + std::to_string(scaled_mismatches)});
    suite.checks.push_back({"heuristics_conservative_feasible", infeasible == 0,
                            "violations=" + std::to_string(infeasible)});
    return suite;
}

namespace {

double adversarial_ratio(const Instance& inst, const std::vector<RequestId>& baseline_order,
                         Tokens type2_o) {
    // Alternative schedule: every type-2 request ahead of every type-1.
    std::vector<RequestId> alt;
    alt.reserve(inst.size());
    for (const Request& r : inst.requests()) {
        if (r.o == type2_o) {
            alt.push_back(r.id);
        }
    }
    for (const Request& r : inst.requests()) {
        if (r.o != type2_o) {
            alt.push_back(r.id);
        }
    }
    const std::uint64_t tel_baseline = tel_of(inst, baseline_order);
    const std::uint64_t tel_alt = tel_of(inst, alt);
    return static_cast<double>(tel_baseline) / static_cast<double>(tel_alt);
}

}  // namespace

SuiteResult run_adversarial() {
    SuiteResult suite{"adversarial", {}};

    std::vector<double> sf_ratios;
    for (Tokens m : {Tokens{100}, Tokens{400}, Tokens{2500}}) {
        Instance inst = gen_adversarial_sf(m);
        const double ratio = adversarial_ratio(inst, order_sf(inst), 2);
        sf_ratios.push_back(ratio);
        const double floor = 0.1 * std::sqrt(static_cast<double>(m));
        suite.checks.push_back({"mc_sf_ratio_floor_M" + std::to_string(m), ratio >= floor,
                                "ratio=" + format_double(ratio) + " floor=" + format_double(floor)});
    }
    suite.checks.push_back({"mc_sf_ratio_increasing",
                            sf_ratios[0] < sf_ratios[1] && sf_ratios[1] < sf_ratios[2],
                            format_double(sf_ratios[0]) + " < " + format_double(sf_ratios[1]) +
                                " < " + format_double(sf_ratios[2])});

    std::vector<double> sf2_ratios;
    for (Tokens m : {Tokens{100}, Tokens{400}}) {
        Instance inst = gen_adversarial_sf2(m);
        sf2_ratios.push_back(adversarial_ratio(inst, order_sf_total(inst), 1));
    }
    suite.checks.push_back({"mc_sf_total_ratio_increasing", sf2_ratios[0] < sf2_ratios[1],
                            format_double(sf2_ratios[0]) + " < " + format_double(sf2_ratios[1])});
    return suite;
}

SuiteResult run_np_reduction() {
    SuiteResult suite{"np_reduction", {}};

    Instance three = gen_3partition({7, 6, 7, 5, 7, 8}, 20);
    const auto tel = solve_ip_exact(three, default_horizon(three));
    suite.checks.push_back({"three_partition_tel", tel.objective == 9,
                            "tel=" + std::to_string(tel.objective) + " expected=9"});

    Instance yes = gen_partition_makespan({3, 7, 4, 6}, 10);
    const auto yes_ms = solve_min_makespan(yes, default_horizon(yes));
    suite.checks.push_back({"partition_makespan", yes_ms.objective == 2,
                            "makespan=" + std::to_string(yes_ms.objective) + " expected=2"});

    Instance no = gen_partition_makespan({1, 1, 1, 1, 2, 2}, 4);
    const auto no_ms = solve_min_makespan(no, default_horizon(no));
    suite.checks.push_back({"no_partition_makespan", no_ms.objective >= 3,
                            "makespan=" + std::to_string(no_ms.objective) + " expected>=3"});
    return suite;
}

SuiteResult run_cr_bound(std::uint64_t seed, int instances) {
    SuiteResult suite{"cr_bound", {}};
    SplitMix64 rng(seed);
    double max_ratio = 0.0;
    int over_bound = 0;
    SelectorConfig selector;
    selector.kind = SelectorKind::brute_force;
    for (int trial = 0; trial < instances; ++trial) {
        const Tokens m = 5 + rng.next_below(8);  // [5, 12]
        Instance inst(random_pool(rng, 1 + rng.next_below(6), 4, m), m);
        const std::uint64_t tel = tel_of(inst, plan_sorted_f(inst, selector).flatten());
        const auto oracle = solve_ip_exact(inst, default_horizon(inst));
        const double ratio = static_cast<double>(tel) / static_cast<double>(oracle.objective);
        max_ratio = std::max(max_ratio, ratio);
        if (ratio > 48.0) {
            ++over_bound;
        }
    }
    suite.checks.push_back({"ratio_within_48", over_bound == 0,
                            "max_ratio=" + format_double(max_ratio) + " over=" +
                                std::to_string(over_bound) + "/" + std::to_string(instances)});
    return suite;
}

SuiteResult run_separate_bound(std::uint64_t seed, int instances) {
    SuiteResult suite{"separate_bound", {}};
    SplitMix64 rng(seed);
    int violations = 0;
    for (int trial = 0; trial < instances; ++trial) {
        const Tokens m = 6 + rng.next_below(19);  // [6, 24]
        const std::size_t n = 1 + rng.next_below(16);
        Instance inst(random_pool(rng, n, 8, m), m);
        SelectorConfig selector;
        selector.kind = n <= 12 ? SelectorKind::exact_dp : SelectorKind::local_swap;
        BatchPlan plan = plan_sorted_f(inst, selector);
        const std::uint64_t overlapped = tel_of(inst, plan.flatten());
        const std::uint64_t sequential =
            compute_metrics(inst, execute_sequential_batches(inst, plan).schedule).tel;
        if (overlapped > sequential) {
            ++violations;
        }
    }
    suite.checks.push_back({"overlap_never_worse", violations == 0,
                            "violations=" + std::to_string(violations) + "/" +
                                std::to_string(instances)});
    return suite;
}

SuiteResult run_lp_chain(std::uint64_t seed, int instances) {
    SuiteResult suite{"lp_chain", {}};
    SplitMix64 rng(seed);
    int chain_violations = 0;
    int row_mismatches = 0;
    for (int trial = 0; trial < instances; ++trial) {
        const Tokens m = 5 + rng.next_below(8);
        Instance inst(random_pool(rng, 1 + rng.next_below(5), 4, m), m);
        IpModel model = build_model(inst);
        LpSolution lp = solve_lp(model);
        const auto ip = solve_ip_exact(inst, model.horizon);
        if (lp.objective > static_cast<double>(ip.objective) + 1e-6) {
            ++chain_violations;
        }
        for (SchedulerKind kind : {SchedulerKind::fcfs, SchedulerKind::mc_sf,
                                   SchedulerKind::sorted_f, SchedulerKind::sorted_lp,
                                   SchedulerKind::lp_swap}) {
            SchedulerSpec spec;
            spec.kind = kind;
            spec.selector.kind = SelectorKind::exact_dp;
            const SchedulerRun run = run_scheduler(inst, spec);
            if (ip.objective > run.metrics.tel) {
                ++chain_violations;
            }
        }
        for (Time t = 1; t <= model.horizon; ++t) {
            if (model.row_activity(t, ip.schedule) != memory_usage_at(inst, ip.schedule, t)) {
                ++row_mismatches;
            }
        }
    }
    suite.checks.push_back({"lp_le_ip_le_schedulers", chain_violations == 0,
                            "violations=" + std::to_string(chain_violations)});
    suite.checks.push_back({"rows_match_memory_formula", row_mismatches == 0,
                            "mismatches=" + std::to_string(row_mismatches)});
    return suite;
}

SuiteResult run_distribution_regen(int jobs) {
    SuiteResult suite{"distribution_regen", {}};
    struct Cell {
        DistributionKind kind;
        std::size_t n;
        std::uint64_t seed;
        std::uint64_t tel_sorted_lp = 0;
        std::uint64_t tel_sorted_f = 0;
        std::uint64_t tel_lp_swap = 0;
        std::string error;
    };
    std::vector<Cell> cells;
    for (DistributionKind kind : {DistributionKind::uniform, DistributionKind::normal,
                                  DistributionKind::binomial, DistributionKind::exponential,
                                  DistributionKind::mixed}) {
        const std::size_t n = kind == DistributionKind::mixed ? 200 : 100;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            cells.push_back({kind, n, seed, 0, 0, 0, {}});
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t at = next.fetch_add(1);
            if (at >= cells.size()) {
                return;
            }
            Cell& cell = cells[at];
            try {
                DistributionSpec spec;
                spec.kind = cell.kind;
                spec.seed = cell.seed;
                Instance inst = gen_synthetic(spec, cell.n, 100);

                SelectorConfig swap_selector;
                swap_selector.kind = SelectorKind::local_swap;
                cell.tel_sorted_f = tel_of(inst, plan_sorted_f(inst, swap_selector).flatten());

                LpSchedulerOptions options;
                options.max_cells = 400'000;
                auto starts = compute_lp_starts(inst, options);
                cell.tel_sorted_lp = tel_of(inst, plan_sorted_lp(inst, options, &starts));
                cell.tel_lp_swap = tel_of(inst, plan_lp_swap(inst, options, &starts).flatten());
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    };
    std::vector<std::thread> threads;
    const int thread_count = std::max(1, jobs);
    threads.reserve(thread_count);
    for (int i = 0; i < thread_count; ++i) {
        threads.emplace_back(worker);
    }
    for (auto& t : threads) {
        t.join();
    }

    for (DistributionKind kind : {DistributionKind::uniform, DistributionKind::normal,
                                  DistributionKind::binomial, DistributionKind::exponential,
                                  DistributionKind::mixed}) {
        double sum_lp = 0.0;
        double sum_f = 0.0;
        double sum_swap = 0.0;
        int count = 0;
        std::string error;
        for (const Cell& cell : cells) {
            if (cell.kind != kind) {
                continue;
            }
            if (!cell.error.empty()) {
                error = cell.error;
                break;
            }
            sum_lp += static_cast<double>(cell.tel_sorted_lp);
            sum_f += static_cast<double>(cell.tel_sorted_f);
            sum_swap += static_cast<double>(cell.tel_lp_swap);
            ++count;
        }
        const std::string name = std::string("spread_") + distribution_kind_name(kind);
        if (!error.empty() || count == 0) {
            suite.checks.push_back({name, false, "error: " + error});
            continue;
        }
        const double mean_lp = sum_lp / count;
        const double mean_f = sum_f / count;
        const double mean_swap = sum_swap / count;
        const double lo = std::min({mean_lp, mean_f, mean_swap});
        const double hi = std::max({mean_lp, mean_f, mean_swap});
        const double spread = hi / lo;
        suite.checks.push_back({name, spread <= 1.10,
                                "sorted_lp=" + format_double(mean_lp) + " sorted_f=" +
                                    format_double(mean_f) + " lp_swap=" + format_double(mean_swap) +
                                    " spread=" + format_double(spread)});
    }
    return suite;
}

std::vector<std::string> suite_names() {
    return {"example1",     "lemma1",   "adversarial", "np_reduction",
            "cr_bound",     "lp_chain", "separate_bound"};
}

SuiteResult run_suite(const std::string& name, int jobs) {
    if (name == "example1") return run_example1();
    if (name == "lemma1") return run_lemma1();
    if (name == "adversarial") return run_adversarial();
    if (name == "np_reduction") return run_np_reduction();
    if (name == "cr_bound") return run_cr_bound();
    if (name == "lp_chain") return run_lp_chain();
    if (name == "separate_bound") return run_separate_bound();
    if (name == "selector_equivalence") return run_selector_equivalence();
    if (name == "distribution_regen") return run_distribution_regen(jobs);
    throw std::invalid_argument("unknown verification suite: " + name);
}

}  // namespace kvsched::verify
