#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kvsched::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string details;
};

struct SuiteResult {
    std::string suite;
    std::vector<CheckResult> checks;

    bool passed() const;
};

/// Worked-example golden values: TEL 64 under shortest-output-first, 45 under
/// the F-guided plan with either exact selector.
SuiteResult run_example1();

/// Output balance of optimal batches (mean o > max o / 2) over random pools.
SuiteResult run_lemma1(std::uint64_t seed = 0x1e771, int pools = 1000);

/// Exact selector agreement and heuristic feasibility over random pools.
SuiteResult run_selector_equivalence(std::uint64_t seed = 0x5e1ec7, int pools = 500);

/// Adversarial ratio trends for the two shortest-first baselines.
SuiteResult run_adversarial();

/// Reduction instances against the exact oracles.
SuiteResult run_np_reduction();

/// Empirical competitive ratio of the F-guided scheduler on tiny instances.
SuiteResult run_cr_bound(std::uint64_t seed = 0xc4b0d, int instances = 200);

/// Overlapped execution never exceeds sequential-batch execution.
SuiteResult run_separate_bound(std::uint64_t seed = 0x5e9a4a7e, int instances = 1000);

/// LP <= IP <= simulated TELs, and model rows match the memory formula on the
/// IP optimum.
SuiteResult run_lp_chain(std::uint64_t seed = 0x19c4a11, int instances = 100);

/// The three LP/F-guided schedulers land within 10% of one another on each
/// synthetic distribution (10 seeds each).
SuiteResult run_distribution_regen(int jobs = 2);

std::vector<std::string> suite_names();
SuiteResult run_suite(const std::string& name, int jobs = 2);

}  // namespace kvsched::verify
