#pragma once

#include "kvsched/core.hpp"

#include <span>
#include <string>

namespace kvsched {

enum class SelectorKind { brute_force, exact_dp, scaled_dp, local_swap, quantile_greedy };

/// Exact nonnegative rational, used where float rounding would make results
/// seed- or platform-dependent (epsilon, quantiles, sample fractions).
struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;
};

struct SelectorConfig {
    SelectorKind kind = SelectorKind::exact_dp;
    Rational epsilon{1, 10};          // scaled_dp: lambda = max(1, eps * M / B)
    std::uint64_t precision_b = 10;   // scaled_dp: B
    Rational sample_fraction{1, 2};   // quantile_greedy sample size fraction
    Rational quantile_p{3, 10};       // quantile_greedy Q_p / Q_o quantile
    std::uint64_t seed = 0;           // quantile_greedy sampling seed
};

const char* selector_kind_name(SelectorKind kind);
SelectorKind selector_kind_from_name(const std::string& name);

/// All selectors pick a batch under the conservative constraint
/// sum(s + o) <= M and return it sorted ascending by (o, id). An empty pool
/// yields an empty batch ("no batch").

/// Exhaustive search over all subsets, minimizing (F, -|X|) with ties broken
/// by smaller total memory, then lexicographically smallest id list.
/// Oracle only: refuses pools larger than 20.
std::vector<Request> select_brute_force(std::span<const Request> pool, Tokens memory_limit);

/// dp[k][m] = minimal sum of outputs over batches of size k using exactly m
/// memory; answer is the cell minimizing dp[k][m]/k^2 (ties: larger k, then
/// smaller m, then lexicographically smallest member set). Matches the brute
/// force F exactly. Refuses oversized pools and suggests scaled_dp.
std::vector<Request> select_exact_dp(std::span<const Request> pool, Tokens memory_limit);

/// Same DP on memory quantized by lambda = max(1, eps*M/B):
/// m_hat = floor((s+o)/lambda), capacity floor(M/lambda). With lambda = 1 this
/// is exactly select_exact_dp; with lambda > 1 the true memory of the result
/// may overshoot M (quantization error), which callers measure, not bound.
std::vector<Request> select_scaled_dp(std::span<const Request> pool, Tokens memory_limit,
                                      const SelectorConfig& config);

/// Greedy seed (ascending s+o) refined by pairwise exchanges that strictly
/// decrease F while staying within memory; first improvement restarts the
/// scan. Terminates because the output sum strictly decreases.
std::vector<Request> select_local_swap(std::span<const Request> pool, Tokens memory_limit);

/// The exchange loop of select_local_swap applied to an externally seeded
/// batch (ids must name pool members). Used by the LP-guided planner.
std::vector<Request> refine_local_swap(const std::vector<Request>& seed,
                                       std::span<const Request> pool, Tokens memory_limit);

struct QuantileGreedyDetail {
    Tokens q_p = 0;  // footprint threshold (nearest-rank lower quantile)
    Tokens q_o = 0;  // output threshold
    std::vector<RequestId> phase1;
};

/// Two-phase sampling heuristic: phase 1 admits requests under the sampled
/// quantile thresholds in ascending-o order, phase 2 fills leftover capacity
/// in ascending o/(s+o) order.
std::vector<Request> select_quantile_greedy(std::span<const Request> pool, Tokens memory_limit,
                                            const SelectorConfig& config, std::uint64_t rng_seed,
                                            QuantileGreedyDetail* detail = nullptr);

/// Dispatch on config.kind (quantile_greedy uses config.seed).
std::vector<Request> select_batch(std::span<const Request> pool, Tokens memory_limit,
                                  const SelectorConfig& config);

}  // namespace kvsched
